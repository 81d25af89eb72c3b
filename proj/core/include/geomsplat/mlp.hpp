#pragma once

#include <string>
#include <vector>

#include "geomsplat/optim.hpp"
#include "geomsplat/tensor.hpp"

namespace geomsplat {

enum class Activation { Linear, LeakyRelu, Relu, Tanh, Sigmoid };

Activation activation_from_string(const std::string& name);
std::string activation_to_string(Activation a);

// Dense feed-forward block. Hidden layers are activated, the last layer is
// linear. With residual=true the input is added to the output, which requires
// equal in/out widths; a zero-weight residual block is then the identity map.
struct MlpBlock {
    std::vector<int> widths;
    std::vector<Tensor> weights;  // widths[i] x widths[i+1]
    std::vector<Tensor> biases;   // widths[i+1]
    Activation activation = Activation::LeakyRelu;
    bool residual = false;

    int in_width() const { return widths.front(); }
    int out_width() const { return widths.back(); }

    // Registers fan-in-scaled uniform weights and zero biases in `store`
    // under "<prefix>.w<i>" / "<prefix>.b<i>".
    static MlpBlock create(ParamStore& store, const std::string& prefix,
                           std::vector<int> widths, Activation activation, bool residual,
                           Rng& rng);

    // Rebinds to tensors already present in `store` (checkpoint load path).
    static MlpBlock attach(ParamStore& store, const std::string& prefix,
                           std::vector<int> widths, Activation activation, bool residual);
};

// x: [N, Din] -> [N, Dout]
Tensor forward_mlp(const MlpBlock& block, const Tensor& x);

Tensor apply_activation(const Tensor& x, Activation a);

inline constexpr double kLeakySlope = 0.01;

}  // namespace geomsplat
