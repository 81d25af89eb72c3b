#include "geomsplat/mlp.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

Activation activation_from_string(const std::string& name) {
    if (name == "linear") return Activation::Linear;
    if (name == "leaky_relu") return Activation::LeakyRelu;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw ConfigError("unknown activation: " + name);
}

std::string activation_to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "linear";
}

Tensor apply_activation(const Tensor& x, Activation a) {
    switch (a) {
        case Activation::Linear: return x;
        case Activation::LeakyRelu: return leaky_relu(x, kLeakySlope);
        case Activation::Relu: return leaky_relu(x, 0.0);
        case Activation::Tanh: return tanh_t(x);
        case Activation::Sigmoid: return sigmoid_t(x);
    }
    return x;
}

static void validate_widths(const std::vector<int>& widths, bool residual) {
    if (widths.size() < 2) throw ConfigError("mlp: need at least one layer");
    for (int w : widths)
        if (w < 1) throw ConfigError("mlp: non-positive layer width");
    if (residual && widths.front() != widths.back())
        throw ConfigError("mlp: residual block requires equal in/out width");
}

MlpBlock MlpBlock::create(ParamStore& store, const std::string& prefix,
                          std::vector<int> widths, Activation activation, bool residual,
                          Rng& rng) {
    validate_widths(widths, residual);
    MlpBlock b;
    b.widths = std::move(widths);
    b.activation = activation;
    b.residual = residual;
    for (size_t i = 0; i + 1 < b.widths.size(); ++i) {
        const int fan_in = b.widths[i], fan_out = b.widths[i + 1];
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        b.weights.push_back(store.add_uniform(prefix + ".w" + std::to_string(i),
                                              {fan_in, fan_out}, -s, s, rng));
        b.biases.push_back(store.add(prefix + ".b" + std::to_string(i),
                                     Tensor::zeros({1, fan_out}, true)));
    }
    return b;
}

MlpBlock MlpBlock::attach(ParamStore& store, const std::string& prefix,
                          std::vector<int> widths, Activation activation, bool residual) {
    validate_widths(widths, residual);
    MlpBlock b;
    b.widths = std::move(widths);
    b.activation = activation;
    b.residual = residual;
    for (size_t i = 0; i + 1 < b.widths.size(); ++i) {
        b.weights.push_back(store.get(prefix + ".w" + std::to_string(i)));
        b.biases.push_back(store.get(prefix + ".b" + std::to_string(i)));
    }
    return b;
}

Tensor forward_mlp(const MlpBlock& block, const Tensor& x) {
    if (x.cols() != block.in_width())
        throw DimensionError("forward_mlp: input width does not match first layer");
    Tensor h = x;
    const size_t layers = block.weights.size();
    for (size_t i = 0; i < layers; ++i) {
        h = add_row(matmul(h, block.weights[i]), block.biases[i]);
        if (i + 1 < layers) h = apply_activation(h, block.activation);
    }
    if (block.residual) h = add(h, x);
    return h;
}

}  // namespace geomsplat
