#pragma once

#include <string>

#include "geomsplat/mlp.hpp"
#include "geomsplat/tensor.hpp"

namespace geomsplat {

// Gaussian primitives ready for rasterization. Centers come from the refined
// points; the remaining parameters are regressed from sampled volume
// features. Quaternions are unit-norm (w,x,y,z); scales are positive meters.
struct GaussianSet {
    Tensor mu;       // [N,3]
    Tensor color;    // [N,3] in [0,1]
    Tensor opacity;  // [N,1] in (0,1)
    Tensor rotation; // [N,4] unit quaternions
    Tensor scale;    // [N,3] > 0

    int count() const { return mu.defined() ? mu.rows() : 0; }
};

// Residual trunk (equal-width) followed by a linear projection to the 11
// raw channels: color 3, opacity 1, rotation 4, scale 3.
struct GaussianHead {
    MlpBlock trunk;      // residual, [C ... C]
    Tensor w_out, b_out; // C -> 11
    double scale_base = 0.05;  // meters; s = scale_base * exp(clamp(logit, +-4))

    static GaussianHead create(ParamStore& store, const std::string& prefix, int channels,
                               int depth, double scale_base, Rng& rng);
    static GaussianHead attach(ParamStore& store, const std::string& prefix, int channels,
                               int depth, double scale_base);
};

inline constexpr int kGaussianRawChannels = 11;

// features: [N,C] sampled at the refined points; mu passes through
// untouched. Zero raw logits give color 0.5, opacity 0.5, identity rotation
// (the quaternion channel carries a +w offset before normalization) and
// scale = scale_base.
GaussianSet gaussian_head(const Tensor& mu, const Tensor& features, const GaussianHead& head);

}  // namespace geomsplat
