#include "geomsplat/gaussians.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

GaussianHead GaussianHead::create(ParamStore& store, const std::string& prefix, int channels,
                                  int depth, double scale_base, Rng& rng) {
    GaussianHead h;
    h.scale_base = scale_base;
    std::vector<int> widths(static_cast<size_t>(depth) + 1, channels);
    h.trunk = MlpBlock::create(store, prefix + ".trunk", widths, Activation::LeakyRelu, true, rng);
    const double s = 1.0 / std::sqrt(static_cast<double>(channels));
    h.w_out = store.add_uniform(prefix + ".out.w", {channels, kGaussianRawChannels}, -s, s, rng);
    h.b_out = store.add(prefix + ".out.b", Tensor::zeros({1, kGaussianRawChannels}, true));
    return h;
}

GaussianHead GaussianHead::attach(ParamStore& store, const std::string& prefix, int channels,
                                  int depth, double scale_base) {
    GaussianHead h;
    h.scale_base = scale_base;
    std::vector<int> widths(static_cast<size_t>(depth) + 1, channels);
    h.trunk = MlpBlock::attach(store, prefix + ".trunk", widths, Activation::LeakyRelu, true);
    h.w_out = store.get(prefix + ".out.w");
    h.b_out = store.get(prefix + ".out.b");
    return h;
}

GaussianSet gaussian_head(const Tensor& mu, const Tensor& features, const GaussianHead& head) {
    if (mu.rows() != features.rows()) throw DimensionError("gaussian_head: mu/feature row mismatch");
    Tensor h = forward_mlp(head.trunk, features);
    Tensor raw = add_row(matmul(h, head.w_out), head.b_out);  // [N, 11]
    if (raw.cols() != kGaussianRawChannels)
        throw DimensionError("gaussian_head: head output width must be 11");

    GaussianSet g;
    g.mu = mu;
    g.color = sigmoid_t(slice_cols(raw, 0, 3));
    g.opacity = sigmoid_t(slice_cols(raw, 3, 4));
    // +w offset so zero logits normalize to the identity quaternion
    Tensor quat_raw = add_row(slice_cols(raw, 4, 8), Tensor({1, 4}, {1.0, 0.0, 0.0, 0.0}));
    g.rotation = l2_normalize_rows(quat_raw, 0.0);
    g.scale = scale(exp_t(clamp_t(slice_cols(raw, 8, 11), -4.0, 4.0)), head.scale_base);
    return g;
}

}  // namespace geomsplat
