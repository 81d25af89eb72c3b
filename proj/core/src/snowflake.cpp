#include "geomsplat/snowflake.hpp"

#include <cmath>
#include <limits>

#include "geomsplat/errors.hpp"

namespace geomsplat {

SpdStage SpdStage::create(ParamStore& store, const std::string& prefix, int feature_channels,
                          int context_channels, bool has_context_input, int upsample_factor,
                          int hidden, double displacement_cap, Rng& rng) {
    if (upsample_factor < 1) throw ConfigError("spd: upsample factor must be >= 1");
    SpdStage s;
    s.upsample_factor = upsample_factor;
    s.context_channels = context_channels;
    s.displacement_cap = displacement_cap;
    const int in_w = feature_channels + 3 + (has_context_input ? context_channels : 0);
    s.displacement_head = MlpBlock::create(store, prefix + ".disp", {in_w, hidden, upsample_factor * 3},
                                           Activation::LeakyRelu, false, rng);
    s.context_head = MlpBlock::create(store, prefix + ".ctx",
                                      {in_w, hidden, upsample_factor * context_channels},
                                      Activation::LeakyRelu, false, rng);
    return s;
}

SpdStage SpdStage::attach(ParamStore& store, const std::string& prefix, int feature_channels,
                          int context_channels, bool has_context_input, int upsample_factor,
                          int hidden, double displacement_cap) {
    SpdStage s;
    s.upsample_factor = upsample_factor;
    s.context_channels = context_channels;
    s.displacement_cap = displacement_cap;
    const int in_w = feature_channels + 3 + (has_context_input ? context_channels : 0);
    s.displacement_head = MlpBlock::attach(store, prefix + ".disp",
                                           {in_w, hidden, upsample_factor * 3},
                                           Activation::LeakyRelu, false);
    s.context_head = MlpBlock::attach(store, prefix + ".ctx",
                                      {in_w, hidden, upsample_factor * context_channels},
                                      Activation::LeakyRelu, false);
    return s;
}

SpdResult spd_step(const Tensor& parents, const DenseVolume& volume, const Tensor& context,
                   const SpdStage& stage) {
    const int n = parents.rows();
    const int r = stage.upsample_factor;
    if (parents.cols() != 3) throw DimensionError("spd_step: parents must be N x 3");
    if (context.defined() && context.rows() != n)
        throw DimensionError("spd_step: context row count mismatch");

    Tensor feats = sample_trilinear(volume, parents);  // clamps parents into bounds
    std::vector<Tensor> parts = {feats, parents};
    if (context.defined()) parts.push_back(context);
    Tensor input = concat_cols(parts);

    Tensor raw = forward_mlp(stage.displacement_head, input);        // [n, r*3]
    Tensor capped = scale(tanh_t(reshape(raw, {n * r, 3})), stage.displacement_cap);
    Tensor children = add(repeat_rows(parents, r), capped);

    Tensor ctx_raw = forward_mlp(stage.context_head, input);         // [n, r*Cc]
    Tensor ctx = reshape(ctx_raw, {n * r, stage.context_channels});
    return {children, ctx};
}

Tensor chamfer_l2(const Tensor& a, const Tensor& b) {
    const int n = a.rows(), m = b.rows();
    if (n == 0 || m == 0) throw ContractError("chamfer_l2: empty point set");
    if (a.cols() != 3 || b.cols() != 3) throw DimensionError("chamfer_l2: points must be N x 3");

    const auto da = a.data(), db = b.data();
    auto d2 = [&](int i, int j) {
        const double dx = da[static_cast<size_t>(i) * 3] - db[static_cast<size_t>(j) * 3];
        const double dy = da[static_cast<size_t>(i) * 3 + 1] - db[static_cast<size_t>(j) * 3 + 1];
        const double dz = da[static_cast<size_t>(i) * 3 + 2] - db[static_cast<size_t>(j) * 3 + 2];
        return dx * dx + dy * dy + dz * dz;
    };

    std::vector<int> nn_ab(n), nn_ba(m);
    double sum_ab = 0.0, sum_ba = 0.0;
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int j = 0; j < m; ++j) {
            const double v = d2(i, j);
            if (v < best) {  // strict: ties keep the lowest index
                best = v;
                arg = j;
            }
        }
        nn_ab[i] = arg;
        sum_ab += best;
    }
    for (int j = 0; j < m; ++j) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int i = 0; i < n; ++i) {
            const double v = d2(i, j);
            if (v < best) {
                best = v;
                arg = i;
            }
        }
        nn_ba[j] = arg;
        sum_ba += best;
    }
    const double value = sum_ab / n + sum_ba / m;

    detail::Node* na = a.node().get();
    detail::Node* nb = b.node().get();
    Tensor rloss = make_node({1}, {value}, {a, b}, {});
    detail::Node* nr = rloss.node().get();
    if (rloss.requires_grad()) {
        nr->backprop = [na, nb, nr, n, m, nn_ab, nn_ba] {
            const double g = nr->grad[0];
            const bool ga = na->requires_grad, gb = nb->requires_grad;
            if (ga) na->ensure_grad();
            if (gb) nb->ensure_grad();
            const double wa = 2.0 * g / n, wb = 2.0 * g / m;
            for (int i = 0; i < n; ++i) {
                const int j = nn_ab[i];
                for (int c = 0; c < 3; ++c) {
                    const double diff = na->data[static_cast<size_t>(i) * 3 + c] -
                                        nb->data[static_cast<size_t>(j) * 3 + c];
                    if (ga) na->grad[static_cast<size_t>(i) * 3 + c] += wa * diff;
                    if (gb) nb->grad[static_cast<size_t>(j) * 3 + c] -= wa * diff;
                }
            }
            for (int j = 0; j < m; ++j) {
                const int i = nn_ba[j];
                for (int c = 0; c < 3; ++c) {
                    const double diff = nb->data[static_cast<size_t>(j) * 3 + c] -
                                        na->data[static_cast<size_t>(i) * 3 + c];
                    if (gb) nb->grad[static_cast<size_t>(j) * 3 + c] += wb * diff;
                    if (ga) na->grad[static_cast<size_t>(i) * 3 + c] -= wb * diff;
                }
            }
        };
    }
    return rloss;
}

ReconstructionLoss reconstruction_loss(const std::vector<Tensor>& stage_outputs,
                                       const PointCloud& gt_full) {
    if (gt_full.points.empty()) throw ContractError("reconstruction_loss: empty ground truth");
    if (stage_outputs.empty()) throw ContractError("reconstruction_loss: no stage outputs");

    ReconstructionLoss out;
    Tensor total;
    for (size_t i = 0; i < stage_outputs.size(); ++i) {
        const int target_n = stage_outputs[i].rows();
        PointCloud target = farthest_point_sample(
            gt_full, target_n, static_cast<int>(i) % static_cast<int>(gt_full.size()));
        std::vector<double> flat;
        flat.reserve(target.size() * 3);
        for (const auto& p : target.points) {
            flat.push_back(p[0]);
            flat.push_back(p[1]);
            flat.push_back(p[2]);
        }
        Tensor target_t({static_cast<int>(target.size()), 3}, std::move(flat));
        Tensor term = chamfer_l2(stage_outputs[i], target_t);
        out.per_stage.push_back(term.value());
        total = total.defined() ? add(total, term) : term;
    }
    out.total = total;
    return out;
}

}  // namespace geomsplat
