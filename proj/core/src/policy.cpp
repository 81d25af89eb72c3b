#include "geomsplat/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geomsplat/errors.hpp"

namespace geomsplat {

PolicyModel PolicyModel::create(const PolicyConfig& cfg, int volume_channels, uint64_t seed) {
    PolicyModel m;
    m.cfg = cfg;
    Rng rng(seed);
    const int pdim = cfg.patch_size * cfg.patch_size * 4;  // RGB-D
    const double sp = 1.0 / std::sqrt(static_cast<double>(pdim));
    m.patch_w = m.store.add_uniform("policy.patch.w", {pdim, cfg.token_dim}, -sp, sp, rng);
    m.patch_b = m.store.add("policy.patch.b", Tensor::zeros({1, cfg.token_dim}, true));
    const double sl = 1.0 / std::sqrt(static_cast<double>(cfg.token_dim));
    m.latents = m.store.add_uniform("policy.latents", {cfg.num_latents, cfg.token_dim}, -sl, sl, rng);
    for (int b = 0; b < cfg.attn_blocks; ++b) {
        AttnBlock blk;
        const std::string p = "policy.block" + std::to_string(b);
        blk.wq = m.store.add_uniform(p + ".wq", {cfg.token_dim, cfg.token_dim}, -sl, sl, rng);
        blk.wk = m.store.add_uniform(p + ".wk", {cfg.token_dim, cfg.token_dim}, -sl, sl, rng);
        blk.wv = m.store.add_uniform(p + ".wv", {cfg.token_dim, cfg.token_dim}, -sl, sl, rng);
        blk.mlp = MlpBlock::create(m.store, p + ".mlp", {cfg.token_dim, cfg.hidden, cfg.token_dim},
                                   Activation::LeakyRelu, true, rng);
        m.blocks.push_back(std::move(blk));
    }
    m.dynamics_head = MlpBlock::create(
        m.store, "policy.dynamics",
        {cfg.token_dim + 8 + cfg.task_emb_dim, cfg.hidden, cfg.token_dim},
        Activation::LeakyRelu, false, rng);
    const double st = 1.0 / std::sqrt(static_cast<double>(cfg.task_emb_dim));
    m.task_table = m.store.add_uniform("policy.task_table", {cfg.num_tasks, cfg.task_emb_dim},
                                       -st, st, rng);
    m.action_head = MlpBlock::create(m.store, "policy.action", {cfg.token_dim, cfg.hidden, 8},
                                     Activation::LeakyRelu, false, rng);
    // fixed random projection; reference tokens are targets, never trained
    const double sr = 1.0 / std::sqrt(static_cast<double>(volume_channels));
    Rng ref_rng = rng.fork(17);
    Tensor proj = Tensor::zeros({volume_channels, cfg.token_dim}, false);
    for (auto& v : proj.mutable_data()) v = ref_rng.uniform(-sr, sr);
    m.ref_projection = m.store.add("policy.ref_projection", proj, false);
    return m;
}

namespace {

// fixed sinusoidal code so patch tokens carry their image position
std::vector<double> patch_position_code(int patches_x, int patches_y, int dim) {
    std::vector<double> code(static_cast<size_t>(patches_x) * patches_y * dim);
    for (int py = 0; py < patches_y; ++py)
        for (int px = 0; px < patches_x; ++px) {
            double* row = &code[(static_cast<size_t>(py) * patches_x + px) * dim];
            const double u = patches_x > 1 ? static_cast<double>(px) / (patches_x - 1) : 0.0;
            const double v = patches_y > 1 ? static_cast<double>(py) / (patches_y - 1) : 0.0;
            for (int k = 0; k < dim; ++k) {
                const double freq = std::pow(2.0, k / 4) * M_PI;
                const double arg = (k % 2 == 0 ? u : v) * freq;
                row[k] = 0.25 * ((k % 4 < 2) ? std::sin(arg) : std::cos(arg));
            }
        }
    return code;
}

}  // namespace

LatentTokens encode_policy(const Observation& obs, const PolicyModel& model) {
    const int p = model.cfg.patch_size;
    if (obs.width % p != 0 || obs.height % p != 0)
        throw ConfigError("encode_policy: image size not divisible by patch size");
    const int px = obs.width / p, py = obs.height / p;
    const int num_patches = px * py;
    const int pdim = p * p * 4;

    std::vector<double> patches(static_cast<size_t>(num_patches) * pdim);
    for (int iy = 0; iy < py; ++iy)
        for (int ix = 0; ix < px; ++ix) {
            double* row = &patches[(static_cast<size_t>(iy) * px + ix) * pdim];
            int k = 0;
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x) {
                    const int gy = iy * p + y, gx = ix * p + x;
                    const double* c = obs.rgb_at(gy, gx);
                    row[k++] = c[0];
                    row[k++] = c[1];
                    row[k++] = c[2];
                    row[k++] = obs.depth_at(gy, gx);
                }
        }
    Tensor patch_in({num_patches, pdim}, std::move(patches));
    Tensor tokens = add_row(matmul(patch_in, model.patch_w), model.patch_b);
    tokens = add(tokens, Tensor({num_patches, model.cfg.token_dim},
                                patch_position_code(px, py, model.cfg.token_dim)));

    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(model.cfg.token_dim));
    Tensor lat = model.latents;
    for (const auto& blk : model.blocks) {
        Tensor q = matmul(lat, blk.wq);
        Tensor k = matmul(tokens, blk.wk);
        Tensor v = matmul(tokens, blk.wv);
        Tensor attn = softmax_rows(scale(matmul_nt(q, k), inv_sqrt));
        lat = add(lat, matmul(attn, v));
        lat = forward_mlp(blk.mlp, lat);  // residual block
    }
    return {lat, TokenRole::PolicyLatent};
}

LatentTokens reference_tokens(const DenseVolume& volume, const PolicyModel& model) {
    const int p = model.cfg.volume_patch;
    const int D = volume.resolution;
    if (D % p != 0) throw ConfigError("reference_tokens: resolution not divisible by patch size");
    const int dp = D / p;
    const int num_patches = dp * dp * dp;
    const int M = model.cfg.num_latents;
    if (num_patches < M) throw ConfigError("reference_tokens: fewer patches than latents");
    const int C = volume.channels;
    const int ct = model.cfg.token_dim;

    // mean-pool blocks (plain arithmetic: the source is frozen)
    const auto vals = volume.values.data();
    std::vector<double> pooled(static_cast<size_t>(num_patches) * C, 0.0);
    const double inv = 1.0 / (p * p * p);
    for (int bx = 0; bx < dp; ++bx)
        for (int by = 0; by < dp; ++by)
            for (int bz = 0; bz < dp; ++bz) {
                double* row = &pooled[static_cast<size_t>((bx * dp + by) * dp + bz) * C];
                for (int x = bx * p; x < (bx + 1) * p; ++x)
                    for (int y = by * p; y < (by + 1) * p; ++y)
                        for (int z = bz * p; z < (bz + 1) * p; ++z) {
                            const double* v = &vals[static_cast<size_t>((x * D + y) * D + z) * C];
                            for (int c = 0; c < C; ++c) row[c] += v[c] * inv;
                        }
            }

    const auto proj = model.ref_projection.data();
    std::vector<double> mapped(static_cast<size_t>(num_patches) * ct, 0.0);
    for (int i = 0; i < num_patches; ++i)
        for (int c = 0; c < C; ++c) {
            const double v = pooled[static_cast<size_t>(i) * C + c];
            if (v == 0.0) continue;
            for (int k = 0; k < ct; ++k)
                mapped[static_cast<size_t>(i) * ct + k] += v * proj[static_cast<size_t>(c) * ct + k];
        }

    std::vector<double> norms(num_patches);
    for (int i = 0; i < num_patches; ++i) {
        double s = 0.0;
        for (int k = 0; k < ct; ++k) {
            const double v = mapped[static_cast<size_t>(i) * ct + k];
            s += v * v;
        }
        norms[i] = s;
    }
    std::vector<int> order(num_patches);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return norms[a] > norms[b]; });

    std::vector<int> kept(order.begin(), order.begin() + M);
    std::sort(kept.begin(), kept.end());  // canonical token order
    std::vector<double> out(static_cast<size_t>(M) * ct);
    for (int i = 0; i < M; ++i)
        std::copy_n(&mapped[static_cast<size_t>(kept[i]) * ct], ct, &out[static_cast<size_t>(i) * ct]);
    return {Tensor({M, ct}, std::move(out)), TokenRole::Reference};
}

LatentTokens latent_dynamics(const LatentTokens& x, const Proprio& proprio, int task_id,
                             const PolicyModel& model) {
    const int M = x.tokens.rows();
    if (task_id < 0 || task_id >= model.cfg.num_tasks)
        throw ContractError("latent_dynamics: task id out of range");
    const auto pf = proprio.flat();
    Tensor prop({1, 8}, std::vector<double>(pf.begin(), pf.end()));
    Tensor cond = concat_cols({prop, select_row(model.task_table, task_id)});
    Tensor input = concat_cols({x.tokens, repeat_rows(cond, M)});
    Tensor delta = forward_mlp(model.dynamics_head, input);
    return {add(x.tokens, delta), TokenRole::PredictedNext};
}

Tensor decode_action(const LatentTokens& next_tokens, const PolicyModel& model) {
    const int M = next_tokens.tokens.rows();
    Tensor pooled = matmul(Tensor({1, M}, std::vector<double>(M, 1.0 / M)), next_tokens.tokens);
    Tensor raw = forward_mlp(model.action_head, pooled);  // [1, 8]
    Tensor pos = slice_cols(raw, 0, 3);
    Tensor quat = l2_normalize_rows(
        add_row(slice_cols(raw, 3, 7), Tensor({1, 4}, {1.0, 0.0, 0.0, 0.0})), 0.0);
    Tensor grip = sigmoid_t(slice_cols(raw, 7, 8));
    return concat_cols({pos, quat, grip});
}

Tensor mean_one_minus_cosine(const Tensor& a, const Tensor& b, int* zero_norm_counter) {
    if (a.shape() != b.shape()) throw DimensionError("cosine loss: shape mismatch");
    const int n = a.rows(), c = a.cols();
    const auto da = a.data(), db = b.data();
    std::vector<double> na_(n), nb_(n), dots(n);
    double acc = 0.0;
    int zero_norm = 0;
    for (int i = 0; i < n; ++i) {
        double saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < c; ++j) {
            const double va = da[static_cast<size_t>(i) * c + j];
            const double vb = db[static_cast<size_t>(i) * c + j];
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
        }
        na_[i] = std::sqrt(saa);
        nb_[i] = std::sqrt(sbb);
        dots[i] = sab;
        if (na_[i] == 0.0 || nb_[i] == 0.0) {
            ++zero_norm;  // term treated as 0
        } else {
            acc += 1.0 - sab / (na_[i] * nb_[i]);
        }
    }
    if (zero_norm_counter) *zero_norm_counter += zero_norm;

    detail::Node* pa = a.node().get();
    detail::Node* pb = b.node().get();
    Tensor r = make_node({1}, {acc / n}, {a, b}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [pa, pb, nr, n, c, na_, nb_, dots] {
            const double g = nr->grad[0] / n;
            for (int i = 0; i < n; ++i) {
                if (na_[i] == 0.0 || nb_[i] == 0.0) continue;
                const double inv_ab = 1.0 / (na_[i] * nb_[i]);
                const double cosv = dots[i] * inv_ab;
                if (pa->requires_grad) {
                    auto& ga = pa->ensure_grad();
                    for (int j = 0; j < c; ++j) {
                        const double va = pa->data[static_cast<size_t>(i) * c + j];
                        const double vb = pb->data[static_cast<size_t>(i) * c + j];
                        // d(1-cos)/da = -(b/(|a||b|) - cos * a/|a|^2)
                        ga[static_cast<size_t>(i) * c + j] +=
                            g * -(vb * inv_ab - cosv * va / (na_[i] * na_[i]));
                    }
                }
                if (pb->requires_grad) {
                    auto& gb = pb->ensure_grad();
                    for (int j = 0; j < c; ++j) {
                        const double va = pa->data[static_cast<size_t>(i) * c + j];
                        const double vb = pb->data[static_cast<size_t>(i) * c + j];
                        gb[static_cast<size_t>(i) * c + j] +=
                            g * -(va * inv_ab - cosv * vb / (nb_[i] * nb_[i]));
                    }
                }
            }
        };
    return r;
}

DistillLoss distill_loss(const LatentTokens& x_t, const LatentTokens& ref_t,
                         const LatentTokens& x_next, const LatentTokens& ref_next) {
    DistillLoss out;
    Tensor term1 = mean_one_minus_cosine(x_t.tokens, ref_t.tokens, &out.zero_norm_tokens);
    Tensor term2 = mean_one_minus_cosine(x_next.tokens, ref_next.tokens, &out.zero_norm_tokens);
    out.step_t = term1.value();
    out.step_t1 = term2.value();
    out.total = add(term1, term2);
    return out;
}

PolicyLoss policy_loss(const Tensor& action, const std::array<double, 8>& expert,
                       const Tensor& distill, double lambda_distill) {
    if (lambda_distill < 0.0) throw ContractError("policy_loss: lambda must be >= 0");
    if (action.numel() != 8) throw DimensionError("policy_loss: action must have 8 entries");
    Tensor target({1, 8}, std::vector<double>(expert.begin(), expert.end()));
    Tensor diff = sub(action, target);
    Tensor mse_term = sum_all(mul(diff, diff));
    PolicyLoss out;
    out.action_term = mse_term.value();
    out.distill_term = distill.defined() ? distill.value() : 0.0;
    out.total = distill.defined() ? add(mse_term, scale(distill, lambda_distill)) : mse_term;
    return out;
}

}  // namespace geomsplat
