#include "geomsplat/seed_generator.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

VoxelQuerySet VoxelQuerySet::create(ParamStore& store, const std::string& prefix, int d,
                                    int channels, Rng& rng) {
    if (d < 1) throw ConfigError("voxel queries: d must be positive");
    VoxelQuerySet q;
    q.d = d;
    q.channels = channels;
    const double s = 1.0 / std::sqrt(static_cast<double>(channels));
    q.queries = store.add_uniform(prefix + ".queries", {d * d * d, channels}, -s, s, rng);
    q.reference_positions.resize(static_cast<size_t>(q.count()) * 3);
    int row = 0;
    for (int x = 0; x < d; ++x)
        for (int y = 0; y < d; ++y)
            for (int z = 0; z < d; ++z, ++row) {
                q.reference_positions[row * 3] = (x + 0.5) / d;
                q.reference_positions[row * 3 + 1] = (y + 0.5) / d;
                q.reference_positions[row * 3 + 2] = (z + 0.5) / d;
            }
    return q;
}

VoxelQuerySet VoxelQuerySet::attach(ParamStore& store, const std::string& prefix, int d,
                                    int channels) {
    Rng unused(0);
    ParamStore tmp;
    VoxelQuerySet q = create(tmp, prefix, d, channels, unused);
    q.queries = store.get(prefix + ".queries");
    return q;
}

Tensor VoxelQuerySet::world_reference_positions(const Bounds& bounds) const {
    std::vector<double> w(reference_positions.size());
    for (int i = 0; i < count(); ++i)
        for (int a = 0; a < 3; ++a)
            w[static_cast<size_t>(i) * 3 + a] =
                bounds.min(a) + reference_positions[static_cast<size_t>(i) * 3 + a] * bounds.extent(a);
    return Tensor({count(), 3}, std::move(w));
}

CoarseAttnParams CoarseAttnParams::create(ParamStore& store, const std::string& prefix,
                                          int channels, Rng& rng) {
    CoarseAttnParams p;
    const double s = 1.0 / std::sqrt(static_cast<double>(channels));
    p.wq = store.add_uniform(prefix + ".wq", {channels, channels}, -s, s, rng);
    p.wk = store.add_uniform(prefix + ".wk", {channels, channels}, -s, s, rng);
    p.wv = store.add_uniform(prefix + ".wv", {channels, channels}, -s, s, rng);
    return p;
}

CoarseAttnParams CoarseAttnParams::attach(ParamStore& store, const std::string& prefix) {
    CoarseAttnParams p;
    p.wq = store.get(prefix + ".wq");
    p.wk = store.get(prefix + ".wk");
    p.wv = store.get(prefix + ".wv");
    return p;
}

CoarseAttnResult coarse_cross_attention(const VoxelQuerySet& queries, const DenseVolume& volume,
                                        const CoarseAttnParams& params,
                                        const Tensor* logit_bias) {
    if (queries.channels != volume.channels)
        throw DimensionError("coarse attention: query/volume channel mismatch");
    Tensor pooled = avg_pool3d(volume.values, volume.resolution, queries.d);
    Tensor q = matmul(queries.queries, params.wq);
    Tensor k = matmul(pooled, params.wk);
    Tensor v = matmul(pooled, params.wv);
    Tensor logits = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(queries.channels)));
    if (logit_bias) logits = add_row(logits, *logit_bias);
    Tensor weights = softmax_rows(logits);
    Tensor proposals = add(queries.queries, matmul(weights, v));
    return {proposals, weights};
}

DeformableAttnParams DeformableAttnParams::create(ParamStore& store, const std::string& prefix,
                                                  int channels, int offsets_per_query,
                                                  int hidden, Rng& rng) {
    DeformableAttnParams p;
    p.offsets_per_query = offsets_per_query;
    p.offset_head = MlpBlock::create(store, prefix + ".offset", {channels, hidden, offsets_per_query * 3},
                                     Activation::LeakyRelu, false, rng);
    p.cpb = MlpBlock::create(store, prefix + ".cpb", {3, hidden, 1}, Activation::LeakyRelu, false,
                             rng);
    const double s = 1.0 / std::sqrt(static_cast<double>(channels));
    p.wq = store.add_uniform(prefix + ".wq", {channels, channels}, -s, s, rng);
    p.wk = store.add_uniform(prefix + ".wk", {channels, channels}, -s, s, rng);
    p.wv = store.add_uniform(prefix + ".wv", {channels, channels}, -s, s, rng);
    return p;
}

DeformableAttnParams DeformableAttnParams::attach(ParamStore& store, const std::string& prefix,
                                                  int channels, int offsets_per_query,
                                                  int hidden) {
    DeformableAttnParams p;
    p.offsets_per_query = offsets_per_query;
    p.offset_head = MlpBlock::attach(store, prefix + ".offset",
                                     {channels, hidden, offsets_per_query * 3},
                                     Activation::LeakyRelu, false);
    p.cpb = MlpBlock::attach(store, prefix + ".cpb", {3, hidden, 1}, Activation::LeakyRelu, false);
    p.wq = store.get(prefix + ".wq");
    p.wk = store.get(prefix + ".wk");
    p.wv = store.get(prefix + ".wv");
    return p;
}

DeformableAttnResult deformable_cross_attention(const Tensor& proposals,
                                                const VoxelQuerySet& queries,
                                                const DenseVolume& volume,
                                                const DeformableAttnParams& params) {
    const int n = proposals.rows();
    const int C = proposals.cols();
    const int np = params.offsets_per_query;
    if (n != queries.count()) throw DimensionError("deformable attention: query count mismatch");

    // capped offsets around each query's reference position
    Tensor raw = forward_mlp(params.offset_head, proposals);       // [n, np*3]
    Tensor squashed = tanh_t(reshape(raw, {n * np, 3}));           // in (-1,1)
    std::vector<double> cap(static_cast<size_t>(n) * np * 3);
    for (int i = 0; i < n * np; ++i)
        for (int a = 0; a < 3; ++a)
            cap[static_cast<size_t>(i) * 3 + a] = params.offset_cap_fraction * volume.bounds.extent(a);
    Tensor offsets = mul(squashed, Tensor({n * np, 3}, std::move(cap)));

    Tensor ref = queries.world_reference_positions(volume.bounds);  // [n,3] constant
    Tensor positions = add(repeat_rows(ref, np), offsets);          // [n*np, 3]

    FetchCounter counter;
    Tensor sampled = sample_trilinear(volume, positions, &counter);  // [n*np, C]
    Tensor keys = matmul(sampled, params.wk);
    Tensor values = matmul(sampled, params.wv);

    Tensor q_rep = repeat_rows(matmul(proposals, params.wq), np);    // [n*np, C]
    Tensor dots = rowwise_sum(mul(q_rep, keys));                     // [n*np, 1]
    Tensor logits = scale(reshape(dots, {n, np}), 1.0 / std::sqrt(static_cast<double>(C)));
    if (params.use_cpb) {
        Tensor bias = forward_mlp(params.cpb, offsets);              // [n*np, 1]
        logits = add(logits, reshape(bias, {n, np}));
    }
    Tensor weights = softmax_rows(logits);

    Tensor weighted = row_scale(values, reshape(weights, {n * np, 1}));
    Tensor tokens = group_sum_rows(weighted, np);

    DeformableAttnResult out;
    out.tokens = tokens;
    out.weights = weights;
    out.sample_positions.assign(positions.data().begin(), positions.data().end());
    out.fetches = counter.fetches;
    return out;
}

FullAttnResult full_cross_attention(const Tensor& proposals, const DenseVolume& volume,
                                    const CoarseAttnParams& params) {
    const int C = proposals.cols();
    Tensor q = matmul(proposals, params.wq);
    Tensor k = matmul(volume.values, params.wk);
    Tensor v = matmul(volume.values, params.wv);
    Tensor logits = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(C)));
    Tensor weights = softmax_rows(logits);
    FullAttnResult out;
    out.tokens = matmul(weights, v);
    // one read of every cell per query
    out.fetches = static_cast<long long>(proposals.rows()) * volume.cells();
    return out;
}

Tensor decode_seeds(const Tensor& seed_tokens, const MlpBlock& decoder, const Bounds& bounds) {
    if (decoder.out_width() != 3) throw DimensionError("decode_seeds: decoder output width must be 3");
    const int n = seed_tokens.rows();
    Tensor raw = tanh_t(forward_mlp(decoder, seed_tokens));  // [n,3] in (-1,1)
    std::vector<double> half(static_cast<size_t>(n) * 3);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) half[static_cast<size_t>(i) * 3 + a] = 0.5 * bounds.extent(a);
    Tensor scaled = mul(raw, Tensor({n, 3}, std::move(half)));
    const Vec3 c = bounds.center();
    return add_row(scaled, Tensor({1, 3}, {c[0], c[1], c[2]}));
}

}  // namespace geomsplat
