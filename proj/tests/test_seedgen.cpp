#include <doctest.h>

#include <cmath>

#include "geomsplat/gradcheck.hpp"
#include "geomsplat/seed_generator.hpp"

using namespace geomsplat;

namespace {

Bounds unit_bounds() {
    Bounds b;
    b.v = {0, 0, 0, 1, 1, 1};
    return b;
}

DenseVolume make_volume(int D, int C, std::vector<double> values, bool rg = false) {
    DenseVolume v;
    v.resolution = D;
    v.channels = C;
    v.bounds = unit_bounds();
    v.values = Tensor({D * D * D, C}, std::move(values), rg);
    return v;
}

struct SeedFixture {
    ParamStore store;
    VoxelQuerySet queries;
    CoarseAttnParams coarse;
    DeformableAttnParams dca;

    SeedFixture(int d, int C, int np, uint64_t seed = 7) {
        Rng rng(seed);
        queries = VoxelQuerySet::create(store, "seed", d, C, rng);
        coarse = CoarseAttnParams::create(store, "seed.coarse", C, rng);
        dca = DeformableAttnParams::create(store, "seed.dca", C, np, 8, rng);
    }
};

}  // namespace

TEST_CASE("query lattice is regular in [0,1]^3") {
    ParamStore store;
    Rng rng(1);
    VoxelQuerySet q = VoxelQuerySet::create(store, "q", 3, 4, rng);
    CHECK(q.count() == 27);
    // first lattice point at (0.5/3), spacing 1/3 per axis
    CHECK(q.reference_positions[0] == doctest::Approx(1.0 / 6));
    CHECK(q.reference_positions[3 * 13 + 0] == doctest::Approx(0.5));  // middle point
    for (int i = 0; i < q.count(); ++i)
        for (int a = 0; a < 3; ++a) {
            const double v = q.reference_positions[static_cast<size_t>(i) * 3 + a];
            CHECK(v > 0);
            CHECK(v < 1);
        }
}

TEST_CASE("coarse attention on a uniform volume is the uniform distribution") {
    SeedFixture fx(2, 4, 4);
    DenseVolume vol = make_volume(4, 4, std::vector<double>(4 * 4 * 4 * 4, 0.7));
    CoarseAttnResult r = coarse_cross_attention(fx.queries, vol, fx.coarse);
    const int cells = 8;
    for (int i = 0; i < fx.queries.count(); ++i)
        for (int j = 0; j < cells; ++j)
            CHECK(r.weights.at(i, j) == doctest::Approx(1.0 / cells).epsilon(1e-12));
}

TEST_CASE("coarse attention rows sum to one") {
    SeedFixture fx(2, 4, 4);
    Rng rng(3);
    std::vector<double> vals(4 * 4 * 4 * 4);
    for (auto& v : vals) v = rng.uniform(-2, 2);
    DenseVolume vol = make_volume(4, 4, vals);
    CoarseAttnResult r = coarse_cross_attention(fx.queries, vol, fx.coarse);
    for (int i = 0; i < r.weights.rows(); ++i) {
        double s = 0;
        for (int j = 0; j < r.weights.cols(); ++j) {
            s += r.weights.at(i, j);
            CHECK(r.weights.at(i, j) >= 0.0);
        }
        CHECK(std::fabs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("a +50 logit injection makes its cell dominant") {
    SeedFixture fx(2, 4, 4);
    Rng rng(5);
    std::vector<double> vals(4 * 4 * 4 * 4);
    for (auto& v : vals) v = rng.uniform(-1, 1);
    DenseVolume vol = make_volume(4, 4, vals);
    std::vector<double> bias(8, 0.0);
    bias[3] = 50.0;
    Tensor bias_t({1, 8}, bias);
    CoarseAttnResult r = coarse_cross_attention(fx.queries, vol, fx.coarse, &bias_t);
    for (int i = 0; i < r.weights.rows(); ++i) CHECK(r.weights.at(i, 3) > 0.999);
}

TEST_CASE("deformable attention with zero offsets and uniform logits returns the value projection at p0") {
    SeedFixture fx(2, 3, 5);
    // zero the offset head, the CPB and Wq so every sample sits at p0 with equal logits
    for (auto& e : fx.store.entries())
        if (e.id.starts_with("seed.dca.offset") || e.id.starts_with("seed.dca.cpb") ||
            e.id == "seed.dca.wq")
            for (auto& v : e.tensor.mutable_data()) v = 0.0;
    Rng rng(7);
    std::vector<double> vals(4 * 4 * 4 * 3);
    for (auto& v : vals) v = rng.uniform(-1, 1);
    DenseVolume vol = make_volume(4, 3, vals);
    Tensor proposals = Tensor::full({8, 3}, 0.25);
    DeformableAttnResult r = deformable_cross_attention(proposals, fx.queries, vol, fx.dca);

    // oracle: trilinear fetch at each reference position, value-projected
    Tensor ref = fx.queries.world_reference_positions(vol.bounds);
    Tensor fetched = sample_trilinear(vol, ref);
    Tensor expected = matmul(fetched, fx.dca.wv);
    for (int i = 0; i < 8; ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(r.tokens.at(i, c) == doctest::Approx(expected.at(i, c)).epsilon(1e-12));
    // uniform attention rows
    for (int i = 0; i < 8; ++i)
        for (int k = 0; k < 5; ++k) CHECK(r.weights.at(i, k) == doctest::Approx(0.2));
}

TEST_CASE("deformable attention performs exactly queries x offsets fetches") {
    for (int D : {4, 6, 8}) {
        SeedFixture fx(2, 3, 6);
        DenseVolume vol = make_volume(D, 3, std::vector<double>(D * D * D * 3, 0.1));
        Tensor proposals = Tensor::full({8, 3}, 0.1);
        DeformableAttnResult r = deformable_cross_attention(proposals, fx.queries, vol, fx.dca);
        CHECK(r.fetches == 8 * 6);  // independent of D
    }
}

TEST_CASE("full cross-attention reference counts queries x D^3 fetches") {
    SeedFixture fx(2, 3, 4);
    const int D = 6;
    DenseVolume vol = make_volume(D, 3, std::vector<double>(D * D * D * 3, 0.2));
    Tensor proposals = Tensor::full({8, 3}, 0.1);
    FullAttnResult full = full_cross_attention(proposals, vol, fx.coarse);
    CHECK(full.fetches == 8LL * D * D * D);
    CHECK(full.tokens.rows() == 8);
    CHECK(full.tokens.cols() == 3);
}

TEST_CASE("offset cap keeps every sampled location within bounds after clamping") {
    SeedFixture fx(3, 4, 8);
    // exaggerate the offset weights: tanh still caps the reach
    for (auto& e : fx.store.entries())
        if (e.id.starts_with("seed.dca.offset"))
            for (auto& v : e.tensor.mutable_data()) v *= 50.0;
    Rng rng(11);
    std::vector<double> vals(4 * 4 * 4 * 4);
    for (auto& v : vals) v = rng.uniform(-1, 1);
    DenseVolume vol = make_volume(4, 4, vals);
    std::vector<double> pv(27 * 4);
    for (auto& v : pv) v = rng.uniform(-2, 2);
    Tensor proposals({27, 4}, pv);
    DeformableAttnResult r = deformable_cross_attention(proposals, fx.queries, vol, fx.dca);
    for (int i = 0; i < 27; ++i) {
        double row_sum = 0;
        for (int k = 0; k < 8; ++k) {
            CHECK(r.weights.at(i, k) >= 0.0);
            row_sum += r.weights.at(i, k);
        }
        CHECK(std::fabs(row_sum - 1.0) < 1e-9);
    }
    for (int i = 0; i < 27; ++i)
        for (int k = 0; k < 8; ++k)
            for (int a = 0; a < 3; ++a) {
                const double ref =
                    fx.queries.reference_positions[static_cast<size_t>(i) * 3 + a];
                const double pos = r.sample_positions[(static_cast<size_t>(i) * 8 + k) * 3 + a];
                CHECK(std::fabs(pos - ref) <= fx.dca.offset_cap_fraction * 1.0 + 1e-12);
            }
}

TEST_CASE("zero-initialized CPB equals no CPB exactly") {
    SeedFixture fx(2, 4, 4);
    for (auto& e : fx.store.entries())
        if (e.id.starts_with("seed.dca.cpb"))
            for (auto& v : e.tensor.mutable_data()) v = 0.0;
    Rng rng(13);
    std::vector<double> vals(4 * 4 * 4 * 4);
    for (auto& v : vals) v = rng.uniform(-1, 1);
    DenseVolume vol = make_volume(4, 4, vals);
    std::vector<double> pv(8 * 4);
    for (auto& v : pv) v = rng.uniform(-1, 1);
    Tensor proposals({8, 4}, pv);

    DeformableAttnParams with_cpb = fx.dca;
    with_cpb.use_cpb = true;
    DeformableAttnParams without_cpb = fx.dca;
    without_cpb.use_cpb = false;
    DeformableAttnResult a = deformable_cross_attention(proposals, fx.queries, vol, with_cpb);
    DeformableAttnResult b = deformable_cross_attention(proposals, fx.queries, vol, without_cpb);
    for (int i = 0; i < a.tokens.numel(); ++i)
        CHECK(a.tokens.data()[i] == b.tokens.data()[i]);  // exact
}

TEST_CASE("deformable attention gradients (offsets, CPB, projections) pass FD") {
    SeedFixture fx(1, 3, 3, 17);
    Rng rng(19);
    std::vector<double> vals(4 * 4 * 4 * 3);
    for (auto& v : vals) v = rng.uniform(-1, 1);
    DenseVolume vol = make_volume(4, 3, vals);
    auto f = [&](ParamStore& s) {
        VoxelQuerySet q = VoxelQuerySet::attach(s, "seed", 1, 3);
        CoarseAttnParams cp = CoarseAttnParams::attach(s, "seed.coarse");
        DeformableAttnParams dp = DeformableAttnParams::attach(s, "seed.dca", 3, 3, 8);
        CoarseAttnResult cr = coarse_cross_attention(q, vol, cp);
        DeformableAttnResult dr = deformable_cross_attention(cr.proposals, q, vol, dp);
        return sum_all(mul(dr.tokens, dr.tokens));
    };
    CHECK(check_gradients(fx.store, f, 1e-3).all_pass);
}

TEST_CASE("decode_seeds: zero decoder lands at the workspace center") {
    ParamStore store;
    Rng rng(23);
    MlpBlock dec = MlpBlock::create(store, "dec", {4, 6, 3}, Activation::LeakyRelu, false, rng);
    for (auto& e : store.entries())
        for (auto& v : e.tensor.mutable_data()) v = 0.0;
    Bounds b;
    b.v = {-1, 0, 2, 3, 4, 6};
    Tensor tokens = Tensor::full({5, 4}, 0.9);
    Tensor seeds = decode_seeds(tokens, dec, b);
    for (int i = 0; i < 5; ++i) {
        CHECK(seeds.at(i, 0) == doctest::Approx(1.0));
        CHECK(seeds.at(i, 1) == doctest::Approx(2.0));
        CHECK(seeds.at(i, 2) == doctest::Approx(4.0));
    }
}

TEST_CASE("decode_seeds produces d^3 x 3 for d=7") {
    ParamStore store;
    Rng rng(29);
    VoxelQuerySet q = VoxelQuerySet::create(store, "q", 7, 4, rng);
    MlpBlock dec = MlpBlock::create(store, "dec", {4, 8, 3}, Activation::LeakyRelu, false, rng);
    Tensor tokens = Tensor::full({q.count(), 4}, 0.1);
    Tensor seeds = decode_seeds(tokens, dec, unit_bounds());
    CHECK(seeds.rows() == 343);
    CHECK(seeds.cols() == 3);
}

TEST_CASE("seeds stay inside the bounds across random decoders") {
    Bounds b;
    b.v = {-0.375, -0.5, 0.6, 1.0, 0.5, 1.6};
    Rng data_rng(31);
    std::vector<double> tv(16 * 4);
    for (auto& v : tv) v = data_rng.uniform(-3, 3);
    Tensor tokens({16, 4}, tv);
    for (int trial = 0; trial < 1000; ++trial) {
        ParamStore store;
        Rng rng(1000 + trial);
        MlpBlock dec = MlpBlock::create(store, "dec", {4, 8, 3}, Activation::LeakyRelu, false, rng);
        for (auto& e : store.entries())
            for (auto& v : e.tensor.mutable_data()) v *= 10.0;  // exaggerated weights
        Tensor seeds = decode_seeds(tokens, dec, b);
        for (int i = 0; i < seeds.rows(); ++i)
            for (int a = 0; a < 3; ++a) {
                CHECK(seeds.at(i, a) >= b.min(a));
                CHECK(seeds.at(i, a) <= b.max(a));
            }
    }
}
