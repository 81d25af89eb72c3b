#include <benchmark/benchmark.h>

#include "geomsplat/rasterizer.hpp"
#include "geomsplat/seed_generator.hpp"
#include "geomsplat/snowflake.hpp"
#include "geomsplat/volume.hpp"
#include "geomsplat/voxelize.hpp"

using namespace geomsplat;

namespace {

Bounds unit_bounds() {
    Bounds b;
    b.v = {0, 0, 0, 1, 1, 1};
    return b;
}

VoxelGrid random_grid(int D, int feat_channels, uint64_t seed) {
    Rng rng(seed);
    PointCloud cloud;
    for (int i = 0; i < 512; ++i) {
        cloud.points.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        cloud.colors.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        std::vector<double> f(feat_channels);
        for (auto& v : f) v = rng.uniform(-1, 1);
        cloud.features.push_back(std::move(f));
    }
    return voxelize(cloud, D, unit_bounds());
}

DenseVolume random_volume(int D, int C, uint64_t seed) {
    DenseVolume v;
    v.resolution = D;
    v.channels = C;
    v.bounds = unit_bounds();
    std::vector<double> vals(static_cast<size_t>(D) * D * D * C);
    Rng rng(seed);
    for (auto& x : vals) x = rng.uniform(-1, 1);
    v.values = Tensor({D * D * D, C}, std::move(vals));
    return v;
}

void BM_fuse_forward(benchmark::State& state) {
    const int D = static_cast<int>(state.range(0));
    const int C = 16, C2D = 8;
    ParamStore store;
    Rng rng(1);
    FusionNet net = FusionNet::create(store, "fuse", kOccupancyChannels + C2D, C, rng);
    VoxelGrid grid = random_grid(D, C2D, 2);
    for (auto _ : state) {
        DenseVolume v = fuse(grid, net);
        benchmark::DoNotOptimize(v.values.data().data());
    }
}
BENCHMARK(BM_fuse_forward)->Arg(16)->Arg(20);

void BM_chamfer(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(3);
    std::vector<double> av(n * 3), bv(n * 3);
    for (auto& v : av) v = rng.uniform(0, 1);
    for (auto& v : bv) v = rng.uniform(0, 1);
    Tensor a({n, 3}, av), b({n, 3}, bv);
    for (auto _ : state) {
        Tensor l = chamfer_l2(a, b);
        benchmark::DoNotOptimize(l.value());
    }
}
BENCHMARK(BM_chamfer)->Arg(512)->Arg(1024)->Arg(2744);

void BM_rasterize(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(5);
    std::vector<double> mu, color, op, quat, scl;
    for (int i = 0; i < n; ++i) {
        mu.insert(mu.end(), {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(1.0, 2.5)});
        color.insert(color.end(), {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        op.push_back(rng.uniform(0.2, 0.9));
        quat.insert(quat.end(), {1, 0, 0, 0});
        scl.insert(scl.end(), {0.05, 0.05, 0.05});
    }
    GaussianSet g;
    g.mu = Tensor({n, 3}, mu);
    g.color = Tensor({n, 3}, color);
    g.opacity = Tensor({n, 1}, op);
    g.rotation = Tensor({n, 4}, quat);
    g.scale = Tensor({n, 3}, scl);
    CameraModel cam;
    cam.width = cam.height = 64;
    cam.fx = cam.fy = 70;
    cam.cx = cam.cy = 31.5;
    cam.T = {0, 0, 0};
    RenderTarget target;
    target.width = target.height = 64;
    for (auto _ : state) {
        RasterResult r = rasterize(g, cam, target);
        benchmark::DoNotOptimize(r.image.data().data());
    }
}
BENCHMARK(BM_rasterize)->Arg(500)->Arg(1000);

void BM_deformable_attention(benchmark::State& state) {
    const int D = static_cast<int>(state.range(0));
    ParamStore store;
    Rng rng(7);
    const int C = 16;
    VoxelQuerySet queries = VoxelQuerySet::create(store, "seed", 5, C, rng);
    DeformableAttnParams dca = DeformableAttnParams::create(store, "seed.dca", C, 8, 32, rng);
    DenseVolume vol = random_volume(D, C, 9);
    Tensor proposals = Tensor::full({125, C}, 0.1);
    for (auto _ : state) {
        DeformableAttnResult r = deformable_cross_attention(proposals, queries, vol, dca);
        benchmark::DoNotOptimize(r.tokens.data().data());
    }
}
BENCHMARK(BM_deformable_attention)->Arg(16)->Arg(20)->Arg(32);

void BM_trilinear(benchmark::State& state) {
    DenseVolume vol = random_volume(20, 16, 11);
    const int n = static_cast<int>(state.range(0));
    Rng rng(13);
    std::vector<double> coords(n * 3);
    for (auto& v : coords) v = rng.uniform(0, 1);
    Tensor c({n, 3}, coords);
    for (auto _ : state) {
        Tensor out = sample_trilinear(vol, c);
        benchmark::DoNotOptimize(out.data().data());
    }
}
BENCHMARK(BM_trilinear)->Arg(1000)->Arg(2744);

}  // namespace

BENCHMARK_MAIN();
