#include "geomsplat/pipeline.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

PretrainModel::PretrainModel(const TrainConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      extractor_(cfg.feature_mode == "handcrafted" ? PixelFeatureMode::Handcrafted
                                                   : PixelFeatureMode::RandomProjection,
                 cfg.C2D, seed ^ 0xfeedULL) {
    cfg_.validate();
    Rng rng(seed);
    fusion_ = FusionNet::create(store_, "fuse", kOccupancyChannels + cfg.C2D, cfg.C, rng);
    queries_ = VoxelQuerySet::create(store_, "seed", cfg.d, cfg.C, rng);
    coarse_ = CoarseAttnParams::create(store_, "seed.coarse", cfg.C, rng);
    dca_ = DeformableAttnParams::create(store_, "seed.dca", cfg.C, cfg.Np, cfg.hidden, rng);
    dca_.offset_cap_fraction = cfg.offset_cap;
    seed_decoder_ = MlpBlock::create(store_, "seed.decoder", {cfg.C, cfg.hidden, 3},
                                     Activation::LeakyRelu, false, rng);
    const double disp_cap = cfg.displacement_cap_frac * cfg.bounds().diagonal();
    const int ctx_channels = cfg.C / 2;
    for (size_t i = 0; i < cfg.r_schedule.size(); ++i) {
        spd_.push_back(SpdStage::create(store_, "spd" + std::to_string(i), cfg.C, ctx_channels,
                                        /*has_context_input=*/i > 0, cfg.r_schedule[i],
                                        cfg.hidden, disp_cap, rng));
    }
    gauss_ = GaussianHead::create(store_, "gauss", cfg.C, 2, scale_base(), rng);
}

double PretrainModel::scale_base() const {
    const Bounds b = cfg_.bounds();
    const double edge = (b.extent(0) + b.extent(1) + b.extent(2)) / (3.0 * cfg_.D);
    return cfg_.scale_base_voxels * edge;
}

void PretrainModel::freeze() {
    for (auto& e : store_.entries()) {
        e.tensor.set_requires_grad(false);
        e.trainable = false;
    }
    frozen_ = true;
}

VoxelGrid preprocess_observation(const PretrainModel& model, const Observation& obs) {
    const TrainConfig& cfg = model.cfg();
    const std::vector<double> feat2d =
        model.extractor().extract(obs.rgb, obs.width, obs.height);

    PointCloud cloud = back_project(obs);
    // attach per-pixel features by projecting each point back to its pixel
    cloud.features.resize(cloud.points.size());
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        const PixelProjection pp = project(cloud.points[i], obs.camera);
        const int x = std::min(obs.width - 1, std::max(0, static_cast<int>(std::lround(pp.u))));
        const int y = std::min(obs.height - 1, std::max(0, static_cast<int>(std::lround(pp.v))));
        const double* f = &feat2d[(static_cast<size_t>(y) * obs.width + x) * cfg.C2D];
        cloud.features[i].assign(f, f + cfg.C2D);
    }

    PointCloud cropped = crop(cloud, cfg.bounds());
    PointCloud sampled = farthest_point_sample(cropped, cfg.fps_sample_num, 0);
    return voxelize(sampled, cfg.D, cfg.bounds());
}

SceneForward forward_scene(const PretrainModel& model, const VoxelGrid& grid,
                           bool with_gaussians) {
    SceneForward out;
    out.volume = fuse(grid, model.fusion());

    CoarseAttnResult coarse = coarse_cross_attention(model.queries(), out.volume, model.coarse());
    DeformableAttnResult dca =
        deformable_cross_attention(coarse.proposals, model.queries(), out.volume, model.dca());
    out.dca_fetches = dca.fetches;
    out.seeds = decode_seeds(dca.tokens, model.seed_decoder(), out.volume.bounds);

    out.stage_outputs.push_back(out.seeds);
    Tensor points = out.seeds;
    Tensor context;
    for (const SpdStage& stage : model.spd()) {
        SpdResult r = spd_step(points, out.volume, context, stage);
        points = r.children;
        context = r.context;
        out.stage_outputs.push_back(points);
    }

    if (with_gaussians) {
        Tensor gfeat = sample_trilinear(out.volume, points);
        out.gaussians = gaussian_head(points, gfeat, model.gaussian());
    }
    return out;
}

SceneForward forward_scene(const PretrainModel& model, const Observation& obs,
                           bool with_gaussians) {
    VoxelGrid grid = preprocess_observation(model, obs);
    SceneForward out = forward_scene(model, grid, with_gaussians);
    out.fps_points = 0;
    for (int c = 0; c < grid.cells(); ++c)
        if (grid.occupancy[static_cast<size_t>(c) * kOccupancyChannels] > 0) ++out.fps_points;
    return out;
}

}  // namespace geomsplat
