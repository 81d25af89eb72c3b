#pragma once

#include <string>
#include <vector>

#include "geomsplat/config.hpp"
#include "geomsplat/gaussians.hpp"
#include "geomsplat/pixel_features.hpp"
#include "geomsplat/seed_generator.hpp"
#include "geomsplat/snowflake.hpp"
#include "geomsplat/volume.hpp"

namespace geomsplat {

// Full single-view geometry model: pixel features -> point cloud -> voxel
// grid -> fused volume -> seeds -> refinement pyramid -> Gaussians.
class PretrainModel {
public:
    PretrainModel(const TrainConfig& cfg, uint64_t seed);

    const TrainConfig& cfg() const { return cfg_; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }
    const PixelFeatureExtractor& extractor() const { return extractor_; }
    const FusionNet& fusion() const { return fusion_; }
    const VoxelQuerySet& queries() const { return queries_; }
    const CoarseAttnParams& coarse() const { return coarse_; }
    const DeformableAttnParams& dca() const { return dca_; }
    const MlpBlock& seed_decoder() const { return seed_decoder_; }
    const std::vector<SpdStage>& spd() const { return spd_; }
    const GaussianHead& gaussian() const { return gauss_; }

    double scale_base() const;  // scale_base_voxels * mean voxel edge

    // Disables gradient recording and optimizer updates for every parameter.
    void freeze();
    bool frozen() const { return frozen_; }

private:
    TrainConfig cfg_;
    ParamStore store_;
    PixelFeatureExtractor extractor_;
    FusionNet fusion_;
    VoxelQuerySet queries_;
    CoarseAttnParams coarse_;
    DeformableAttnParams dca_;
    MlpBlock seed_decoder_;
    std::vector<SpdStage> spd_;
    GaussianHead gauss_;
    bool frozen_ = false;
};

struct SceneForward {
    DenseVolume volume;
    Tensor seeds;                      // [d^3, 3]
    std::vector<Tensor> stage_outputs; // seeds, P1, ..., Pk
    GaussianSet gaussians;             // populated when requested
    long long dca_fetches = 0;
    int fps_points = 0;
};

// Runs the geometry pipeline on one observation. The voxel grid may be
// passed in (deterministic per observation, so trainers cache it).
SceneForward forward_scene(const PretrainModel& model, const Observation& obs,
                           bool with_gaussians);
SceneForward forward_scene(const PretrainModel& model, const VoxelGrid& grid,
                           bool with_gaussians);

// Deterministic preprocessing: pixel features -> back-projection (features
// attached per pixel) -> crop -> FPS -> voxelization.
VoxelGrid preprocess_observation(const PretrainModel& model, const Observation& obs);

}  // namespace geomsplat
