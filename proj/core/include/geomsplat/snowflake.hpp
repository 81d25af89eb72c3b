#pragma once

#include <string>
#include <vector>

#include "geomsplat/mlp.hpp"
#include "geomsplat/volume.hpp"

namespace geomsplat {

// One point-deconvolution stage: every parent point is duplicated
// `upsample_factor` times and displaced by predicted offsets; a context
// feature row is produced for each child and carried to the next stage.
struct SpdStage {
    int upsample_factor = 2;        // r
    int context_channels = 0;       // Cc
    double displacement_cap = 0.1;  // meters, tanh-capped per axis
    MlpBlock displacement_head;     // [C+3(+Cc)] -> ... -> r*3
    MlpBlock context_head;          // [C+3(+Cc)] -> ... -> r*Cc

    static SpdStage create(ParamStore& store, const std::string& prefix, int feature_channels,
                           int context_channels, bool has_context_input, int upsample_factor,
                           int hidden, double displacement_cap, Rng& rng);
    static SpdStage attach(ParamStore& store, const std::string& prefix, int feature_channels,
                           int context_channels, bool has_context_input, int upsample_factor,
                           int hidden, double displacement_cap);
};

struct SpdResult {
    Tensor children;  // [N*r, 3]
    Tensor context;   // [N*r, Cc]
};

// parents: [N,3]; context: [N,Cc] or undefined for the first stage. Per-point
// features come from trilinear lookups of the volume at the parent
// coordinates.
SpdResult spd_step(const Tensor& parents, const DenseVolume& volume, const Tensor& context,
                   const SpdStage& stage);

// Symmetric mean of squared nearest-neighbor distances. Exact O(N*M) search;
// ties resolve to the lowest index so the subgradient is deterministic.
Tensor chamfer_l2(const Tensor& a, const Tensor& b);

struct ReconstructionLoss {
    Tensor total;
    std::vector<double> per_stage;
};

// Sum of per-stage Chamfer terms between predicted stage outputs and
// per-stage FPS subsets of the fused ground truth (|target_i| = N_i, FPS
// seeded by stage index; the full set is used when it is not larger).
ReconstructionLoss reconstruction_loss(const std::vector<Tensor>& stage_outputs,
                                       const PointCloud& gt_full);

}  // namespace geomsplat
