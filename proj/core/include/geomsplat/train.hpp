#pragma once

#include <string>
#include <vector>

#include "geomsplat/dataset.hpp"
#include "geomsplat/pipeline.hpp"
#include "geomsplat/policy.hpp"

namespace geomsplat {

// Builds the synthetic dataset: `demos` scenes rendered from the training rig
// plus scripted trajectories from the fixed front camera.
void generate_datasets(const TrainConfig& cfg, const std::string& out_root);

CameraRig training_rig(const TrainConfig& cfg);
CameraRig held_out_rig(const TrainConfig& cfg);
CameraModel front_camera(const TrainConfig& cfg);
ShadingParams shading_from_config(const TrainConfig& cfg);

// Active k (consecutive steps per scene) at a training step: the warm-up
// phase splits into one equal segment per schedule entry; after it the final
// value (1) holds.
int k_at_step(const TrainConfig& cfg, int step);

// lambda_distill over six equal segments with boundaries at ceil(i*steps/6).
double lambda_at_step(const TrainConfig& cfg, int step, int total_steps);

struct PretrainSummary {
    int steps = 0;
    double step0_chamfer_stage_last = 0.0;
    double final_chamfer_stage_last = 0.0;
    std::string ckpt_080, ckpt_final, metrics_path;
};

// Reconstruction-only warm-up for the first `delta` steps, then joint
// reconstruction + focal rendering; k consecutive steps per scene with k
// decaying over equal quarters of the warm-up phase; checkpoints at 80% and
// 100% of the run.
PretrainSummary pretrain(const TrainConfig& cfg, PretrainModel& model,
                         const std::vector<SceneDataset>& scenes, const std::string& out_dir);

struct EvalRow {
    int view = 0;
    double psnr = 0.0, ssim = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double mean_psnr = 0.0, mean_ssim = 0.0;
    double chamfer = 0.0;  // refined points vs fused ground truth
};

// Novel-view evaluation from input view 0 against held-out ring cameras;
// writes eval.jsonl and a plain-text table.
EvalReport evaluate(const TrainConfig& cfg, const PretrainModel& model,
                    const SceneDataset& scene, const std::string& out_dir);

enum class PolicyVariant { MultiStep, SingleStep, PretrainFinetune };

std::string variant_to_string(PolicyVariant v);

struct PolicySummary {
    int steps = 0;
    double initial_action_mse = 0.0;  // smoothed, first window
    double final_action_mse = 0.0;    // smoothed, last window
    double initial_distill = 0.0;     // full two-step metric
    double final_distill = 0.0;
    uint64_t extractor_hash_before = 0;
    uint64_t extractor_hash_after = 0;
    std::string metrics_path, ckpt_path;
};

// Imitation training over keyframe-targeted frames. The distillation metric
// (both steps) is always logged; the objective depends on the variant.
// extractor must be frozen for the distillation variants and trainable for
// PretrainFinetune.
PolicySummary train_policy(const TrainConfig& cfg, PolicyModel& policy, PretrainModel& extractor,
                           const std::vector<TrajectoryDataset>& trajectories,
                           PolicyVariant variant, const std::string& out_dir);

}  // namespace geomsplat
