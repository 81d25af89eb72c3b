#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "geomsplat/camera.hpp"

namespace geomsplat {

// Flat key=value configuration. Key names mirror the hyperparameter tables;
// lists use bracket syntax, e.g. `train.k = [4,3,2,1]`.
struct TrainConfig {
    // training
    int batch_size = 1;                       // train.batch_size
    double learning_rate = 1e-4;              // train.learning_rate
    int steps = 2000;                         // train.steps
    int delta = 1000;                         // train.delta (reconstruction-only warm-up)
    std::vector<int> k_schedule{4, 3, 2, 1};  // train.k
    int num_views = 8;                        // train.num_views
    int demos = 50;                           // train.demos (pretraining scenes)
    int single_task_steps = 2000;             // train.single_task_steps
    double velocity_threshold = 1e-4;         // train.velocity_threshold
    double weight_decay = 0.01;               // train.weight_decay

    // network
    int D = 20;                                // network.D
    int C = 32;                                // network.C
    int C2D = 16;                              // network.C2D
    int d = 7;                                 // network.d
    int Np = 8;                                // network.N_p
    int fps_sample_num = 512;                  // network.fps_sample_num
    std::array<double, 6> scene_bounds{-0.375, -0.5, 0.6, 1.0, 0.5, 1.6};  // network.scene_bounds
    std::vector<int> r_schedule{2, 2, 2};      // network.r
    int hidden = 64;                           // network.hidden
    double offset_cap = 0.25;                  // network.offset_cap (fraction of extent)
    double displacement_cap_frac = 0.1;        // network.displacement_cap (fraction of diagonal)
    double scale_base_voxels = 2.0;            // network.scale_base_voxels
    double gamma = 1.0;                        // network.gamma (focal loss)
    int num_latents = 64;                      // network.num_latents
    int token_dim = 64;                        // network.token_dim
    int patch_size = 8;                        // network.patch_size
    int volume_patch = 2;                      // network.volume_patch
    int task_emb_dim = 8;                      // network.task_emb_dim
    int num_tasks = 4;                         // network.num_tasks
    std::vector<double> lambda_distill{1, 0.5, 0.3, 0.2, 0.1, 0.05};  // network.lambda_distill
    std::string feature_mode = "handcrafted";  // network.feature_mode

    // data / scene generation
    int image_width = 64;    // image.width
    int image_height = 64;   // image.height
    int num_primitives = 2;  // scene.num_primitives
    std::array<double, 3> background{0, 0, 0};  // scene.background
    double rig_radius = 1.1;      // rig.radius
    double rig_height = 1.75;     // rig.height
    double rig_focal = 70.0;      // rig.focal
    int held_out_views = 4;       // eval.held_out_views
    std::string policy_task = "reach";  // policy.task
    int traj_steps = 24;          // policy.traj_steps
    int num_trajectories = 20;    // policy.num_trajectories
    std::string data_dir = "data";  // data.dir

    uint64_t seed = 0;  // seed

    Bounds bounds() const {
        Bounds b;
        b.v = scene_bounds;
        return b;
    }
    void validate() const;  // throws ConfigError
};

TrainConfig load_config(const std::string& path);
void apply_config_line(TrainConfig& cfg, const std::string& key, const std::string& value);
void save_config(const TrainConfig& cfg, const std::string& path);

}  // namespace geomsplat
