#include "geomsplat/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "geomsplat/errors.hpp"
#include "geomsplat/image_io.hpp"
#include "geomsplat/image_metrics.hpp"
#include "geomsplat/metrics.hpp"
#include "geomsplat/ply_io.hpp"
#include "geomsplat/rasterizer.hpp"

namespace geomsplat {

namespace fs = std::filesystem;

ShadingParams shading_from_config(const TrainConfig& cfg) {
    ShadingParams s;
    s.background = {cfg.background[0], cfg.background[1], cfg.background[2]};
    return s;
}

CameraRig training_rig(const TrainConfig& cfg) {
    CameraRig rig;
    rig.count = cfg.num_views;
    rig.radius = cfg.rig_radius;
    rig.height = cfg.rig_height;
    rig.look_at = cfg.bounds().center();
    rig.focal_px = cfg.rig_focal;
    return rig;
}

CameraRig held_out_rig(const TrainConfig& cfg) {
    CameraRig rig = training_rig(cfg);
    rig.count = cfg.held_out_views;
    rig.azimuth_phase = M_PI / cfg.num_views;  // interleave with the training ring
    return rig;
}

CameraModel front_camera(const TrainConfig& cfg) {
    return training_rig(cfg).cameras(cfg.image_width, cfg.image_height).front();
}

void generate_datasets(const TrainConfig& cfg, const std::string& out_root) {
    const ShadingParams shading = shading_from_config(cfg);
    const CameraRig rig = training_rig(cfg);
    const int max_points = [&] {
        int n = cfg.d * cfg.d * cfg.d;
        for (int r : cfg.r_schedule) n *= r;
        return n;
    }();

    for (int s = 0; s < cfg.demos; ++s) {
        SceneDataset data;
        data.id = s;
        data.spec = make_random_scene(cfg.seed * 1000003ULL + s, cfg.num_primitives, cfg.bounds());
        for (const CameraModel& cam : rig.cameras(cfg.image_width, cfg.image_height))
            data.views.push_back(raycast(data.spec, cam, cfg.image_width, cfg.image_height, shading));
        data.gt_full = fuse_ground_truth(data.spec, rig, max_points, cfg.image_width,
                                         cfg.image_height, shading);
        save_scene_dataset(data, out_root);
    }

    const CameraModel front = front_camera(cfg);
    TrajectoryParams tp;
    tp.task = task_from_string(cfg.policy_task);
    tp.steps = cfg.traj_steps;
    tp.image_width = cfg.image_width;
    tp.image_height = cfg.image_height;
    tp.velocity_threshold = cfg.velocity_threshold;
    tp.shading = shading;
    for (int t = 0; t < cfg.num_trajectories; ++t) {
        TrajectoryDataset traj;
        traj.id = t;
        traj.task = tp.task;
        traj.camera = front;
        tp.task_id = 0;
        SceneSpec scene =
            make_random_scene(cfg.seed * 2000003ULL + t + 1, cfg.num_primitives, cfg.bounds());
        traj.frames = script_trajectory(scene, front, tp);
        save_trajectory_dataset(traj, out_root);
    }
}

int k_at_step(const TrainConfig& cfg, int step) {
    if (cfg.delta <= 0 || step >= cfg.delta) return cfg.k_schedule.back();
    const int segments = static_cast<int>(cfg.k_schedule.size());
    int seg = static_cast<int>(static_cast<long long>(step) * segments / cfg.delta);
    if (seg >= segments) seg = segments - 1;
    return cfg.k_schedule[seg];
}

double lambda_at_step(const TrainConfig& cfg, int step, int total_steps) {
    int seg = 5;
    for (int i = 0; i < 6; ++i) {
        const int lo = (i * total_steps + 5) / 6;
        const int hi = ((i + 1) * total_steps + 5) / 6;
        if (step >= lo && step < hi) {
            seg = i;
            break;
        }
    }
    return cfg.lambda_distill[seg];
}

PretrainSummary pretrain(const TrainConfig& cfg, PretrainModel& model,
                         const std::vector<SceneDataset>& scenes, const std::string& out_dir) {
    if (scenes.empty()) throw IoError("pretrain: no scenes in dataset");
    fs::create_directories(out_dir);
    MetricsWriter metrics(out_dir + "/metrics.jsonl");
    std::ofstream timing(out_dir + "/timing.log");

    const int S = static_cast<int>(scenes.size());
    const int V = static_cast<int>(scenes.front().views.size());
    RenderTarget target;
    target.width = cfg.image_width;
    target.height = cfg.image_height;
    target.background = cfg.background;
    target.near_clip = 0.05;
    target.far_clip = 50.0;

    // voxelization is deterministic per (scene, view): cache it
    std::map<std::pair<int, int>, VoxelGrid> grid_cache;
    auto grid_for = [&](int scene, int view) -> const VoxelGrid& {
        const auto key = std::make_pair(scene, view);
        auto it = grid_cache.find(key);
        if (it == grid_cache.end())
            it = grid_cache.emplace(key, preprocess_observation(model, scenes[scene].views[view]))
                     .first;
        return it->second;
    };

    PretrainSummary summary;
    summary.metrics_path = metrics.path();
    const int ckpt80_step = (cfg.steps * 8 + 9) / 10;  // ceil(0.8 * steps)

    int scene_idx = 0;
    int run_remaining = 0;
    int visit_count = 0;
    std::vector<int> per_scene_visits(S, 0);
    int input_view = 0;

    for (int step = 0; step < cfg.steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        const int k_now = k_at_step(cfg, step);
        if (run_remaining == 0) {
            scene_idx = visit_count % S;
            input_view = per_scene_visits[scene_idx] % V;
            per_scene_visits[scene_idx] += 1;
            ++visit_count;
            run_remaining = k_now;
        }
        --run_remaining;

        const bool render_phase = step >= cfg.delta;
        model.store().zero_grad();
        SceneForward fwd = forward_scene(model, grid_for(scene_idx, input_view), render_phase);
        ReconstructionLoss rec = reconstruction_loss(fwd.stage_outputs, scenes[scene_idx].gt_full);

        Tensor total = rec.total;
        double l_rend = 0.0;
        int sup_view = -1;
        if (render_phase) {
            sup_view = step % V;
            const Observation& sup = scenes[scene_idx].views[sup_view];
            RasterResult raster = rasterize(fwd.gaussians, sup.camera, target);
            Tensor gt({sup.height, sup.width, 3}, sup.rgb);
            Tensor rend = focal_render_loss(raster.image, gt, cfg.gamma);
            l_rend = rend.value();
            total = add(total, rend);
        }
        if (!std::isfinite(total.value())) throw NumericalError("pretrain: loss diverged");
        backward(total);
        const double render_grad = model.store().grad_abs_sum("gauss.");
        adamw_step(model.store(), cfg.learning_rate, cfg.weight_decay);

        if (step == 0) summary.step0_chamfer_stage_last = rec.per_stage.back();
        summary.final_chamfer_stage_last = rec.per_stage.back();

        nlohmann::ordered_json rec_json = nlohmann::ordered_json::array();
        for (double v : rec.per_stage) rec_json.push_back(v);
        metrics.write({{"step", step},
                       {"scene", scene_idx},
                       {"view", input_view},
                       {"k", k_now},
                       {"phase", render_phase ? "rec+rend" : "rec"},
                       {"sup_view", sup_view},
                       {"l_rec", rec_json},
                       {"l_rend", l_rend},
                       {"render_grad_abs", render_grad},
                       {"total", total.value()}});
        const auto t1 = std::chrono::steady_clock::now();
        timing << step << ' '
               << std::chrono::duration<double, std::milli>(t1 - t0).count() << "\n";

        if (step + 1 == ckpt80_step) {
            summary.ckpt_080 = out_dir + "/ckpt_080.txt";
            save_checkpoint(model.store(), summary.ckpt_080);
        }
    }
    summary.ckpt_final = out_dir + "/ckpt_final.txt";
    save_checkpoint(model.store(), summary.ckpt_final);
    summary.steps = cfg.steps;
    return summary;
}

EvalReport evaluate(const TrainConfig& cfg, const PretrainModel& model,
                    const SceneDataset& scene, const std::string& out_dir) {
    fs::create_directories(out_dir);
    MetricsWriter stream(out_dir + "/eval.jsonl");
    const ShadingParams shading = shading_from_config(cfg);

    SceneForward fwd = forward_scene(model, scene.views.front(), true);

    RenderTarget target;
    target.width = cfg.image_width;
    target.height = cfg.image_height;
    target.background = cfg.background;
    target.near_clip = 0.05;
    target.far_clip = 50.0;

    EvalReport report;
    const auto held_cams = held_out_rig(cfg).cameras(cfg.image_width, cfg.image_height);
    for (size_t v = 0; v < held_cams.size(); ++v) {
        Observation gt = raycast(scene.spec, held_cams[v], cfg.image_width, cfg.image_height,
                                 shading);
        RasterResult raster = rasterize(fwd.gaussians, held_cams[v], target);
        std::vector<double> pred(raster.image.data().begin(), raster.image.data().end());
        ImageMetrics m = image_metrics(pred, gt.rgb, cfg.image_width, cfg.image_height);
        report.rows.push_back({static_cast<int>(v), m.psnr_db, m.ssim});

        Image img;
        img.width = cfg.image_width;
        img.height = cfg.image_height;
        img.rgb = pred;
        write_ppm(img, out_dir + "/render_" + std::to_string(v) + ".ppm");

        nlohmann::ordered_json row{{"step", cfg.steps}, {"view_id", static_cast<int>(v)}};
        if (std::isinf(m.psnr_db))
            row["psnr"] = nullptr;  // sentinel: identical images
        else
            row["psnr"] = m.psnr_db;
        row["ssim"] = m.ssim;
        stream.write(row);
    }

    // geometric accuracy of the refined cloud against the fused ground truth
    std::vector<double> flat;
    for (const auto& p : scene.gt_full.points) {
        flat.push_back(p[0]);
        flat.push_back(p[1]);
        flat.push_back(p[2]);
    }
    Tensor gt_t({static_cast<int>(scene.gt_full.size()), 3}, std::move(flat));
    report.chamfer = chamfer_l2(fwd.stage_outputs.back(), gt_t).value();

    double sp = 0, ss = 0;
    for (const auto& r : report.rows) {
        sp += r.psnr;
        ss += r.ssim;
    }
    report.mean_psnr = sp / report.rows.size();
    report.mean_ssim = ss / report.rows.size();

    std::ofstream table(out_dir + "/report.txt");
    table << "view    PSNR(dB)    SSIM\n";
    table.precision(4);
    table << std::fixed;
    for (const auto& r : report.rows)
        table << r.view << "       " << r.psnr << "     " << r.ssim << "\n";
    table << "mean    " << report.mean_psnr << "     " << report.mean_ssim << "\n";
    table << "chamfer_l2 " << report.chamfer << "\n";
    return report;
}

std::string variant_to_string(PolicyVariant v) {
    switch (v) {
        case PolicyVariant::MultiStep: return "multi-step";
        case PolicyVariant::SingleStep: return "single-step";
        case PolicyVariant::PretrainFinetune: return "pretrain-finetune";
    }
    return "?";
}

namespace {

// differentiable counterpart of reference_tokens for the finetune variant
LatentTokens finetune_tokens(const DenseVolume& volume, const PolicyModel& policy) {
    const int p = policy.cfg.volume_patch;
    const int D = volume.resolution;
    if (D % p != 0) throw ConfigError("finetune tokens: resolution not divisible by patch");
    Tensor pooled = avg_pool3d(volume.values, D, D / p);
    Tensor mapped = matmul(pooled, policy.ref_projection);
    const int num_patches = pooled.rows();
    const int M = policy.cfg.num_latents;
    if (num_patches < M) throw ConfigError("finetune tokens: fewer patches than latents");
    std::vector<std::pair<double, int>> scored(num_patches);
    const auto dm = mapped.data();
    const int ct = mapped.cols();
    for (int i = 0; i < num_patches; ++i) {
        double s = 0;
        for (int j = 0; j < ct; ++j) {
            const double v = dm[static_cast<size_t>(i) * ct + j];
            s += v * v;
        }
        scored[i] = {-s, i};
    }
    std::stable_sort(scored.begin(), scored.end());
    std::vector<int> kept(M);
    for (int i = 0; i < M; ++i) kept[i] = scored[i].second;
    std::sort(kept.begin(), kept.end());
    return {gather_rows(mapped, kept), TokenRole::PolicyLatent};
}

}  // namespace

PolicySummary train_policy(const TrainConfig& cfg, PolicyModel& policy, PretrainModel& extractor,
                           const std::vector<TrajectoryDataset>& trajectories,
                           PolicyVariant variant, const std::string& out_dir) {
    if (trajectories.empty()) throw IoError("train_policy: no trajectories");
    const bool finetune = variant == PolicyVariant::PretrainFinetune;
    if (!finetune && !extractor.frozen())
        throw ConfigError("train_policy: extractor must be frozen for distillation variants");
    fs::create_directories(out_dir);
    MetricsWriter metrics(out_dir + "/policy_metrics.jsonl");

    PolicySummary summary;
    summary.metrics_path = metrics.path();
    summary.extractor_hash_before = extractor.store().content_hash();

    // training pairs: every frame with a successor (terminal pairs clamp)
    struct Pair {
        int traj, frame;
    };
    std::vector<Pair> pairs;
    for (size_t i = 0; i < trajectories.size(); ++i)
        for (size_t t = 0; t < trajectories[i].frames.size(); ++t)
            pairs.push_back({static_cast<int>(i), static_cast<int>(t)});

    // the frozen extractor's tokens are constant per frame: compute on demand, keep
    std::map<std::pair<int, int>, LatentTokens> ref_cache;
    std::map<std::pair<int, int>, VoxelGrid> grid_cache;
    auto grid_of = [&](int i, int t) -> const VoxelGrid& {
        const auto key = std::make_pair(i, t);
        auto it = grid_cache.find(key);
        if (it == grid_cache.end())
            it = grid_cache
                     .emplace(key, preprocess_observation(extractor,
                                                          trajectories[i].frames[t].observation))
                     .first;
        return it->second;
    };
    auto ref_of = [&](int i, int t) -> const LatentTokens& {
        const auto key = std::make_pair(i, t);
        auto it = ref_cache.find(key);
        if (it == ref_cache.end()) {
            DenseVolume vol = fuse(grid_of(i, t), extractor.fusion());
            it = ref_cache.emplace(key, reference_tokens(vol, policy)).first;
        }
        return it->second;
    };

    const int steps = cfg.single_task_steps;
    std::vector<double> action_hist, distill_hist;

    for (int step = 0; step < steps; ++step) {
        const Pair pr = pairs[step % pairs.size()];
        const auto& traj = trajectories[pr.traj];
        const int t = pr.frame;
        const int t1 = std::min(t + 1, static_cast<int>(traj.frames.size()) - 1);
        const TrajectoryFrame& frame = traj.frames[t];
        const double lambda = lambda_at_step(cfg, step, steps);

        policy.store.zero_grad();
        if (finetune) extractor.store().zero_grad();

        LatentTokens x_t;
        if (finetune) {
            DenseVolume vol = fuse(grid_of(pr.traj, t), extractor.fusion());
            x_t = finetune_tokens(vol, policy);
        } else {
            x_t = encode_policy(frame.observation, policy);
        }
        LatentTokens x_next = latent_dynamics(x_t, frame.proprio, frame.task_id, policy);
        Tensor action = decode_action(x_next, policy);

        // the full two-step metric is always measured; the objective varies
        DistillLoss dloss;
        double objective_distill = 0.0;
        Tensor loss_distill_term;
        if (!finetune) {
            const LatentTokens& ref_t = ref_of(pr.traj, t);
            const LatentTokens& ref_t1 = ref_of(pr.traj, t1);
            dloss = distill_loss(x_t, ref_t, x_next, ref_t1);
            if (variant == PolicyVariant::MultiStep) {
                loss_distill_term = dloss.total;
                objective_distill = dloss.total.value();
            } else {  // single-step: only the input-token alignment trains
                loss_distill_term = mean_one_minus_cosine(x_t.tokens, ref_t.tokens);
                objective_distill = loss_distill_term.value();
            }
        }

        PolicyLoss ploss = policy_loss(action, frame.expert_action, loss_distill_term, lambda);
        if (!std::isfinite(ploss.total.value()))
            throw NumericalError("train_policy: loss diverged");
        backward(ploss.total);
        adamw_step(policy.store, cfg.learning_rate, cfg.weight_decay);
        if (finetune) adamw_step(extractor.store(), cfg.learning_rate, cfg.weight_decay);

        const double full_distill = finetune ? 0.0 : dloss.step_t + dloss.step_t1;
        action_hist.push_back(ploss.action_term);
        distill_hist.push_back(full_distill);

        metrics.write({{"step", step},
                       {"traj", pr.traj},
                       {"frame", t},
                       {"lambda", lambda},
                       {"l_action", ploss.action_term},
                       {"l_distill", full_distill},
                       {"l_distill_t", finetune ? 0.0 : dloss.step_t},
                       {"l_distill_t1", finetune ? 0.0 : dloss.step_t1},
                       {"l_distill_objective", objective_distill},
                       {"total", ploss.total.value()}});
    }

    const int window = std::min<int>(50, steps);
    auto mean_range = [](const std::vector<double>& v, int lo, int hi) {
        double acc = 0;
        for (int i = lo; i < hi; ++i) acc += v[i];
        return acc / std::max(1, hi - lo);
    };
    summary.steps = steps;
    summary.initial_action_mse = mean_range(action_hist, 0, window);
    summary.final_action_mse = mean_range(action_hist, steps - window, steps);
    summary.initial_distill = mean_range(distill_hist, 0, window);
    summary.final_distill = mean_range(distill_hist, steps - window, steps);
    summary.extractor_hash_after = extractor.store().content_hash();
    summary.ckpt_path = out_dir + "/policy_ckpt.txt";
    save_checkpoint(policy.store, summary.ckpt_path);
    return summary;
}

}  // namespace geomsplat
