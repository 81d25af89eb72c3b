// Command-line driver: dataset generation, pretraining, rendering, policy
// distillation and evaluation. Exit codes: 0 success, 2 config error,
// 3 I/O error, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "geomsplat/dataset.hpp"
#include "geomsplat/errors.hpp"
#include "geomsplat/image_io.hpp"
#include "geomsplat/ply_io.hpp"
#include "geomsplat/rasterizer.hpp"
#include "geomsplat/train.hpp"

using namespace geomsplat;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out = "out";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (key = value lines)");
    cmd->add_option("--seed", args.seed, "RNG seed override");
    cmd->add_option("--out", args.out, "output directory");
}

TrainConfig resolve_config(const CommonArgs& args) {
    TrainConfig cfg;
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    cfg.validate();
    return cfg;
}

std::vector<SceneDataset> load_scenes(const TrainConfig& cfg) {
    const int n = count_scene_datasets(cfg.data_dir);
    if (n == 0) throw IoError("no scenes found under " + cfg.data_dir + "/scenes");
    std::vector<SceneDataset> scenes;
    for (int i = 0; i < n; ++i) scenes.push_back(load_scene_dataset(cfg.data_dir, i));
    return scenes;
}

std::vector<TrajectoryDataset> load_trajectories(const TrainConfig& cfg) {
    const int n = count_trajectory_datasets(cfg.data_dir);
    if (n == 0) throw IoError("no trajectories found under " + cfg.data_dir + "/trajs");
    std::vector<TrajectoryDataset> trajs;
    for (int i = 0; i < n; ++i) trajs.push_back(load_trajectory_dataset(cfg.data_dir, i));
    return trajs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-view volumetric splatting pipeline"};
    app.require_subcommand(1);

    CommonArgs gen_args, pre_args, render_args, distill_args, eval_args;
    std::string checkpoint, variant_name = "multi-step";
    int scene_id = 0;
    bool dump_volume = false, dump_seeds = false, dump_stages = false;

    CLI::App* gen = app.add_subcommand("generate-scenes", "render the synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* pre = app.add_subcommand("pretrain", "geometry + rendering pretraining");
    add_common(pre, pre_args);

    CLI::App* render = app.add_subcommand("render", "render held-out views from a checkpoint");
    add_common(render, render_args);
    render->add_option("--checkpoint", checkpoint, "pretraining checkpoint")->required();
    render->add_option("--scene", scene_id, "scene id");
    render->add_flag("--dump-volume", dump_volume, "write per-slice volume heatmaps");
    render->add_flag("--dump-seeds", dump_seeds, "write seed points as PLY");
    render->add_flag("--dump-stages", dump_stages, "write per-stage clouds as PLY");

    CLI::App* distill = app.add_subcommand("distill", "policy training with latent distillation");
    add_common(distill, distill_args);
    distill->add_option("--checkpoint", checkpoint, "frozen pretraining checkpoint")->required();
    distill->add_option("--variant", variant_name,
                        "multi-step | single-step | pretrain-finetune");

    CLI::App* eval = app.add_subcommand("eval", "novel-view + geometry evaluation");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", checkpoint, "pretraining checkpoint")->required();
    eval->add_option("--scene", scene_id, "scene id");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            TrainConfig cfg = resolve_config(gen_args);
            std::filesystem::create_directories(gen_args.out);
            generate_datasets(cfg, gen_args.out);
            std::cout << "wrote " << cfg.demos << " scenes and " << cfg.num_trajectories
                      << " trajectories to " << gen_args.out << "\n";
        } else if (pre->parsed()) {
            TrainConfig cfg = resolve_config(pre_args);
            PretrainModel model(cfg, cfg.seed);
            auto scenes = load_scenes(cfg);
            PretrainSummary s = pretrain(cfg, model, scenes, pre_args.out);
            std::cout << "pretrained " << s.steps << " steps; stage-" << cfg.r_schedule.size()
                      << " chamfer " << s.step0_chamfer_stage_last << " -> "
                      << s.final_chamfer_stage_last << "\n"
                      << "checkpoints: " << s.ckpt_080 << ", " << s.ckpt_final << "\n";
        } else if (render->parsed()) {
            TrainConfig cfg = resolve_config(render_args);
            PretrainModel model(cfg, cfg.seed);
            load_checkpoint(model.store(), checkpoint);
            auto scene = load_scene_dataset(cfg.data_dir, scene_id);
            std::filesystem::create_directories(render_args.out);

            SceneForward fwd = forward_scene(model, scene.views.front(), true);
            RenderTarget target;
            target.width = cfg.image_width;
            target.height = cfg.image_height;
            target.background = cfg.background;
            const auto cams = held_out_rig(cfg).cameras(cfg.image_width, cfg.image_height);
            for (size_t v = 0; v < cams.size(); ++v) {
                RasterResult r = rasterize(fwd.gaussians, cams[v], target);
                Image img;
                img.width = cfg.image_width;
                img.height = cfg.image_height;
                img.rgb.assign(r.image.data().begin(), r.image.data().end());
                write_ppm(img, render_args.out + "/view_" + std::to_string(v) + ".ppm");
            }
            if (dump_volume) dump_volume_heatmaps(fwd.volume, render_args.out + "/volume");
            auto cloud_of = [](const Tensor& t) {
                PointCloud c;
                for (int i = 0; i < t.rows(); ++i)
                    c.points.push_back({t.at(i, 0), t.at(i, 1), t.at(i, 2)});
                return c;
            };
            if (dump_seeds) write_ply(cloud_of(fwd.seeds), render_args.out + "/seeds.ply");
            if (dump_stages)
                for (size_t i = 0; i < fwd.stage_outputs.size(); ++i)
                    write_ply(cloud_of(fwd.stage_outputs[i]),
                              render_args.out + "/stage_" + std::to_string(i) + ".ply");
            std::cout << "rendered " << cams.size() << " held-out views to " << render_args.out
                      << "\n";
        } else if (distill->parsed()) {
            TrainConfig cfg = resolve_config(distill_args);
            PolicyVariant variant;
            if (variant_name == "multi-step") variant = PolicyVariant::MultiStep;
            else if (variant_name == "single-step") variant = PolicyVariant::SingleStep;
            else if (variant_name == "pretrain-finetune") variant = PolicyVariant::PretrainFinetune;
            else throw ConfigError("unknown variant: " + variant_name);

            PretrainModel extractor(cfg, cfg.seed);
            load_checkpoint(extractor.store(), checkpoint);
            if (variant != PolicyVariant::PretrainFinetune) extractor.freeze();

            PolicyConfig pc;
            pc.token_dim = cfg.token_dim;
            pc.num_latents = cfg.num_latents;
            pc.patch_size = cfg.patch_size;
            pc.volume_patch = cfg.volume_patch;
            pc.hidden = cfg.hidden;
            pc.num_tasks = cfg.num_tasks;
            pc.task_emb_dim = cfg.task_emb_dim;
            PolicyModel policy = PolicyModel::create(pc, cfg.C, cfg.seed + 1);

            auto trajs = load_trajectories(cfg);
            PolicySummary s =
                train_policy(cfg, policy, extractor, trajs, variant, distill_args.out);
            std::cout << variant_to_string(variant) << ": action mse "
                      << s.initial_action_mse << " -> " << s.final_action_mse
                      << ", distill " << s.initial_distill << " -> " << s.final_distill << "\n"
                      << "extractor hash " << (s.extractor_hash_before == s.extractor_hash_after
                                                   ? "unchanged"
                                                   : "CHANGED")
                      << "\n";
        } else if (eval->parsed()) {
            TrainConfig cfg = resolve_config(eval_args);
            PretrainModel model(cfg, cfg.seed);
            load_checkpoint(model.store(), checkpoint);
            auto scene = load_scene_dataset(cfg.data_dir, scene_id);
            EvalReport report = evaluate(cfg, model, scene, eval_args.out);
            std::cout << "mean psnr " << report.mean_psnr << " dB, mean ssim "
                      << report.mean_ssim << ", chamfer " << report.chamfer << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
