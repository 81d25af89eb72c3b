#include "geomsplat/config.hpp"

#include <fstream>
#include <sstream>

#include "geomsplat/errors.hpp"

namespace geomsplat {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& raw) {
    std::string s = trim(raw);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ConfigError("expected bracketed list, got: " + raw);
    s = s.substr(1, s.size() - 2);
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& raw) {
    std::vector<int> out;
    for (double v : parse_list(raw)) out.push_back(static_cast<int>(v));
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size != 1) throw ConfigError("train.batch_size: only 1 is supported");
    if (learning_rate <= 0) throw ConfigError("train.learning_rate must be positive");
    if (steps < 1) throw ConfigError("train.steps must be positive");
    if (delta < 0 || delta > steps) throw ConfigError("train.delta must lie in [0, steps]");
    if (k_schedule.empty() || k_schedule.back() != 1)
        throw ConfigError("train.k must end at 1");
    for (size_t i = 1; i < k_schedule.size(); ++i)
        if (k_schedule[i] > k_schedule[i - 1])
            throw ConfigError("train.k must be non-increasing");
    for (int k : k_schedule)
        if (k < 1) throw ConfigError("train.k entries must be >= 1");
    if (num_views < 1) throw ConfigError("train.num_views must be positive");
    if (D < 2 || D % 2 != 0) throw ConfigError("network.D must be even and >= 2");
    if (d < 1 || d > D) throw ConfigError("network.d must lie in [1, D]");
    if (Np < 1) throw ConfigError("network.N_p must be positive");
    if (C < 1 || C2D < 5) throw ConfigError("network.C/C2D too small");
    if (r_schedule.empty()) throw ConfigError("network.r must not be empty");
    for (int r : r_schedule)
        if (r < 1) throw ConfigError("network.r entries must be >= 1");
    if (lambda_distill.size() != 6)
        throw ConfigError("network.lambda_distill must list six values");
    bounds().validate();
    if (D % volume_patch != 0)
        throw ConfigError("network.volume_patch must divide network.D");
    if (image_width % patch_size != 0 || image_height % patch_size != 0)
        throw ConfigError("network.patch_size must divide the image size");
    if (held_out_views < 1) throw ConfigError("eval.held_out_views must be positive");
    if (feature_mode != "handcrafted" && feature_mode != "random-projection")
        throw ConfigError("network.feature_mode must be handcrafted or random-projection");
}

void apply_config_line(TrainConfig& cfg, const std::string& key, const std::string& value) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "train.batch_size") cfg.batch_size = as_int();
    else if (key == "train.learning_rate") cfg.learning_rate = as_double();
    else if (key == "train.steps") cfg.steps = as_int();
    else if (key == "train.delta") cfg.delta = as_int();
    else if (key == "train.k") cfg.k_schedule = parse_int_list(value);
    else if (key == "train.num_views") cfg.num_views = as_int();
    else if (key == "train.demos") cfg.demos = as_int();
    else if (key == "train.single_task_steps") cfg.single_task_steps = as_int();
    else if (key == "train.velocity_threshold") cfg.velocity_threshold = as_double();
    else if (key == "train.weight_decay") cfg.weight_decay = as_double();
    else if (key == "network.D") cfg.D = as_int();
    else if (key == "network.C") cfg.C = as_int();
    else if (key == "network.C2D") cfg.C2D = as_int();
    else if (key == "network.d") cfg.d = as_int();
    else if (key == "network.N_p") cfg.Np = as_int();
    else if (key == "network.fps_sample_num") cfg.fps_sample_num = as_int();
    else if (key == "network.scene_bounds") {
        auto v = parse_list(value);
        if (v.size() != 6) throw ConfigError("network.scene_bounds needs six values");
        for (int i = 0; i < 6; ++i) cfg.scene_bounds[i] = v[i];
    } else if (key == "network.r") cfg.r_schedule = parse_int_list(value);
    else if (key == "network.hidden") cfg.hidden = as_int();
    else if (key == "network.offset_cap") cfg.offset_cap = as_double();
    else if (key == "network.displacement_cap") cfg.displacement_cap_frac = as_double();
    else if (key == "network.scale_base_voxels") cfg.scale_base_voxels = as_double();
    else if (key == "network.gamma") cfg.gamma = as_double();
    else if (key == "network.num_latents") cfg.num_latents = as_int();
    else if (key == "network.token_dim") cfg.token_dim = as_int();
    else if (key == "network.patch_size") cfg.patch_size = as_int();
    else if (key == "network.volume_patch") cfg.volume_patch = as_int();
    else if (key == "network.task_emb_dim") cfg.task_emb_dim = as_int();
    else if (key == "network.num_tasks") cfg.num_tasks = as_int();
    else if (key == "network.lambda_distill") cfg.lambda_distill = parse_list(value);
    else if (key == "network.feature_mode") cfg.feature_mode = value;
    else if (key == "image.width") cfg.image_width = as_int();
    else if (key == "image.height") cfg.image_height = as_int();
    else if (key == "scene.num_primitives") cfg.num_primitives = as_int();
    else if (key == "scene.background") {
        auto v = parse_list(value);
        if (v.size() != 3) throw ConfigError("scene.background needs three values");
        for (int i = 0; i < 3; ++i) cfg.background[i] = v[i];
    } else if (key == "rig.radius") cfg.rig_radius = as_double();
    else if (key == "rig.height") cfg.rig_height = as_double();
    else if (key == "rig.focal") cfg.rig_focal = as_double();
    else if (key == "eval.held_out_views") cfg.held_out_views = as_int();
    else if (key == "policy.task") cfg.policy_task = value;
    else if (key == "policy.traj_steps") cfg.traj_steps = as_int();
    else if (key == "policy.num_trajectories") cfg.num_trajectories = as_int();
    else if (key == "data.dir") cfg.data_dir = value;
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(std::stoull(value));
    else throw ConfigError("unknown config key: " + key);
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        // accept "key = value" and "key value"
        std::string key, value;
        const size_t eq = line.find('=');
        if (eq != std::string::npos) {
            key = trim(line.substr(0, eq));
            value = trim(line.substr(eq + 1));
        } else {
            const size_t sp = line.find_first_of(" \t");
            if (sp == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed line");
            key = trim(line.substr(0, sp));
            value = trim(line.substr(sp + 1));
        }
        try {
            apply_config_line(cfg, key, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

void save_config(const TrainConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path);
    out.precision(17);
    auto list_int = [](const std::vector<int>& v) {
        std::string s = "[";
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s + "]";
    };
    auto list_dbl = [](const auto& v) {
        std::ostringstream s;
        s.precision(17);
        s << "[";
        for (size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
        s << "]";
        return s.str();
    };
    out << "train.batch_size = " << cfg.batch_size << '\n';
    out << "train.learning_rate = " << cfg.learning_rate << '\n';
    out << "train.steps = " << cfg.steps << '\n';
    out << "train.delta = " << cfg.delta << '\n';
    out << "train.k = " << list_int(cfg.k_schedule) << '\n';
    out << "train.num_views = " << cfg.num_views << '\n';
    out << "train.demos = " << cfg.demos << '\n';
    out << "train.single_task_steps = " << cfg.single_task_steps << '\n';
    out << "train.velocity_threshold = " << cfg.velocity_threshold << '\n';
    out << "train.weight_decay = " << cfg.weight_decay << '\n';
    out << "network.D = " << cfg.D << '\n';
    out << "network.C = " << cfg.C << '\n';
    out << "network.C2D = " << cfg.C2D << '\n';
    out << "network.d = " << cfg.d << '\n';
    out << "network.N_p = " << cfg.Np << '\n';
    out << "network.fps_sample_num = " << cfg.fps_sample_num << '\n';
    out << "network.scene_bounds = " << list_dbl(cfg.scene_bounds) << '\n';
    out << "network.r = " << list_int(cfg.r_schedule) << '\n';
    out << "network.hidden = " << cfg.hidden << '\n';
    out << "network.offset_cap = " << cfg.offset_cap << '\n';
    out << "network.displacement_cap = " << cfg.displacement_cap_frac << '\n';
    out << "network.scale_base_voxels = " << cfg.scale_base_voxels << '\n';
    out << "network.gamma = " << cfg.gamma << '\n';
    out << "network.num_latents = " << cfg.num_latents << '\n';
    out << "network.token_dim = " << cfg.token_dim << '\n';
    out << "network.patch_size = " << cfg.patch_size << '\n';
    out << "network.volume_patch = " << cfg.volume_patch << '\n';
    out << "network.task_emb_dim = " << cfg.task_emb_dim << '\n';
    out << "network.num_tasks = " << cfg.num_tasks << '\n';
    out << "network.lambda_distill = " << list_dbl(cfg.lambda_distill) << '\n';
    out << "network.feature_mode = " << cfg.feature_mode << '\n';
    out << "image.width = " << cfg.image_width << '\n';
    out << "image.height = " << cfg.image_height << '\n';
    out << "scene.num_primitives = " << cfg.num_primitives << '\n';
    out << "scene.background = " << list_dbl(cfg.background) << '\n';
    out << "rig.radius = " << cfg.rig_radius << '\n';
    out << "rig.height = " << cfg.rig_height << '\n';
    out << "rig.focal = " << cfg.rig_focal << '\n';
    out << "eval.held_out_views = " << cfg.held_out_views << '\n';
    out << "policy.task = " << cfg.policy_task << '\n';
    out << "policy.traj_steps = " << cfg.traj_steps << '\n';
    out << "policy.num_trajectories = " << cfg.num_trajectories << '\n';
    out << "data.dir = " << cfg.data_dir << '\n';
    out << "seed = " << cfg.seed << '\n';
}

}  // namespace geomsplat
