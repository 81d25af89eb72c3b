#include "geomsplat/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "geomsplat/errors.hpp"
#include "geomsplat/image_io.hpp"
#include "geomsplat/ply_io.hpp"

namespace geomsplat {

namespace fs = std::filesystem;

namespace {

std::string scene_dir(const std::string& root, int id) {
    return root + "/scenes/" + std::to_string(id);
}

std::string traj_dir(const std::string& root, int id) {
    return root + "/trajs/" + std::to_string(id);
}

void write_camera(std::ostream& out, const CameraModel& cam) {
    out << cam.fx << ' ' << cam.fy << ' ' << cam.cx << ' ' << cam.cy << ' ' << cam.width << ' '
        << cam.height;
    for (double v : cam.R) out << ' ' << v;
    for (double v : cam.T) out << ' ' << v;
    out << '\n';
}

CameraModel read_camera(std::istream& in) {
    CameraModel cam;
    in >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.width >> cam.height;
    for (double& v : cam.R) in >> v;
    for (double& v : cam.T) in >> v;
    return cam;
}

Observation load_view(const std::string& dir, int v, const CameraModel& cam) {
    Observation obs;
    const std::string base = dir + "/view_" + std::to_string(v);
    Image img = read_ppm(base + ".ppm");
    int w = 0, h = 0;
    obs.depth = read_depth_raster(base + ".depth", w, h);
    if (w != img.width || h != img.height) throw IoError("view raster size mismatch: " + base);
    obs.width = img.width;
    obs.height = img.height;
    obs.rgb = std::move(img.rgb);
    obs.camera = cam;
    return obs;
}

}  // namespace

void save_scene_dataset(const SceneDataset& scene, const std::string& root) {
    const std::string dir = scene_dir(root, scene.id);
    fs::create_directories(dir);
    std::ofstream man(dir + "/manifest.txt");
    if (!man) throw IoError("cannot write manifest in " + dir);
    man.precision(17);
    man << "scene " << scene.id << '\n';
    man << "seed " << scene.spec.seed << '\n';
    man << "workspace";
    for (double v : scene.spec.workspace.v) man << ' ' << v;
    man << '\n';
    man << "primitives " << scene.spec.primitives.size() << '\n';
    for (const auto& p : scene.spec.primitives) {
        man << "prim " << (p.kind == Primitive::Kind::Sphere ? "sphere" : "box");
        for (double v : p.position) man << ' ' << v;
        for (double v : p.rotation) man << ' ' << v;
        for (double v : p.size) man << ' ' << v;
        for (double v : p.albedo) man << ' ' << v;
        man << ' ' << (p.checker ? 1 : 0) << '\n';
    }
    man << "views " << scene.views.size() << '\n';
    for (size_t v = 0; v < scene.views.size(); ++v) {
        man << "camera " << v << ' ';
        write_camera(man, scene.views[v].camera);
        const std::string base = dir + "/view_" + std::to_string(v);
        Image img;
        img.width = scene.views[v].width;
        img.height = scene.views[v].height;
        img.rgb = scene.views[v].rgb;
        write_ppm(img, base + ".ppm");
        write_depth_raster(scene.views[v].depth, scene.views[v].width, scene.views[v].height,
                           base + ".depth");
    }
    write_ply(scene.gt_full, dir + "/gt_full.ply");
}

SceneDataset load_scene_dataset(const std::string& root, int id) {
    const std::string dir = scene_dir(root, id);
    std::ifstream man(dir + "/manifest.txt");
    if (!man) throw IoError("missing scene manifest: " + dir);
    SceneDataset out;
    std::string tok;
    size_t nprims = 0, nviews = 0;
    while (man >> tok) {
        if (tok == "scene") {
            man >> out.id;
        } else if (tok == "seed") {
            man >> out.spec.seed;
        } else if (tok == "workspace") {
            for (double& v : out.spec.workspace.v) man >> v;
        } else if (tok == "primitives") {
            man >> nprims;
        } else if (tok == "prim") {
            Primitive p;
            std::string kind;
            man >> kind;
            p.kind = kind == "sphere" ? Primitive::Kind::Sphere : Primitive::Kind::Box;
            for (double& v : p.position) man >> v;
            for (double& v : p.rotation) man >> v;
            for (double& v : p.size) man >> v;
            for (double& v : p.albedo) man >> v;
            int checker = 0;
            man >> checker;
            p.checker = checker != 0;
            out.spec.primitives.push_back(p);
        } else if (tok == "views") {
            man >> nviews;
        } else if (tok == "camera") {
            int v = 0;
            man >> v;
            CameraModel cam = read_camera(man);
            out.views.push_back(load_view(dir, v, cam));
        }
    }
    if (out.spec.primitives.size() != nprims || out.views.size() != nviews)
        throw IoError("inconsistent scene manifest: " + dir);
    out.gt_full = read_ply(dir + "/gt_full.ply");
    return out;
}

int count_scene_datasets(const std::string& root) {
    int n = 0;
    while (fs::exists(scene_dir(root, n) + "/manifest.txt")) ++n;
    return n;
}

void save_trajectory_dataset(const TrajectoryDataset& traj, const std::string& root) {
    const std::string dir = traj_dir(root, traj.id);
    fs::create_directories(dir);
    std::ofstream man(dir + "/manifest.txt");
    if (!man) throw IoError("cannot write manifest in " + dir);
    man.precision(17);
    man << "trajectory " << traj.id << '\n';
    man << "task " << task_to_string(traj.task) << '\n';
    man << "camera ";
    write_camera(man, traj.camera);
    man << "frames " << traj.frames.size() << '\n';
    for (size_t t = 0; t < traj.frames.size(); ++t) {
        const auto& f = traj.frames[t];
        man << "frame " << t << ' ' << f.task_id;
        for (double v : f.proprio.flat()) man << ' ' << v;
        for (double v : f.expert_action) man << ' ' << v;
        man << '\n';
        const std::string base = dir + "/frame_" + std::to_string(t);
        Image img;
        img.width = f.observation.width;
        img.height = f.observation.height;
        img.rgb = f.observation.rgb;
        write_ppm(img, base + ".ppm");
        write_depth_raster(f.observation.depth, f.observation.width, f.observation.height,
                           base + ".depth");
    }
}

TrajectoryDataset load_trajectory_dataset(const std::string& root, int id) {
    const std::string dir = traj_dir(root, id);
    std::ifstream man(dir + "/manifest.txt");
    if (!man) throw IoError("missing trajectory manifest: " + dir);
    TrajectoryDataset out;
    std::string tok;
    size_t nframes = 0;
    while (man >> tok) {
        if (tok == "trajectory") {
            man >> out.id;
        } else if (tok == "task") {
            std::string t;
            man >> t;
            out.task = task_from_string(t);
        } else if (tok == "camera") {
            out.camera = read_camera(man);
        } else if (tok == "frames") {
            man >> nframes;
        } else if (tok == "frame") {
            int t = 0;
            TrajectoryFrame f;
            man >> t >> f.task_id;
            std::array<double, 8> pp{};
            for (double& v : pp) man >> v;
            f.proprio.position = {pp[0], pp[1], pp[2]};
            f.proprio.rotation = {pp[3], pp[4], pp[5], pp[6]};
            f.proprio.gripper = pp[7];
            for (double& v : f.expert_action) man >> v;
            const std::string base = dir + "/frame_" + std::to_string(t);
            Image img = read_ppm(base + ".ppm");
            int w = 0, h = 0;
            f.observation.depth = read_depth_raster(base + ".depth", w, h);
            f.observation.width = img.width;
            f.observation.height = img.height;
            f.observation.rgb = std::move(img.rgb);
            f.observation.camera = out.camera;
            f.observation.timestep = t;
            out.frames.push_back(std::move(f));
        }
    }
    if (out.frames.size() != nframes) throw IoError("inconsistent trajectory manifest: " + dir);
    return out;
}

int count_trajectory_datasets(const std::string& root) {
    int n = 0;
    while (fs::exists(traj_dir(root, n) + "/manifest.txt")) ++n;
    return n;
}

}  // namespace geomsplat
