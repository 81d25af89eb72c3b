#pragma once

#include <string>
#include <vector>

#include "geomsplat/scene.hpp"
#include "geomsplat/trajectory.hpp"

namespace geomsplat {

// On-disk layout under a dataset root:
//   scenes/<id>/view_<v>.ppm        P6 RGB render
//   scenes/<id>/view_<v>.depth      DRAS1 float64 depth raster
//   scenes/<id>/manifest.txt        scene spec echo + per-view cameras
//   scenes/<id>/gt_full.ply         fused ground-truth cloud
//   trajs/<id>/frame_<t>.ppm/.depth per-frame observation rasters
//   trajs/<id>/manifest.txt         camera + per-frame proprio/action/task
struct SceneDataset {
    int id = 0;
    SceneSpec spec;
    std::vector<Observation> views;
    PointCloud gt_full;
};

struct TrajectoryDataset {
    int id = 0;
    TaskKind task = TaskKind::Reach;
    CameraModel camera;
    std::vector<TrajectoryFrame> frames;
};

void save_scene_dataset(const SceneDataset& scene, const std::string& root);
SceneDataset load_scene_dataset(const std::string& root, int id);
int count_scene_datasets(const std::string& root);

void save_trajectory_dataset(const TrajectoryDataset& traj, const std::string& root);
TrajectoryDataset load_trajectory_dataset(const std::string& root, int id);
int count_trajectory_datasets(const std::string& root);

}  // namespace geomsplat
