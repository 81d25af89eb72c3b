#pragma once

#include <string>
#include <vector>

#include "geomsplat/keyframes.hpp"
#include "geomsplat/scene.hpp"

namespace geomsplat {

enum class TaskKind { Reach, Pick };

TaskKind task_from_string(const std::string& s);
std::string task_to_string(TaskKind t);

struct TrajectoryParams {
    TaskKind task = TaskKind::Reach;
    int steps = 24;
    int task_id = 0;
    int image_width = 64, image_height = 64;
    double velocity_threshold = 1e-4;
    ShadingParams shading;
    double ee_marker_radius = 0.03;  // gripper marker rendered into observations
};

// Scripted expert demonstration toward primitive 0 of the scene. The
// end-effector moves at constant speed; pick tasks pause at the grasp point
// and toggle the gripper on the last paused frame. Observations come from
// `camera` with a marker sphere at the current end-effector position, so
// frames change over time. Expert actions are the pose+gripper of the next
// keyframe (terminal frames target themselves).
std::vector<TrajectoryFrame> script_trajectory(const SceneSpec& scene,
                                               const CameraModel& camera,
                                               const TrajectoryParams& params);

}  // namespace geomsplat
