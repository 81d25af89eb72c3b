#pragma once

#include <array>
#include <vector>

#include "geomsplat/camera.hpp"

namespace geomsplat {

// End-effector pose (position + unit quaternion) and binary gripper state.
struct Proprio {
    Vec3 position{0, 0, 0};
    std::array<double, 4> rotation{1, 0, 0, 0};
    double gripper = 1.0;  // 1 open, 0 closed

    std::array<double, 8> flat() const {
        return {position[0], position[1], position[2], rotation[0],
                rotation[1], rotation[2], rotation[3], gripper};
    }
};

struct TrajectoryFrame {
    Observation observation;
    Proprio proprio;
    int task_id = 0;
    std::array<double, 8> expert_action{};  // next-keyframe pose + gripper
};

// Keyframe rule: a timestep is kept when the gripper toggled, motion stopped
// (per-step displacement at or below the threshold), or it is the terminal
// frame. Runs of consecutive indices collapse to the later one. Returns
// sorted ascending indices; the terminal frame is always present.
std::vector<int> select_keyframes(const std::vector<TrajectoryFrame>& trajectory,
                                  double velocity_threshold);

}  // namespace geomsplat
