#include "geomsplat/trajectory.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

TaskKind task_from_string(const std::string& s) {
    if (s == "reach") return TaskKind::Reach;
    if (s == "pick") return TaskKind::Pick;
    throw ConfigError("unknown task: " + s);
}

std::string task_to_string(TaskKind t) {
    return t == TaskKind::Reach ? "reach" : "pick";
}

namespace {

Vec3 lerp(const Vec3& a, const Vec3& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

}  // namespace

std::vector<TrajectoryFrame> script_trajectory(const SceneSpec& scene,
                                               const CameraModel& camera,
                                               const TrajectoryParams& params) {
    if (scene.primitives.empty()) throw ContractError("script_trajectory: no target primitive");
    if (params.steps < 4) throw ContractError("script_trajectory: too few steps");

    const Primitive& target = scene.primitives.front();
    const Bounds& ws = scene.workspace;
    // start hovering near the workspace ceiling, offset from the target
    const Vec3 start = {ws.min(0) + 0.3 * ws.extent(0), ws.min(1) + 0.3 * ws.extent(1),
                        ws.min(2) + 0.85 * ws.extent(2)};
    const double top_off = target.size[2] + params.ee_marker_radius;
    const Vec3 grasp = {target.position[0], target.position[1], target.position[2] + top_off};
    const Vec3 lifted = {grasp[0], grasp[1], std::min(ws.max(2) - 0.02, grasp[2] + 0.25)};
    if (!ws.contains(grasp))
        throw ContractError("script_trajectory: target grasp point outside workspace");

    // per-frame end-effector positions and gripper states
    std::vector<Vec3> positions(params.steps);
    std::vector<double> grip(params.steps, 1.0);
    if (params.task == TaskKind::Reach) {
        for (int t = 0; t < params.steps; ++t)
            positions[t] = lerp(start, grasp, static_cast<double>(t) / (params.steps - 1));
    } else {
        const int pause = 3;
        const int approach = (params.steps - pause) * 2 / 3;
        const int lift = params.steps - approach - pause;
        if (approach < 2 || lift < 1) throw ContractError("script_trajectory: too few steps for pick");
        int t = 0;
        for (int i = 0; i < approach; ++i, ++t)
            positions[t] = lerp(start, grasp, static_cast<double>(i) / (approach - 1));
        for (int i = 0; i < pause; ++i, ++t) {
            positions[t] = grasp;
            // gripper closes on the last paused frame
            grip[t] = (i == pause - 1) ? 0.0 : 1.0;
        }
        for (int i = 0; i < lift; ++i, ++t) {
            positions[t] = lerp(grasp, lifted, static_cast<double>(i + 1) / lift);
            grip[t] = 0.0;
        }
    }

    std::vector<TrajectoryFrame> traj(params.steps);
    for (int t = 0; t < params.steps; ++t) {
        traj[t].proprio.position = positions[t];
        traj[t].proprio.rotation = {1, 0, 0, 0};
        traj[t].proprio.gripper = grip[t];
        traj[t].task_id = params.task_id;

        SceneSpec augmented = scene;  // end-effector marker makes frames time-varying
        Primitive marker;
        marker.kind = Primitive::Kind::Sphere;
        marker.position = positions[t];
        marker.size = {params.ee_marker_radius, params.ee_marker_radius, params.ee_marker_radius};
        marker.albedo = {0.85, 0.85, 0.85};
        augmented.primitives.push_back(marker);
        traj[t].observation =
            raycast(augmented, camera, params.image_width, params.image_height, params.shading);
        traj[t].observation.timestep = t;
    }

    const std::vector<int> keys = select_keyframes(traj, params.velocity_threshold);
    for (int t = 0; t < params.steps; ++t) {
        int next = -1;
        for (int k : keys)
            if (k > t) {
                next = k;
                break;
            }
        const int target_frame = next >= 0 ? next : t;
        traj[t].expert_action = traj[target_frame].proprio.flat();
    }
    return traj;
}

}  // namespace geomsplat
