#include "geomsplat/keyframes.hpp"

#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

std::vector<int> select_keyframes(const std::vector<TrajectoryFrame>& trajectory,
                                  double velocity_threshold) {
    if (trajectory.empty()) throw ContractError("select_keyframes: empty trajectory");
    const int T = static_cast<int>(trajectory.size());

    std::vector<int> raw;
    for (int t = 0; t < T; ++t) {
        bool keep = t == T - 1;
        if (!keep && t >= 1) {
            const bool toggled =
                trajectory[t].proprio.gripper != trajectory[t - 1].proprio.gripper;
            const Vec3& a = trajectory[t].proprio.position;
            const Vec3& b = trajectory[t - 1].proprio.position;
            const double step = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) +
                                          (a[1] - b[1]) * (a[1] - b[1]) +
                                          (a[2] - b[2]) * (a[2] - b[2]));
            keep = toggled || step <= velocity_threshold;
        }
        if (keep) raw.push_back(t);
    }

    // collapse runs of adjacent indices, keeping the later one
    std::vector<int> out;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (i + 1 < raw.size() && raw[i + 1] == raw[i] + 1) continue;
        out.push_back(raw[i]);
    }
    return out;
}

}  // namespace geomsplat
