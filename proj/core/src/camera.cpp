#include "geomsplat/camera.hpp"

#include <cmath>
#include <limits>

#include "geomsplat/errors.hpp"

namespace geomsplat {

Vec3 mat3_mul_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Vec3 mat3_tmul_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
            m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
            m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
}

Mat3 quat_to_mat3(const std::array<double, 4>& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
            2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
            2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
}

double Bounds::diagonal() const {
    const double dx = extent(0), dy = extent(1), dz = extent(2);
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void Bounds::validate() const {
    for (int a = 0; a < 3; ++a)
        if (!(v[a] < v[a + 3])) throw ConfigError("bounds: min must be below max on every axis");
}

void CameraModel::validate() const {
    constexpr double tol = 1e-9;
    // R^T R = I
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += R[k * 3 + i] * R[k * 3 + j];
            const double expected = i == j ? 1.0 : 0.0;
            if (std::fabs(dot - expected) > tol)
                throw ConfigError("camera: rotation is not orthonormal");
        }
    const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                       R[2] * (R[3] * R[7] - R[4] * R[6]);
    if (std::fabs(det - 1.0) > tol) throw ConfigError("camera: rotation determinant is not +1");
    if (fx <= 0 || fy <= 0) throw ConfigError("camera: focal lengths must be positive");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
        throw ConfigError("camera: principal point outside image");
}

Vec3 CameraModel::world_to_camera(const Vec3& p) const {
    return mat3_tmul_vec(R, {p[0] - T[0], p[1] - T[1], p[2] - T[2]});
}

Vec3 CameraModel::camera_to_world(const Vec3& p) const {
    Vec3 r = mat3_mul_vec(R, p);
    return {r[0] + T[0], r[1] + T[1], r[2] + T[2]};
}

void PointCloud::check_consistent() const {
    if (has_features() && features.size() != points.size())
        throw DimensionError("point cloud: feature row count mismatch");
    if (has_colors() && colors.size() != points.size())
        throw DimensionError("point cloud: color count mismatch");
}

PointCloud back_project(const Observation& obs) {
    obs.camera.validate();
    PointCloud cloud;
    for (int y = 0; y < obs.height; ++y)
        for (int x = 0; x < obs.width; ++x) {
            const double z = obs.depth_at(y, x);
            if (z <= 0.0) continue;
            const Vec3 cam = {(x - obs.camera.cx) * z / obs.camera.fx,
                              (y - obs.camera.cy) * z / obs.camera.fy, z};
            cloud.points.push_back(obs.camera.camera_to_world(cam));
            const double* c = obs.rgb_at(y, x);
            cloud.colors.push_back({c[0], c[1], c[2]});
        }
    if (cloud.points.empty()) throw EmptyCloudError("back_project: no valid depth pixels");
    return cloud;
}

PixelProjection project(const Vec3& point, const CameraModel& camera) {
    const Vec3 cam = camera.world_to_camera(point);
    if (cam[2] <= 1e-9) throw ContractError("project: point behind camera");
    return {camera.fx * cam[0] / cam[2] + camera.cx, camera.fy * cam[1] / cam[2] + camera.cy,
            cam[2]};
}

PointCloud crop(const PointCloud& cloud, const Bounds& bounds) {
    bounds.validate();
    cloud.check_consistent();
    PointCloud out;
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        if (!bounds.contains(cloud.points[i])) continue;
        out.points.push_back(cloud.points[i]);
        if (cloud.has_features()) out.features.push_back(cloud.features[i]);
        if (cloud.has_colors()) out.colors.push_back(cloud.colors[i]);
    }
    if (out.points.empty()) throw EmptyCloudError("crop: no points inside bounds");
    return out;
}

PointCloud farthest_point_sample(const PointCloud& cloud, int n, int seed_index) {
    if (n < 1) throw ContractError("fps: n must be >= 1");
    cloud.check_consistent();
    const int total = static_cast<int>(cloud.size());
    if (total == 0) throw EmptyCloudError("fps: empty cloud");
    if (total <= n) return cloud;
    if (seed_index < 0 || seed_index >= total) throw ContractError("fps: seed index out of range");

    auto dist2 = [&](int i, int j) {
        const Vec3 &a = cloud.points[i], &b = cloud.points[j];
        const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        return dx * dx + dy * dy + dz * dz;
    };

    std::vector<int> picked;
    picked.reserve(n);
    std::vector<double> min_d2(total, std::numeric_limits<double>::infinity());
    std::vector<char> taken(total, 0);
    picked.push_back(seed_index);
    taken[seed_index] = 1;
    for (int step = 1; step < n; ++step) {
        const int last = picked.back();
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < total; ++i) {
            min_d2[i] = std::min(min_d2[i], dist2(i, last));
            if (!taken[i] && min_d2[i] > best_d2) {  // strict: ties keep the lowest index
                best_d2 = min_d2[i];
                best = i;
            }
        }
        picked.push_back(best);
        taken[best] = 1;
    }

    PointCloud out;
    out.points.reserve(n);
    for (int idx : picked) {
        out.points.push_back(cloud.points[idx]);
        if (cloud.has_features()) out.features.push_back(cloud.features[idx]);
        if (cloud.has_colors()) out.colors.push_back(cloud.colors[idx]);
    }
    return out;
}

}  // namespace geomsplat
