#pragma once

#include <array>
#include <vector>

namespace geomsplat {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

Vec3 mat3_mul_vec(const Mat3& m, const Vec3& v);
Vec3 mat3_tmul_vec(const Mat3& m, const Vec3& v);  // m^T * v
Mat3 quat_to_mat3(const std::array<double, 4>& q);  // (w, x, y, z), unit norm

// Axis-aligned workspace box [x0,y0,z0, x1,y1,z1] in meters.
struct Bounds {
    std::array<double, 6> v{0, 0, 0, 1, 1, 1};

    double min(int axis) const { return v[axis]; }
    double max(int axis) const { return v[axis + 3]; }
    double extent(int axis) const { return v[axis + 3] - v[axis]; }
    Vec3 center() const {
        return {(v[0] + v[3]) / 2, (v[1] + v[4]) / 2, (v[2] + v[5]) / 2};
    }
    double diagonal() const;
    bool contains(const Vec3& p) const {
        return p[0] >= v[0] && p[0] <= v[3] && p[1] >= v[1] && p[1] <= v[4] && p[2] >= v[2] &&
               p[2] <= v[5];
    }
    void validate() const;  // throws ConfigError on inverted axes
};

// Pinhole camera. R/T map camera coordinates to world: x_w = R x_c + T,
// so T is the camera center and world-to-camera is x_c = R^T (x_w - T).
struct CameraModel {
    double fx = 1, fy = 1, cx = 0, cy = 0;
    Mat3 R{1, 0, 0, 0, 1, 0, 0, 0, 1};
    Vec3 T{0, 0, 0};
    int width = 1, height = 1;

    void validate() const;  // orthonormality / det(R)=+1 / intrinsics ranges
    Vec3 world_to_camera(const Vec3& p) const;
    Vec3 camera_to_world(const Vec3& p) const;
};

// Single-view RGB-D input. rgb is row-major H*W*3 in [0,1]; depth is H*W
// meters with 0 marking pixels without a depth return.
struct Observation {
    int width = 0, height = 0;
    std::vector<double> rgb;
    std::vector<double> depth;
    CameraModel camera;
    int timestep = 0;

    double depth_at(int y, int x) const { return depth[static_cast<size_t>(y) * width + x]; }
    const double* rgb_at(int y, int x) const {
        return &rgb[(static_cast<size_t>(y) * width + x) * 3];
    }
};

struct PointCloud {
    std::vector<Vec3> points;                  // world frame, meters
    std::vector<std::vector<double>> features;  // optional, one row per point
    std::vector<Vec3> colors;                  // optional, [0,1]

    size_t size() const { return points.size(); }
    bool has_features() const { return !features.empty(); }
    bool has_colors() const { return !colors.empty(); }
    void check_consistent() const;
};

// One world point per valid (depth > 0) pixel, colors copied from rgb.
// Throws EmptyCloudError when no pixel carries depth.
PointCloud back_project(const Observation& obs);

struct PixelProjection {
    double u, v;   // pixel coordinates, may fall outside the image
    double z_cam;  // camera-space depth in meters
};

// Throws ContractError when the point is at or behind the camera plane.
PixelProjection project(const Vec3& point, const CameraModel& camera);

// Keeps points inside the closed box; features/colors filtered alongside.
// Throws EmptyCloudError when nothing remains.
PointCloud crop(const PointCloud& cloud, const Bounds& bounds);

// Greedy farthest point sampling. Returns the cloud unchanged when it has at
// most n points. The first selected point is seed_index; each next point
// maximizes the minimum (squared) distance to the selected set, ties broken
// by lowest index.
PointCloud farthest_point_sample(const PointCloud& cloud, int n, int seed_index = 0);

}  // namespace geomsplat
