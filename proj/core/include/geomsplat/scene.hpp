#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geomsplat/camera.hpp"

namespace geomsplat {

struct Primitive {
    enum class Kind { Sphere, Box };
    Kind kind = Kind::Sphere;
    Vec3 position{0, 0, 0};
    std::array<double, 4> rotation{1, 0, 0, 0};  // unit quaternion, boxes only
    Vec3 size{0.1, 0.1, 0.1};  // sphere: radius in size[0]; box: half-extents
    Vec3 albedo{0.8, 0.2, 0.2};
    bool checker = false;  // procedural texture in the local frame
};

struct SceneSpec {
    std::vector<Primitive> primitives;
    Bounds workspace;
    uint64_t seed = 0;
};

struct ShadingParams {
    Vec3 background{0, 0, 0};
    Vec3 light_dir{0.35, 0.25, 0.9};  // surface-to-light, normalized internally
    double ambient = 0.35;
};

// Ring of cameras uniformly spaced in azimuth around the look-at point.
struct CameraRig {
    int count = 8;
    double radius = 1.1;
    double height = 1.75;        // absolute world z of the camera centers
    Vec3 look_at{0.3125, 0, 1.1};
    double azimuth_phase = 0.0;  // radians; offset to interleave rigs
    double focal_px = 70.0;

    std::vector<CameraModel> cameras(int width, int height_px) const;
};

// Exact analytic ray casting: depth is the camera-space z of the nearest
// hit, 0 where no primitive is hit; flat Lambertian shading with one fixed
// directional light.
Observation raycast(const SceneSpec& scene, const CameraModel& camera, int width, int height,
                    const ShadingParams& shading = {});

struct RayHit {
    double z;      // camera-space depth along the optical axis
    Vec3 normal;   // world frame, unit
    Vec3 albedo;   // after texturing
};

// Closest intersection along the pixel ray, if any. Exposed for oracles.
std::optional<RayHit> trace_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir_world);

// Union of back-projected views from the rig, cropped to the workspace and
// FPS-downsampled to `samples` points.
PointCloud fuse_ground_truth(const SceneSpec& scene, const CameraRig& rig, int samples,
                             int width, int height, const ShadingParams& shading = {});

// Reproducible desk-scale scene: `num_primitives` spheres/boxes placed inside
// the central region of the workspace.
SceneSpec make_random_scene(uint64_t seed, int num_primitives, const Bounds& workspace);

}  // namespace geomsplat
