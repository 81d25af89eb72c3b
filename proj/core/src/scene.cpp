#include "geomsplat/scene.hpp"

#include <cmath>
#include <limits>

#include "geomsplat/errors.hpp"
#include "geomsplat/rng.hpp"

namespace geomsplat {

namespace {

Vec3 normalize(const Vec3& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// hit parameter t (along a ray p = o + t*d), world normal and local point
struct PrimHit {
    double t;
    Vec3 normal;
    Vec3 local;
};

std::optional<PrimHit> intersect_sphere(const Primitive& prim, const Vec3& o, const Vec3& d) {
    const Vec3 oc = sub3(o, prim.position);
    const double r = prim.size[0];
    const double a = dot(d, d);
    const double b = 2.0 * dot(d, oc);
    const double c = dot(oc, oc) - r * r;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    double t = (-b - sq) / (2 * a);
    if (t <= 1e-9) t = (-b + sq) / (2 * a);
    if (t <= 1e-9) return std::nullopt;
    const Vec3 p = {o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]};
    const Vec3 n = normalize(sub3(p, prim.position));
    return PrimHit{t, n, sub3(p, prim.position)};
}

std::optional<PrimHit> intersect_box(const Primitive& prim, const Vec3& o, const Vec3& d) {
    const Mat3 R = quat_to_mat3(prim.rotation);
    const Vec3 ol = mat3_tmul_vec(R, sub3(o, prim.position));
    const Vec3 dl = mat3_tmul_vec(R, d);
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    int axis_min = 0;
    for (int a = 0; a < 3; ++a) {
        const double h = prim.size[a];
        if (std::fabs(dl[a]) < 1e-15) {
            if (ol[a] < -h || ol[a] > h) return std::nullopt;
            continue;
        }
        double t1 = (-h - ol[a]) / dl[a];
        double t2 = (h - ol[a]) / dl[a];
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > tmin) {
            tmin = t1;
            axis_min = a;
        }
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return std::nullopt;
    }
    if (tmin <= 1e-9 || !std::isfinite(tmin)) return std::nullopt;  // inside or behind
    Vec3 nl{0, 0, 0};
    const Vec3 pl = {ol[0] + tmin * dl[0], ol[1] + tmin * dl[1], ol[2] + tmin * dl[2]};
    nl[axis_min] = pl[axis_min] > 0 ? 1.0 : -1.0;
    return PrimHit{tmin, mat3_mul_vec(R, nl), pl};
}

Vec3 textured_albedo(const Primitive& prim, const Vec3& local) {
    if (!prim.checker) return prim.albedo;
    const double cell = 0.05;
    const int parity = (static_cast<int>(std::floor(local[0] / cell)) +
                        static_cast<int>(std::floor(local[1] / cell)) +
                        static_cast<int>(std::floor(local[2] / cell))) & 1;
    if (parity == 0) return prim.albedo;
    return {prim.albedo[0] * 0.35, prim.albedo[1] * 0.35, prim.albedo[2] * 0.35};
}

}  // namespace

std::optional<RayHit> trace_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir) {
    std::optional<PrimHit> best;
    const Primitive* best_prim = nullptr;
    for (const auto& prim : scene.primitives) {
        auto hit = prim.kind == Primitive::Kind::Sphere ? intersect_sphere(prim, origin, dir)
                                                        : intersect_box(prim, origin, dir);
        if (hit && (!best || hit->t < best->t)) {
            best = hit;
            best_prim = &prim;
        }
    }
    if (!best) return std::nullopt;
    return RayHit{best->t, best->normal, textured_albedo(*best_prim, best->local)};
}

Observation raycast(const SceneSpec& scene, const CameraModel& camera, int width, int height,
                    const ShadingParams& shading) {
    camera.validate();
    Observation obs;
    obs.width = width;
    obs.height = height;
    obs.camera = camera;
    obs.rgb.resize(static_cast<size_t>(width) * height * 3);
    obs.depth.assign(static_cast<size_t>(width) * height, 0.0);
    const Vec3 light = normalize(shading.light_dir);

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            // direction with unit camera-space z, so the hit parameter is the
            // depth along the optical axis
            const Vec3 dir_cam = {(x - camera.cx) / camera.fx, (y - camera.cy) / camera.fy, 1.0};
            const Vec3 dir = mat3_mul_vec(camera.R, dir_cam);
            double* px = &obs.rgb[(static_cast<size_t>(y) * width + x) * 3];
            auto hit = trace_ray(scene, camera.T, dir);
            if (!hit) {
                px[0] = shading.background[0];
                px[1] = shading.background[1];
                px[2] = shading.background[2];
                continue;
            }
            obs.depth[static_cast<size_t>(y) * width + x] = hit->z;
            const double lambert = std::max(0.0, dot(hit->normal, light));
            const double shade = shading.ambient + (1.0 - shading.ambient) * lambert;
            px[0] = std::min(1.0, hit->albedo[0] * shade);
            px[1] = std::min(1.0, hit->albedo[1] * shade);
            px[2] = std::min(1.0, hit->albedo[2] * shade);
        }
    return obs;
}

std::vector<CameraModel> CameraRig::cameras(int width, int height_px) const {
    if (count < 1) throw ConfigError("camera rig: count must be positive");
    std::vector<CameraModel> cams;
    cams.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double theta = azimuth_phase + 2.0 * M_PI * i / count;
        CameraModel cam;
        cam.width = width;
        cam.height = height_px;
        cam.fx = cam.fy = focal_px;
        cam.cx = (width - 1) / 2.0;
        cam.cy = (height_px - 1) / 2.0;
        cam.T = {look_at[0] + radius * std::cos(theta), look_at[1] + radius * std::sin(theta),
                 height};
        const Vec3 fwd = normalize(sub3(look_at, cam.T));
        const Vec3 right = normalize(cross(fwd, Vec3{0, 0, 1}));
        const Vec3 down = normalize(cross(fwd, right));
        // columns: camera x (right), y (down), z (forward)
        cam.R = {right[0], down[0], fwd[0], right[1], down[1], fwd[1], right[2], down[2], fwd[2]};
        cam.validate();
        cams.push_back(cam);
    }
    return cams;
}

PointCloud fuse_ground_truth(const SceneSpec& scene, const CameraRig& rig, int samples,
                             int width, int height, const ShadingParams& shading) {
    if (samples < 1) throw ContractError("fuse_ground_truth: samples must be >= 1");
    PointCloud merged;
    for (const CameraModel& cam : rig.cameras(width, height)) {
        Observation obs = raycast(scene, cam, width, height, shading);
        bool any = false;
        for (double d : obs.depth)
            if (d > 0) {
                any = true;
                break;
            }
        if (!any) continue;
        PointCloud view = back_project(obs);
        merged.points.insert(merged.points.end(), view.points.begin(), view.points.end());
        merged.colors.insert(merged.colors.end(), view.colors.begin(), view.colors.end());
    }
    if (merged.points.empty()) throw ContractError("fuse_ground_truth: no surface points");
    PointCloud cropped = crop(merged, scene.workspace);
    return farthest_point_sample(cropped, samples, 0);
}

SceneSpec make_random_scene(uint64_t seed, int num_primitives, const Bounds& workspace) {
    SceneSpec scene;
    scene.seed = seed;
    scene.workspace = workspace;
    Rng rng(seed);
    const Vec3 c = workspace.center();
    const double span = 0.22 * std::min({workspace.extent(0), workspace.extent(1),
                                         workspace.extent(2)});
    for (int i = 0; i < num_primitives; ++i) {
        Primitive prim;
        prim.kind = (rng.uniform() < 0.5) ? Primitive::Kind::Sphere : Primitive::Kind::Box;
        prim.position = {c[0] + rng.uniform(-span, span), c[1] + rng.uniform(-span, span),
                         c[2] + rng.uniform(-span, span)};
        if (prim.kind == Primitive::Kind::Sphere) {
            const double r = rng.uniform(0.08, 0.14);
            prim.size = {r, r, r};
        } else {
            prim.size = {rng.uniform(0.06, 0.12), rng.uniform(0.06, 0.12),
                         rng.uniform(0.06, 0.12)};
            const double ang = rng.uniform(0, M_PI);
            prim.rotation = {std::cos(ang / 2), 0, 0, std::sin(ang / 2)};
            prim.checker = rng.uniform() < 0.5;
        }
        prim.albedo = {rng.uniform(0.2, 0.95), rng.uniform(0.2, 0.95), rng.uniform(0.2, 0.95)};
        scene.primitives.push_back(prim);
    }
    return scene;
}

}  // namespace geomsplat
