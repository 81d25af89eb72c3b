#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "geomsplat/camera.hpp"
#include "geomsplat/errors.hpp"
#include "geomsplat/image_io.hpp"
#include "geomsplat/ply_io.hpp"
#include "geomsplat/rng.hpp"

using namespace geomsplat;

namespace {

CameraModel identity_camera(double fx = 50, double fy = 50, double cx = 31.5, double cy = 31.5) {
    CameraModel cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = 64;
    cam.height = 64;
    return cam;
}

CameraModel random_camera(Rng& rng) {
    CameraModel cam = identity_camera(rng.uniform(40, 80), rng.uniform(40, 80));
    // random rotation from a normalized quaternion
    std::array<double, 4> q;
    double n = 0;
    for (auto& v : q) {
        v = rng.normal();
        n += v * v;
    }
    n = std::sqrt(n);
    for (auto& v : q) v /= n;
    cam.R = quat_to_mat3(q);
    cam.T = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return cam;
}

// exhaustive greedy oracle: recomputes every min-distance from scratch
std::vector<int> fps_oracle(const PointCloud& cloud, int n, int seed) {
    std::vector<int> picked{seed};
    while (static_cast<int>(picked.size()) < n) {
        int best = -1;
        double best_d = -1;
        for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
            bool taken = false;
            for (int p : picked) taken = taken || p == i;
            if (taken) continue;
            double mind = 1e300;
            for (int p : picked) {
                double d = 0;
                for (int a = 0; a < 3; ++a) {
                    const double diff = cloud.points[i][a] - cloud.points[p][a];
                    d += diff * diff;
                }
                mind = std::min(mind, d);
            }
            if (mind > best_d) {
                best_d = mind;
                best = i;
            }
        }
        picked.push_back(best);
    }
    return picked;
}

}  // namespace

TEST_CASE("back_project principal point goes to the optical axis") {
    Observation obs;
    obs.width = obs.height = 64;
    obs.camera = identity_camera(50, 50, 32, 32);
    obs.rgb.assign(64 * 64 * 3, 0.5);
    obs.depth.assign(64 * 64, 0.0);
    obs.depth[32 * 64 + 32] = 1.7;
    PointCloud cloud = back_project(obs);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0][0] == doctest::Approx(0.0));
    CHECK(cloud.points[0][1] == doctest::Approx(0.0));
    CHECK(cloud.points[0][2] == doctest::Approx(1.7));
}

TEST_CASE("back_project direct substitution with unit intrinsics") {
    Observation obs;
    obs.width = 8;
    obs.height = 8;
    obs.camera = identity_camera(1, 1, 0, 0);
    obs.camera.width = 8;
    obs.camera.height = 8;
    obs.rgb.assign(8 * 8 * 3, 0.25);
    obs.depth.assign(8 * 8, 0.0);
    obs.depth[3 * 8 + 2] = 1.0;  // pixel (u=2, v=3)
    PointCloud cloud = back_project(obs);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0][0] == doctest::Approx(2.0));
    CHECK(cloud.points[0][1] == doctest::Approx(3.0));
    CHECK(cloud.points[0][2] == doctest::Approx(1.0));
    CHECK(cloud.colors[0][0] == doctest::Approx(0.25));
}

TEST_CASE("back_project with no valid depth raises empty-cloud") {
    Observation obs;
    obs.width = obs.height = 4;
    obs.camera = identity_camera(10, 10, 2, 2);
    obs.camera.width = obs.camera.height = 4;
    obs.rgb.assign(4 * 4 * 3, 0.0);
    obs.depth.assign(4 * 4, 0.0);
    CHECK_THROWS_AS(back_project(obs), EmptyCloudError);
}

TEST_CASE("project maps the optical axis to the principal point") {
    CameraModel cam = identity_camera(55, 60, 20, 24);
    PixelProjection p = project({0, 0, 2.5}, cam);
    CHECK(p.u == doctest::Approx(20.0));
    CHECK(p.v == doctest::Approx(24.0));
    CHECK(p.z_cam == doctest::Approx(2.5));
}

TEST_CASE("project with translation-only extrinsics shifts depth by T_z") {
    CameraModel cam = identity_camera();
    cam.T = {0, 0, -0.75};
    PixelProjection p = project({0, 0, 2.0}, cam);
    CHECK(p.z_cam == doctest::Approx(2.75));
}

TEST_CASE("project rejects points behind the camera") {
    CameraModel cam = identity_camera();
    CHECK_THROWS_AS(project({0, 0, -1.0}, cam), ContractError);
}

TEST_CASE("back_project / project round trip within 1e-9") {
    Rng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        CameraModel cam = random_camera(rng);
        Observation obs;
        obs.width = cam.width;
        obs.height = cam.height;
        obs.camera = cam;
        obs.rgb.assign(static_cast<size_t>(cam.width) * cam.height * 3, 0.5);
        obs.depth.assign(static_cast<size_t>(cam.width) * cam.height, 0.0);
        std::vector<std::pair<int, int>> pixels;
        std::vector<double> depths;
        for (int i = 0; i < 20; ++i) {
            const int x = static_cast<int>(rng.index(cam.width));
            const int y = static_cast<int>(rng.index(cam.height));
            const double z = rng.uniform(0.5, 3.0);
            obs.depth[static_cast<size_t>(y) * cam.width + x] = z;
        }
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x)
                if (obs.depth[static_cast<size_t>(y) * cam.width + x] > 0) {
                    pixels.push_back({x, y});
                    depths.push_back(obs.depth[static_cast<size_t>(y) * cam.width + x]);
                }
        PointCloud cloud = back_project(obs);
        REQUIRE(cloud.size() == pixels.size());
        for (size_t i = 0; i < cloud.size(); ++i) {
            PixelProjection p = project(cloud.points[i], cam);
            CHECK(std::fabs(p.u - pixels[i].first) < 1e-9);
            CHECK(std::fabs(p.v - pixels[i].second) < 1e-9);
            CHECK(std::fabs(p.z_cam - depths[i]) < 1e-9);
        }
    }
}

TEST_CASE("crop keeps interior points unchanged") {
    PointCloud cloud;
    cloud.points = {{0.1, 0.1, 0.1}, {0.5, 0.5, 0.5}};
    Bounds b;
    b.v = {0, 0, 0, 1, 1, 1};
    PointCloud out = crop(cloud, b);
    CHECK(out.size() == 2);
}

TEST_CASE("crop of a fully outside cloud raises empty-cloud") {
    PointCloud cloud;
    cloud.points = {{5, 5, 5}, {-3, 0, 0}};
    Bounds b;
    b.v = {0, 0, 0, 1, 1, 1};
    CHECK_THROWS_AS(crop(cloud, b), EmptyCloudError);
}

TEST_CASE("crop equals the per-point box predicate, features filtered alongside") {
    Rng rng(43);
    PointCloud cloud;
    for (int i = 0; i < 200; ++i) {
        cloud.points.push_back({rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 2)});
        cloud.features.push_back({static_cast<double>(i)});
        cloud.colors.push_back({0.5, 0.5, 0.5});
    }
    Bounds b;
    b.v = {0, 0, 0, 1, 1, 1};
    PointCloud out = crop(cloud, b);
    size_t expected = 0;
    for (const auto& p : cloud.points)
        if (p[0] >= 0 && p[0] <= 1 && p[1] >= 0 && p[1] <= 1 && p[2] >= 0 && p[2] <= 1)
            ++expected;
    CHECK(out.size() == expected);
    for (size_t i = 0; i < out.size(); ++i) {
        const int src = static_cast<int>(out.features[i][0]);
        CHECK(out.points[i] == cloud.points[src]);
    }
}

TEST_CASE("crop is idempotent") {
    Rng rng(47);
    PointCloud cloud;
    for (int i = 0; i < 100; ++i)
        cloud.points.push_back({rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 2)});
    Bounds b;
    b.v = {0, 0, 0, 1, 1, 1};
    PointCloud once = crop(cloud, b);
    PointCloud twice = crop(once, b);
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) CHECK(once.points[i] == twice.points[i]);
}

TEST_CASE("fps returns the cloud unchanged when n covers it") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    PointCloud out = farthest_point_sample(cloud, 5);
    CHECK(out.size() == 3);
}

TEST_CASE("fps on collinear points picks the extremes") {
    PointCloud cloud;
    for (int i = 0; i < 10; ++i) cloud.points.push_back({static_cast<double>(i), 0, 0});
    PointCloud out = farthest_point_sample(cloud, 2, 0);
    REQUIRE(out.size() == 2);
    CHECK(out.points[0][0] == 0.0);
    CHECK(out.points[1][0] == 9.0);
}

TEST_CASE("fps matches the exhaustive greedy oracle") {
    Rng rng(53);
    for (int trial = 0; trial < 4; ++trial) {
        PointCloud cloud;
        const int N = 40 + static_cast<int>(rng.index(25));
        for (int i = 0; i < N; ++i)
            cloud.points.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        const int n = 12;
        PointCloud got = farthest_point_sample(cloud, n, 0);
        std::vector<int> expect = fps_oracle(cloud, n, 0);
        REQUIRE(got.size() == static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) CHECK(got.points[i] == cloud.points[expect[i]]);
    }
}

TEST_CASE("fps output is a duplicate-free subset") {
    Rng rng(59);
    PointCloud cloud;
    for (int i = 0; i < 30; ++i)
        cloud.points.push_back({rng.uniform(0, 1), rng.uniform(0, 1), 0.0});
    // duplicated points exercise the tie-breaking path
    cloud.points.push_back(cloud.points[0]);
    cloud.points.push_back(cloud.points[1]);
    PointCloud out = farthest_point_sample(cloud, 10, 0);
    std::set<std::array<double, 3>> seen;
    for (const auto& p : out.points) {
        bool member = false;
        for (const auto& q : cloud.points) member = member || q == p;
        CHECK(member);
        CHECK(seen.insert(p).second);  // no duplicates among selected indices
    }
}

TEST_CASE("fps is permutation-equivariant up to the seed point") {
    Rng rng(61);
    PointCloud cloud;
    for (int i = 0; i < 25; ++i)
        cloud.points.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
    PointCloud base = farthest_point_sample(cloud, 8, 3);

    PointCloud rotated;  // cyclic permutation of the input order
    for (int i = 0; i < 25; ++i) rotated.points.push_back(cloud.points[(i + 11) % 25]);
    const int seed_in_rotated = (3 - 11 + 25) % 25;
    PointCloud perm = farthest_point_sample(rotated, 8, seed_in_rotated);

    // same selected SET (generic cloud, no distance ties)
    for (const auto& p : base.points) {
        bool found = false;
        for (const auto& q : perm.points) found = found || p == q;
        CHECK(found);
    }
}

TEST_CASE("camera validation rejects a non-orthonormal rotation") {
    CameraModel cam = identity_camera();
    cam.R[0] = 1.5;
    CHECK_THROWS_AS(cam.validate(), ConfigError);
}

TEST_CASE("ppm round trip preserves 8-bit color") {
    namespace fs = std::filesystem;
    Image img = Image::filled(9, 5, 0.25, 0.5, 0.75);
    img.at(2, 3)[0] = 1.0;
    const std::string path = (fs::temp_directory_path() / "geomsplat_test.ppm").string();
    write_ppm(img, path);
    Image back = read_ppm(path);
    REQUIRE(back.width == 9);
    REQUIRE(back.height == 5);
    for (size_t i = 0; i < img.rgb.size(); ++i)
        CHECK(std::fabs(back.rgb[i] - img.rgb[i]) <= 0.5 / 255.0 + 1e-12);
    fs::remove(path);
}

TEST_CASE("depth raster round trip is exact") {
    namespace fs = std::filesystem;
    std::vector<double> depth = {0.0, 1.5, 2.25, 1e-9, 123.456, 0.0};
    const std::string path = (fs::temp_directory_path() / "geomsplat_test.depth").string();
    write_depth_raster(depth, 3, 2, path);
    int w = 0, h = 0;
    auto back = read_depth_raster(path, w, h);
    CHECK(w == 3);
    CHECK(h == 2);
    for (size_t i = 0; i < depth.size(); ++i) CHECK(back[i] == depth[i]);
    fs::remove(path);
}

TEST_CASE("ply round trip preserves points and quantized colors") {
    namespace fs = std::filesystem;
    PointCloud cloud;
    cloud.points = {{0.125, -0.5, 2.0}, {1e-3, 0.777, -9.0}};
    cloud.colors = {{1, 0, 0}, {0, 117.0 / 255.0, 1}};
    const std::string path = (fs::temp_directory_path() / "geomsplat_test.ply").string();
    write_ply(cloud, path);
    PointCloud back = read_ply(path);
    REQUIRE(back.size() == 2);
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 3; ++a) {
            CHECK(std::fabs(back.points[i][a] - cloud.points[i][a]) < 1e-6);
            CHECK(std::fabs(back.colors[i][a] - cloud.colors[i][a]) <= 0.5 / 255.0 + 1e-12);
        }
    fs::remove(path);
}
