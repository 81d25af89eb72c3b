#include <doctest.h>

#include <cmath>

#include "geomsplat/errors.hpp"
#include "geomsplat/gradcheck.hpp"
#include "geomsplat/image_metrics.hpp"
#include "geomsplat/rasterizer.hpp"

using namespace geomsplat;

namespace {

CameraModel frontal_camera(int size = 16, double focal = 20) {
    CameraModel cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = focal;
    cam.cx = cam.cy = (size - 1) / 2.0;
    return cam;
}

GaussianSet make_gaussians(const std::vector<double>& mu, const std::vector<double>& color,
                           const std::vector<double>& opacity, const std::vector<double>& quat,
                           const std::vector<double>& scl, bool rg = false) {
    const int n = static_cast<int>(mu.size() / 3);
    GaussianSet g;
    g.mu = Tensor({n, 3}, mu, rg);
    g.color = Tensor({n, 3}, color, rg);
    g.opacity = Tensor({n, 1}, opacity, rg);
    g.rotation = Tensor({n, 4}, quat, rg);
    g.scale = Tensor({n, 3}, scl, rg);
    return g;
}

// direct evaluation of one isotropic Gaussian's 2D footprint at a pixel
double isotropic_alpha(double opacity, double s, double z, double fx, double dx_px,
                       double dy_px) {
    const double sigma_px = fx * s / z;
    const double q = (dx_px * dx_px + dy_px * dy_px) / (sigma_px * sigma_px);
    return std::min(0.9995, opacity * std::exp(-0.5 * q));
}

// loop-based SSIM re-implementation with the same window definition
double ssim_oracle(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
    const int win = 11;
    const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
    std::vector<double> kernel(win * win);
    double ksum = 0;
    for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
            const double dx = x - 5, dy = y - 5;
            kernel[y * win + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            ksum += kernel[y * win + x];
        }
    for (auto& k : kernel) k /= ksum;
    double acc = 0;
    long long count = 0;
    for (int c = 0; c < 3; ++c)
        for (int cy = 5; cy < h - 5; ++cy)
            for (int cx = 5; cx < w - 5; ++cx) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int v = 0; v < win; ++v)
                    for (int u = 0; u < win; ++u) {
                        const double k = kernel[v * win + u];
                        const double pa = a[((cy + v - 5) * static_cast<size_t>(w) + cx + u - 5) * 3 + c];
                        const double pb = b[((cy + v - 5) * static_cast<size_t>(w) + cx + u - 5) * 3 + c];
                        mx += k * pa;
                        my += k * pb;
                        xx += k * pa * pa;
                        yy += k * pb * pb;
                        xy += k * pa * pb;
                    }
                acc += ((2 * mx * my + c1) * (2 * (xy - mx * my) + c2)) /
                       ((mx * mx + my * my + c1) * ((xx - mx * mx) + (yy - my * my) + c2));
                ++count;
            }
    return acc / count;
}

}  // namespace

TEST_CASE("gaussian_head zero logits give the documented defaults") {
    ParamStore store;
    Rng rng(3);
    GaussianHead head = GaussianHead::create(store, "g", 6, 2, 0.04, rng);
    for (auto& e : store.entries())
        for (auto& v : e.tensor.mutable_data()) v = 0.0;
    Tensor mu = Tensor::full({3, 3}, 0.5);
    Tensor feats = Tensor::full({3, 6}, 0.7);
    GaussianSet g = gaussian_head(mu, feats, head);
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 3; ++c) CHECK(g.color.at(i, c) == doctest::Approx(0.5));
        CHECK(g.opacity.at(i, 0) == doctest::Approx(0.5));
        CHECK(g.rotation.at(i, 0) == doctest::Approx(1.0));
        for (int c = 1; c < 4; ++c) CHECK(g.rotation.at(i, c) == doctest::Approx(0.0));
        for (int c = 0; c < 3; ++c) CHECK(g.scale.at(i, c) == doctest::Approx(0.04));
    }
}

TEST_CASE("gaussian_head output shapes are (3,1,4,3)") {
    ParamStore store;
    Rng rng(5);
    GaussianHead head = GaussianHead::create(store, "g", 8, 2, 0.05, rng);
    Tensor mu = Tensor::full({7, 3}, 0.4);
    Tensor feats = Tensor::full({7, 8}, 0.2);
    GaussianSet g = gaussian_head(mu, feats, head);
    CHECK(g.color.cols() == 3);
    CHECK(g.opacity.cols() == 1);
    CHECK(g.rotation.cols() == 4);
    CHECK(g.scale.cols() == 3);
    for (int i = 0; i < 7; ++i) {
        double n = 0;
        for (int c = 0; c < 4; ++c) n += g.rotation.at(i, c) * g.rotation.at(i, c);
        CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-9);  // unit quaternions
        for (int c = 0; c < 3; ++c) CHECK(g.scale.at(i, c) > 0.0);
        CHECK(g.opacity.at(i, 0) > 0.0);
        CHECK(g.opacity.at(i, 0) < 1.0);
    }
}

TEST_CASE("gaussian_head activations pass the gradient check") {
    ParamStore store;
    Rng rng(7);
    GaussianHead head = GaussianHead::create(store, "g", 4, 2, 0.05, rng);
    Tensor mu = Tensor::full({2, 3}, 0.5);
    Tensor feats({2, 4}, {0.3, -0.2, 0.5, 0.1, -0.4, 0.6, 0.2, -0.1});
    auto f = [&](ParamStore& s) {
        GaussianHead h = GaussianHead::attach(s, "g", 4, 2, 0.05);
        GaussianSet g = gaussian_head(mu, feats, h);
        Tensor parts = concat_cols({g.color, g.opacity, g.rotation, g.scale});
        return sum_all(mul(parts, parts));
    };
    CHECK(check_gradients(store, f, 1e-3).all_pass);
}

TEST_CASE("rasterizing an empty set returns the background exactly") {
    GaussianSet g;
    RenderTarget target;
    target.width = target.height = 8;
    target.background = {0.1, 0.2, 0.3};
    RasterResult r = rasterize(g, frontal_camera(8), target);
    for (int i = 0; i < 8 * 8; ++i) {
        CHECK(r.image.data()[i * 3] == 0.1);
        CHECK(r.image.data()[i * 3 + 1] == 0.2);
        CHECK(r.image.data()[i * 3 + 2] == 0.3);
        CHECK(r.alpha[i] == 0.0);
    }
}

TEST_CASE("single axial Gaussian: center color and monotone radial decay") {
    const int size = 17;
    CameraModel cam = frontal_camera(size, 24);
    cam.cx = cam.cy = 8.0;
    const double z = 2.0, s = 0.08, op = 0.9999;
    GaussianSet g = make_gaussians({0, 0, z}, {0.2, 0.9, 0.4}, {op}, {1, 0, 0, 0}, {s, s, s});
    RenderTarget target;
    target.width = target.height = size;
    target.background = {0, 0, 0};
    RasterResult r = rasterize(g, cam, target);

    // center pixel carries the Gaussian color
    const double* center = &r.image.data()[(8 * size + 8) * 3];
    CHECK(std::fabs(center[0] - 0.2) < 1e-3);
    CHECK(std::fabs(center[1] - 0.9) < 1e-3);
    CHECK(std::fabs(center[2] - 0.4) < 1e-3);

    // against the dense analytic footprint, and monotone along a scanline
    for (int x = 0; x < size; ++x) {
        const double expected_alpha = isotropic_alpha(op, s, z, cam.fx, x - 8.0, 0.0);
        CHECK(std::fabs(r.image.data()[(8 * size + x) * 3 + 1] - 0.9 * expected_alpha) < 1e-9);
    }
    for (int x = 8; x + 1 < size; ++x) {
        const double cur = r.image.data()[(8 * size + x) * 3 + 1];
        const double next = r.image.data()[(8 * size + x + 1) * 3 + 1];
        CHECK(cur >= next);
    }
}

TEST_CASE("two Gaussians composite by depth, swap flips the winner") {
    const int size = 9;
    CameraModel cam = frontal_camera(size, 30);
    cam.cx = cam.cy = 4.0;
    const double s = 0.2;
    auto build = [&](double z_red, double z_blue) {
        return make_gaussians({0, 0, z_red, 0, 0, z_blue}, {1, 0, 0, 0, 0, 1},
                              {0.9999, 0.9999}, {1, 0, 0, 0, 1, 0, 0, 0}, {s, s, s, s, s, s});
    };
    RenderTarget target;
    target.width = target.height = size;
    RasterResult red_front = rasterize(build(1.0, 2.0), cam, target);
    const double* c1 = &red_front.image.data()[(4 * size + 4) * 3];
    CHECK(std::fabs(c1[0] - 1.0) < 1e-3);
    CHECK(c1[2] < 1e-3);
    RasterResult blue_front = rasterize(build(2.0, 1.0), cam, target);
    const double* c2 = &blue_front.image.data()[(4 * size + 4) * 3];
    CHECK(std::fabs(c2[2] - 1.0) < 1e-3);
    CHECK(c2[0] < 1e-3);

    // hand-evaluated compositing at the center: front alpha a1, behind a2
    const double a1 = 0.9995;  // capped
    const double expect_red = a1 * 1.0;
    CHECK(std::fabs(c1[0] - expect_red) < 1e-6);
    const double a2_vis = (1 - a1) * 0.9995;
    CHECK(std::fabs(c1[2] - a2_vis) < 1e-6);
}

TEST_CASE("alpha map lies in [0,1] and colors stay in range") {
    Rng rng(11);
    const int n = 6, size = 12;
    std::vector<double> mu, color, op, quat, scl;
    for (int i = 0; i < n; ++i) {
        mu.insert(mu.end(), {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(1.0, 3.0)});
        color.insert(color.end(), {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        op.push_back(rng.uniform(0.05, 0.95));
        std::array<double, 4> q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        double qs = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (double v : q) quat.push_back(v / qs);
        scl.insert(scl.end(), {rng.uniform(0.02, 0.3), rng.uniform(0.02, 0.3), rng.uniform(0.02, 0.3)});
    }
    RenderTarget target;
    target.width = target.height = size;
    target.background = {0.3, 0.3, 0.3};
    RasterResult r = rasterize(make_gaussians(mu, color, op, quat, scl), frontal_camera(size), target);
    for (double a : r.alpha) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
    for (double c : r.image.data()) {
        CHECK(c >= -1e-12);
        CHECK(c <= 1.0 + 1e-9);
    }
}

TEST_CASE("rendering is invariant to gaussian list order") {
    Rng rng(13);
    const int n = 5, size = 10;
    std::vector<double> mu, color, op, quat, scl;
    for (int i = 0; i < n; ++i) {
        mu.insert(mu.end(), {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(1.0, 2.5)});
        color.insert(color.end(), {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        op.push_back(rng.uniform(0.2, 0.9));
        quat.insert(quat.end(), {1, 0, 0, 0});
        scl.insert(scl.end(), {0.1, 0.15, 0.08});
    }
    RenderTarget target;
    target.width = target.height = size;
    RasterResult fwd = rasterize(make_gaussians(mu, color, op, quat, scl), frontal_camera(size), target);
    // reverse the list
    std::vector<double> mu2, color2, op2, quat2, scl2;
    for (int i = n - 1; i >= 0; --i) {
        mu2.insert(mu2.end(), mu.begin() + i * 3, mu.begin() + i * 3 + 3);
        color2.insert(color2.end(), color.begin() + i * 3, color.begin() + i * 3 + 3);
        op2.push_back(op[i]);
        quat2.insert(quat2.end(), quat.begin() + i * 4, quat.begin() + i * 4 + 4);
        scl2.insert(scl2.end(), scl.begin() + i * 3, scl.begin() + i * 3 + 3);
    }
    RasterResult rev = rasterize(make_gaussians(mu2, color2, op2, quat2, scl2),
                                 frontal_camera(size), target);
    for (int i = 0; i < fwd.image.numel(); ++i)
        CHECK(fwd.image.data()[i] == doctest::Approx(rev.image.data()[i]).epsilon(1e-12));
}

TEST_CASE("shrinking scales drives off-center pixels to the background") {
    const int size = 11;
    CameraModel cam = frontal_camera(size, 30);
    cam.cx = cam.cy = 5.0;
    RenderTarget target;
    target.width = target.height = size;
    target.background = {0.25, 0.5, 0.75};
    const double s = 1e-4;
    GaussianSet g = make_gaussians({0, 0, 1.5}, {1, 1, 0}, {0.99}, {1, 0, 0, 0}, {s, s, s});
    RasterResult r = rasterize(g, cam, target);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            if (std::abs(x - 5) <= 1 && std::abs(y - 5) <= 1) continue;
            const double* px = &r.image.data()[(y * size + x) * 3];
            CHECK(std::fabs(px[0] - 0.25) < 1e-9);
            CHECK(std::fabs(px[1] - 0.5) < 1e-9);
            CHECK(std::fabs(px[2] - 0.75) < 1e-9);
        }
}

TEST_CASE("degenerate covariance is skipped with a counter, not an abort") {
    const int size = 8;
    GaussianSet g = make_gaussians({0, 0, 1.5}, {1, 0, 0}, {0.9}, {1, 0, 0, 0},
                                   {1e-12, 1.0, 1.0});  // needle: condition blows up
    RenderTarget target;
    target.width = target.height = size;
    RasterResult r = rasterize(g, frontal_camera(size), target);
    CHECK(r.skipped_degenerate == 1);
    for (int i = 0; i < size * size; ++i) CHECK(r.alpha[i] == 0.0);
}

TEST_CASE("rasterizer gradients match finite differences on a small scene") {
    ParamStore store;
    Rng rng(17);
    const int n = 3;
    std::vector<double> mu, color, op, quat, scl;
    for (int i = 0; i < n; ++i) {
        mu.insert(mu.end(), {rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(1.2, 2.2)});
        color.insert(color.end(), {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)});
        op.push_back(rng.uniform(0.3, 0.7));
        std::array<double, 4> q{1.0 + rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
        double qs = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (double v : q) quat.push_back(v / qs);
        scl.insert(scl.end(), {rng.uniform(0.05, 0.15), rng.uniform(0.05, 0.15), rng.uniform(0.05, 0.15)});
    }
    store.add("mu", Tensor({n, 3}, mu, true));
    store.add("color", Tensor({n, 3}, color, true));
    store.add("opacity", Tensor({n, 1}, op, true));
    store.add("quat", Tensor({n, 4}, quat, true));
    store.add("scale", Tensor({n, 3}, scl, true));

    const int size = 16;
    CameraModel cam = frontal_camera(size, 20);
    // slightly rotated, translated camera exercises the full EWA chain
    const double ang = 0.3;
    cam.R = {std::cos(ang), 0, std::sin(ang), 0, 1, 0, -std::sin(ang), 0, std::cos(ang)};
    cam.T = {0.4, -0.1, -0.3};
    RenderTarget target;
    target.width = target.height = size;
    target.background = {0.2, 0.2, 0.2};
    Tensor gt_img = Tensor::full({size, size, 3}, 0.4);

    auto f = [&](ParamStore& s) {
        GaussianSet g;
        g.mu = s.get("mu");
        g.color = s.get("color");
        g.opacity = s.get("opacity");
        g.rotation = s.get("quat");
        g.scale = s.get("scale");
        RasterResult r = rasterize(g, cam, target);
        return focal_render_loss(r.image, gt_img, 1.0);
    };
    GradCheckReport rep = check_gradients(store, f, 5e-3);
    CHECK(rep.all_pass);
}

TEST_CASE("focal loss basics") {
    Tensor pred({1, 1, 3}, {0.2, 0.4, 0.6});
    Tensor gt({1, 1, 3}, {0.2, 0.4, 0.6});
    CHECK(focal_render_loss(pred, gt, 1.0).value() == 0.0);

    Tensor p2({1}, {0.75});
    Tensor g2({1}, {0.25});
    CHECK(focal_render_loss(p2, g2, 1.0).value() == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("focal loss at gamma zero equals MSE") {
    Rng rng(19);
    std::vector<double> a(48), b(48);
    for (auto& v : a) v = rng.uniform(0, 1);
    for (auto& v : b) v = rng.uniform(0, 1);
    Tensor pred({4, 4, 3}, a), gt({4, 4, 3}, b);
    const double focal = focal_render_loss(pred, gt, 0.0).value();
    const double m = mse(a, b);
    CHECK(std::fabs(focal - m) < 1e-15);
}

TEST_CASE("focal loss rejects shape mismatches and has FD-correct gradients") {
    Tensor pred({2, 2}, {0.1, 0.2, 0.3, 0.4});
    Tensor gt({4}, {0.1, 0.2, 0.3, 0.4});
    CHECK_THROWS_AS(focal_render_loss(pred, gt, 1.0), DimensionError);

    ParamStore store;
    store.add("img", Tensor({2, 3}, {0.3, 0.8, 0.1, 0.9, 0.5, 0.2}, true));
    Tensor target({2, 3}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    for (double gamma : {0.0, 1.0, 2.0}) {
        auto f = [&](ParamStore& s) { return focal_render_loss(s.get("img"), target, gamma); };
        CHECK(check_gradients(store, f, 1e-3).all_pass);
    }
}

TEST_CASE("identical images: PSNR sentinel infinity, SSIM 1") {
    std::vector<double> img(16 * 16 * 3, 0.42);
    ImageMetrics m = image_metrics(img, img, 16, 16);
    CHECK(std::isinf(m.psnr_db));
    CHECK(m.ssim == doctest::Approx(1.0));
}

TEST_CASE("uniform 0.1 offset gives exactly 20 dB") {
    std::vector<double> a(16 * 16 * 3, 0.5), b(16 * 16 * 3, 0.6);
    ImageMetrics m = image_metrics(a, b, 16, 16);
    CHECK(m.psnr_db == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("SSIM matches the windowed-formula oracle") {
    Rng rng(23);
    const int w = 20, h = 14;
    std::vector<double> a(static_cast<size_t>(w) * h * 3), b(a.size());
    for (auto& v : a) v = rng.uniform(0, 1);
    for (size_t i = 0; i < b.size(); ++i) b[i] = std::clamp(a[i] + rng.uniform(-0.2, 0.2), 0.0, 1.0);
    ImageMetrics m = image_metrics(a, b, w, h);
    CHECK(std::fabs(m.ssim - ssim_oracle(a, b, w, h)) < 1e-9);
    CHECK(m.ssim >= -1.0);
    CHECK(m.ssim <= 1.0);
}
