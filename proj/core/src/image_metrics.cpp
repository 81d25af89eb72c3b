#include "geomsplat/image_metrics.hpp"

#include <cmath>
#include <limits>

#include "geomsplat/errors.hpp"

namespace geomsplat {

Tensor focal_render_loss(const Tensor& pred, const Tensor& gt, double gamma) {
    if (pred.shape() != gt.shape()) throw DimensionError("focal loss: shape mismatch");
    if (gamma < 0.0) throw ContractError("focal loss: gamma must be >= 0");
    const int n = pred.numel();
    const auto dp = pred.data(), dg = gt.data();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = dp[i] - dg[i];
        acc += (gamma == 0.0 ? 1.0 : std::pow(std::fabs(e), gamma)) * e * e;
    }
    detail::Node* np = pred.node().get();
    detail::Node* ng = gt.node().get();
    Tensor r = make_node({1}, {acc / n}, {pred, gt}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [np, ng, nr, n, gamma] {
            const double g = nr->grad[0] / n;
            // d(|e|^gamma e^2)/de = (gamma+2) |e|^(gamma+1) sign(e)
            auto dfe = [gamma](double e) {
                if (gamma == 0.0) return 2.0 * e;
                return (gamma + 2.0) * std::pow(std::fabs(e), gamma + 1.0) * (e >= 0 ? 1.0 : -1.0);
            };
            if (np->requires_grad) {
                auto& gp = np->ensure_grad();
                for (int i = 0; i < n; ++i) gp[i] += g * dfe(np->data[i] - ng->data[i]);
            }
            if (ng->requires_grad) {
                auto& gg = ng->ensure_grad();
                for (int i = 0; i < n; ++i) gg[i] -= g * dfe(np->data[i] - ng->data[i]);
            }
        };
    return r;
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("mse: size mismatch");
    if (a.empty()) throw ContractError("mse: empty input");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double e = a[i] - b[i];
        acc += e * e;
    }
    return acc / static_cast<double>(a.size());
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
    std::vector<double> w(static_cast<size_t>(kWindow) * kWindow);
    const int h = kWindow / 2;
    double sum = 0.0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const double dy = y - h, dx = x - h;
            w[static_cast<size_t>(y) * kWindow + x] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            sum += w[static_cast<size_t>(y) * kWindow + x];
        }
    for (auto& v : w) v /= sum;
    return w;
}

}  // namespace

ImageMetrics image_metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                           int width, int height) {
    if (pred.size() != gt.size() ||
        pred.size() != static_cast<size_t>(width) * height * 3)
        throw DimensionError("image_metrics: buffer size mismatch");
    if (width < kWindow || height < kWindow)
        throw ContractError("image_metrics: image smaller than the SSIM window");

    ImageMetrics m{};
    const double err = mse(pred, gt);
    m.psnr_db = err == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / err);

    static const std::vector<double> win = gaussian_window();
    double ssim_acc = 0.0;
    long long count = 0;
    for (int c = 0; c < 3; ++c)
        for (int cy = kWindow / 2; cy < height - kWindow / 2; ++cy)
            for (int cx = kWindow / 2; cx < width - kWindow / 2; ++cx) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int wy = 0; wy < kWindow; ++wy)
                    for (int wx = 0; wx < kWindow; ++wx) {
                        const double w = win[static_cast<size_t>(wy) * kWindow + wx];
                        const int y = cy + wy - kWindow / 2, x = cx + wx - kWindow / 2;
                        const double a = pred[(static_cast<size_t>(y) * width + x) * 3 + c];
                        const double b = gt[(static_cast<size_t>(y) * width + x) * 3 + c];
                        mx += w * a;
                        my += w * b;
                        sxx += w * a * a;
                        syy += w * b * b;
                        sxy += w * a * b;
                    }
                const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
                const double s = ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                                 ((mx * mx + my * my + kC1) * (vx + vy + kC2));
                ssim_acc += s;
                ++count;
            }
    m.ssim = ssim_acc / static_cast<double>(count);
    return m;
}

}  // namespace geomsplat
