#include "geomsplat/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "geomsplat/errors.hpp"

namespace geomsplat {

namespace {

constexpr double kAlphaMax = 0.9995;
constexpr double kMaxCondition = 1e12;

// Per-Gaussian projection state reused by forward and backward.
struct Splat {
    int index;            // row in the input tensors
    double px, py, pz;    // camera-space center
    double u, v;          // projected pixel center
    double a, b, c;       // inverse 2D covariance (A00, A01, A11)
    double s00, s01, s11; // 2D covariance
    double cov_cam[9];    // camera-space 3D covariance
    double jac[6];        // 2x3 projection Jacobian, row-major
    double rot[9];        // quaternion rotation matrix
    double opacity;
    double col[3];
};

}  // namespace

void RenderTarget::validate() const {
    if (width < 1 || height < 1) throw ConfigError("render target: non-positive size");
    if (!(near_clip < far_clip)) throw ConfigError("render target: near must be below far");
}

RasterResult rasterize(const GaussianSet& gaussians, const CameraModel& camera,
                       const RenderTarget& target) {
    target.validate();
    const int n = gaussians.count();
    const int W = target.width, H = target.height;

    RasterResult result;
    result.alpha.assign(static_cast<size_t>(W) * H, 0.0);

    const auto mu = n ? gaussians.mu.data() : std::span<const double>();
    const auto col = n ? gaussians.color.data() : std::span<const double>();
    const auto opa = n ? gaussians.opacity.data() : std::span<const double>();
    const auto rot = n ? gaussians.rotation.data() : std::span<const double>();
    const auto scl = n ? gaussians.scale.data() : std::span<const double>();

    std::vector<Splat> splats;
    splats.reserve(n);
    int skipped = 0;

    for (int i = 0; i < n; ++i) {
        const Vec3 cam = camera.world_to_camera(
            {mu[static_cast<size_t>(i) * 3], mu[static_cast<size_t>(i) * 3 + 1],
             mu[static_cast<size_t>(i) * 3 + 2]});
        if (cam[2] <= target.near_clip || cam[2] >= target.far_clip) continue;

        Splat s;
        s.index = i;
        s.px = cam[0];
        s.py = cam[1];
        s.pz = cam[2];
        s.u = camera.fx * s.px / s.pz + camera.cx;
        s.v = camera.fy * s.py / s.pz + camera.cy;

        const Mat3 rq = quat_to_mat3({rot[static_cast<size_t>(i) * 4], rot[static_cast<size_t>(i) * 4 + 1],
                                      rot[static_cast<size_t>(i) * 4 + 2],
                                      rot[static_cast<size_t>(i) * 4 + 3]});
        std::copy(rq.begin(), rq.end(), s.rot);
        // A3 = W * Rq * S with W = R^T; cov_cam = A3 A3^T
        double a3[9];
        for (int r = 0; r < 3; ++r)
            for (int cidx = 0; cidx < 3; ++cidx) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k)
                    acc += camera.R[k * 3 + r] * rq[k * 3 + cidx];  // W = R^T
                a3[r * 3 + cidx] = acc * scl[static_cast<size_t>(i) * 3 + cidx];
            }
        for (int r = 0; r < 3; ++r)
            for (int cidx = 0; cidx < 3; ++cidx) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += a3[r * 3 + k] * a3[cidx * 3 + k];
                s.cov_cam[r * 3 + cidx] = acc;
            }

        const double inv_z = 1.0 / s.pz;
        s.jac[0] = camera.fx * inv_z;
        s.jac[1] = 0.0;
        s.jac[2] = -camera.fx * s.px * inv_z * inv_z;
        s.jac[3] = 0.0;
        s.jac[4] = camera.fy * inv_z;
        s.jac[5] = -camera.fy * s.py * inv_z * inv_z;

        // sigma2d = J cov_cam J^T
        double jc[6];  // 2x3
        for (int r = 0; r < 2; ++r)
            for (int cidx = 0; cidx < 3; ++cidx) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += s.jac[r * 3 + k] * s.cov_cam[k * 3 + cidx];
                jc[r * 3 + cidx] = acc;
            }
        s.s00 = jc[0] * s.jac[0] + jc[1] * s.jac[1] + jc[2] * s.jac[2];
        s.s01 = jc[0] * s.jac[3] + jc[1] * s.jac[4] + jc[2] * s.jac[5];
        s.s11 = jc[3] * s.jac[3] + jc[4] * s.jac[4] + jc[5] * s.jac[5];

        const double det = s.s00 * s.s11 - s.s01 * s.s01;
        const double tr = s.s00 + s.s11;
        const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
        const double lmin = (tr - disc) / 2.0, lmax = (tr + disc) / 2.0;
        if (!(det > 0.0) || lmin <= 0.0 || lmax / lmin > kMaxCondition) {
            ++skipped;
            continue;
        }
        s.a = s.s11 / det;
        s.b = -s.s01 / det;
        s.c = s.s00 / det;
        s.opacity = opa[i];
        s.col[0] = col[static_cast<size_t>(i) * 3];
        s.col[1] = col[static_cast<size_t>(i) * 3 + 1];
        s.col[2] = col[static_cast<size_t>(i) * 3 + 2];
        splats.push_back(s);
    }
    result.skipped_degenerate = skipped;

    std::sort(splats.begin(), splats.end(), [](const Splat& l, const Splat& r) {
        return l.pz != r.pz ? l.pz < r.pz : l.index < r.index;
    });

    std::vector<double> image(static_cast<size_t>(H) * W * 3);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double T = 1.0;
            double cr = 0.0, cg = 0.0, cb = 0.0;
            for (const Splat& s : splats) {
                const double dx = x - s.u, dy = y - s.v;
                const double qf = s.a * dx * dx + 2.0 * s.b * dx * dy + s.c * dy * dy;
                const double alpha = std::min(kAlphaMax, s.opacity * std::exp(-0.5 * qf));
                cr += s.col[0] * alpha * T;
                cg += s.col[1] * alpha * T;
                cb += s.col[2] * alpha * T;
                T *= 1.0 - alpha;
            }
            const size_t o = (static_cast<size_t>(y) * W + x) * 3;
            image[o] = cr + target.background[0] * T;
            image[o + 1] = cg + target.background[1] * T;
            image[o + 2] = cb + target.background[2] * T;
            result.alpha[static_cast<size_t>(y) * W + x] = 1.0 - T;
        }

    std::vector<Tensor> parents;
    if (n) parents = {gaussians.mu, gaussians.color, gaussians.opacity, gaussians.rotation,
                      gaussians.scale};
    Tensor img = make_node({H, W, 3}, std::move(image), parents, {});
    result.image = img;
    if (!img.requires_grad()) return result;

    detail::Node* nmu = gaussians.mu.node().get();
    detail::Node* ncol = gaussians.color.node().get();
    detail::Node* nopa = gaussians.opacity.node().get();
    detail::Node* nrot = gaussians.rotation.node().get();
    detail::Node* nscl = gaussians.scale.node().get();
    detail::Node* nimg = img.node().get();
    const CameraModel cam = camera;
    const std::array<double, 3> bg = target.background;

    nimg->backprop = [nmu, ncol, nopa, nrot, nscl, nimg, splats, W, H, cam, bg] {
        const int m2 = static_cast<int>(splats.size());
        if (m2 == 0) return;
        nmu->ensure_grad();
        ncol->ensure_grad();
        nopa->ensure_grad();
        nrot->ensure_grad();
        nscl->ensure_grad();

        // per-splat accumulators over all pixels
        std::vector<double> g_u(m2, 0.0), g_v(m2, 0.0), g_op(m2, 0.0);
        std::vector<double> g_A(static_cast<size_t>(m2) * 3, 0.0);  // dL/d(a,b,c)
        std::vector<double> g_col(static_cast<size_t>(m2) * 3, 0.0);
        std::vector<double> alpha_buf(m2), trans_buf(m2);

        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const size_t o = (static_cast<size_t>(y) * W + x) * 3;
                const double gr = nimg->grad[o], gg = nimg->grad[o + 1], gbv = nimg->grad[o + 2];
                if (gr == 0.0 && gg == 0.0 && gbv == 0.0) continue;

                double T = 1.0;
                for (int k = 0; k < m2; ++k) {
                    const Splat& s = splats[k];
                    const double dx = x - s.u, dy = y - s.v;
                    const double qf = s.a * dx * dx + 2.0 * s.b * dx * dy + s.c * dy * dy;
                    const double raw = s.opacity * std::exp(-0.5 * qf);
                    alpha_buf[k] = std::min(kAlphaMax, raw);
                    trans_buf[k] = T;
                    T *= 1.0 - alpha_buf[k];
                }

                // walk back-to-front; S = color composited behind the current splat
                double Sr = bg[0] * T, Sg = bg[1] * T, Sb = bg[2] * T;
                for (int k = m2 - 1; k >= 0; --k) {
                    const Splat& s = splats[k];
                    const double alpha = alpha_buf[k];
                    const double Tk = trans_buf[k];

                    const double w = alpha * Tk;
                    g_col[static_cast<size_t>(k) * 3] += gr * w;
                    g_col[static_cast<size_t>(k) * 3 + 1] += gg * w;
                    g_col[static_cast<size_t>(k) * 3 + 2] += gbv * w;

                    // dC/dalpha_k = c_k T_k - S_k / (1 - alpha_k)
                    const double inv1m = 1.0 / (1.0 - alpha);
                    const double dLdalpha = gr * (s.col[0] * Tk - Sr * inv1m) +
                                            gg * (s.col[1] * Tk - Sg * inv1m) +
                                            gbv * (s.col[2] * Tk - Sb * inv1m);

                    Sr += s.col[0] * alpha * Tk;
                    Sg += s.col[1] * alpha * Tk;
                    Sb += s.col[2] * alpha * Tk;

                    if (alpha >= kAlphaMax) continue;  // clamped: flat in all inputs
                    const double dx = x - s.u, dy = y - s.v;
                    const double qf = s.a * dx * dx + 2.0 * s.b * dx * dy + s.c * dy * dy;
                    const double E = std::exp(-0.5 * qf);
                    g_op[k] += dLdalpha * E;
                    const double dLdqf = dLdalpha * s.opacity * E * -0.5;
                    g_A[static_cast<size_t>(k) * 3] += dLdqf * dx * dx;
                    g_A[static_cast<size_t>(k) * 3 + 1] += dLdqf * 2.0 * dx * dy;
                    g_A[static_cast<size_t>(k) * 3 + 2] += dLdqf * dy * dy;
                    const double dqf_ddx = 2.0 * (s.a * dx + s.b * dy);
                    const double dqf_ddy = 2.0 * (s.b * dx + s.c * dy);
                    g_u[k] -= dLdqf * dqf_ddx;  // d(dx)/du = -1
                    g_v[k] -= dLdqf * dqf_ddy;
                }
            }

        // chain per-splat image-space gradients to the Gaussian parameters
        for (int k = 0; k < m2; ++k) {
            const Splat& s = splats[k];
            const int i = s.index;

            for (int c = 0; c < 3; ++c)
                ncol->grad[static_cast<size_t>(i) * 3 + c] += g_col[static_cast<size_t>(k) * 3 + c];
            nopa->grad[i] += g_op[k];

            // dL/dA (full symmetric matrix) -> dL/dSigma2D = -A G A
            const double GA00 = g_A[static_cast<size_t>(k) * 3];
            const double GA01 = g_A[static_cast<size_t>(k) * 3 + 1] / 2.0;
            const double GA11 = g_A[static_cast<size_t>(k) * 3 + 2];
            const double A00 = s.a, A01 = s.b, A11 = s.c;
            // P = A * GA
            const double P00 = A00 * GA00 + A01 * GA01;
            const double P01 = A00 * GA01 + A01 * GA11;
            const double P10 = A01 * GA00 + A11 * GA01;
            const double P11 = A01 * GA01 + A11 * GA11;
            // GS = -P * A
            const double GS00 = -(P00 * A00 + P01 * A01);
            const double GS01 = -(P00 * A01 + P01 * A11);
            const double GS10 = -(P10 * A00 + P11 * A01);
            const double GS11 = -(P10 * A01 + P11 * A11);

            // Sigma2D = J C J^T: dL/dC = J^T GS J; dL/dJ = (GS + GS^T) J C
            double GC[9];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    GC[r * 3 + c] = s.jac[0 * 3 + r] * (GS00 * s.jac[0 * 3 + c] + GS01 * s.jac[1 * 3 + c]) +
                                    s.jac[1 * 3 + r] * (GS10 * s.jac[0 * 3 + c] + GS11 * s.jac[1 * 3 + c]);
                }
            double GJ[6];
            {
                const double Gsym[4] = {2 * GS00, GS01 + GS10, GS01 + GS10, 2 * GS11};
                double JC[6];
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 3; ++c) {
                        double acc = 0.0;
                        for (int kk = 0; kk < 3; ++kk)
                            acc += s.jac[r * 3 + kk] * s.cov_cam[kk * 3 + c];
                        JC[r * 3 + c] = acc;
                    }
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 3; ++c)
                        GJ[r * 3 + c] = Gsym[r * 2 + 0] * JC[0 * 3 + c] +
                                        Gsym[r * 2 + 1] * JC[1 * 3 + c];
            }

            // camera-space center gradient: projection + Jacobian paths
            const double inv_z = 1.0 / s.pz;
            double g_px = g_u[k] * cam.fx * inv_z;
            double g_py = g_v[k] * cam.fy * inv_z;
            double g_pz = -g_u[k] * cam.fx * s.px * inv_z * inv_z -
                          g_v[k] * cam.fy * s.py * inv_z * inv_z;
            g_px += GJ[2] * (-cam.fx * inv_z * inv_z);
            g_py += GJ[5] * (-cam.fy * inv_z * inv_z);
            g_pz += GJ[0] * (-cam.fx * inv_z * inv_z) + GJ[2] * (2.0 * cam.fx * s.px * inv_z * inv_z * inv_z) +
                    GJ[4] * (-cam.fy * inv_z * inv_z) + GJ[5] * (2.0 * cam.fy * s.py * inv_z * inv_z * inv_z);

            // x_c = R^T (mu - T)  =>  dL/dmu = R dL/dx_c
            for (int c = 0; c < 3; ++c)
                nmu->grad[static_cast<size_t>(i) * 3 + c] +=
                    cam.R[c * 3 + 0] * g_px + cam.R[c * 3 + 1] * g_py + cam.R[c * 3 + 2] * g_pz;

            // cov_cam = A3 A3^T with A3 = W Rq S: dL/dA3 = 2 GC_sym A3
            double a3[9];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int kk = 0; kk < 3; ++kk)
                        acc += cam.R[kk * 3 + r] * s.rot[kk * 3 + c];
                    a3[r * 3 + c] = acc * nscl->data[static_cast<size_t>(i) * 3 + c];
                }
            double GA3[9];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int kk = 0; kk < 3; ++kk)
                        acc += (GC[r * 3 + kk] + GC[kk * 3 + r]) * a3[kk * 3 + c];
                    GA3[r * 3 + c] = acc;
                }
            // A3 = W B, W = R^T  =>  dL/dB = W^T GA3 = R GA3
            double GB[9];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int kk = 0; kk < 3; ++kk) acc += cam.R[r * 3 + kk] * GA3[kk * 3 + c];
                    GB[r * 3 + c] = acc;
                }
            // B = Rq S
            double GRq[9];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    GRq[r * 3 + c] = GB[r * 3 + c] * nscl->data[static_cast<size_t>(i) * 3 + c];
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int r = 0; r < 3; ++r) acc += GB[r * 3 + c] * s.rot[r * 3 + c];
                nscl->grad[static_cast<size_t>(i) * 3 + c] += acc;
            }

            const double qw = nrot->data[static_cast<size_t>(i) * 4];
            const double qx = nrot->data[static_cast<size_t>(i) * 4 + 1];
            const double qy = nrot->data[static_cast<size_t>(i) * 4 + 2];
            const double qz = nrot->data[static_cast<size_t>(i) * 4 + 3];
            const double dRw[9] = {0, -2 * qz, 2 * qy, 2 * qz, 0, -2 * qx, -2 * qy, 2 * qx, 0};
            const double dRx[9] = {0, 2 * qy, 2 * qz, 2 * qy, -4 * qx, -2 * qw, 2 * qz, 2 * qw, -4 * qx};
            const double dRy[9] = {-4 * qy, 2 * qx, 2 * qw, 2 * qx, 0, 2 * qz, -2 * qw, 2 * qz, -4 * qy};
            const double dRz[9] = {-4 * qz, -2 * qw, 2 * qx, 2 * qw, -4 * qz, 2 * qy, 2 * qx, 2 * qy, 0};
            const double* dR[4] = {dRw, dRx, dRy, dRz};
            for (int q = 0; q < 4; ++q) {
                double acc = 0.0;
                for (int e = 0; e < 9; ++e) acc += GRq[e] * dR[q][e];
                nrot->grad[static_cast<size_t>(i) * 4 + q] += acc;
            }
        }
    };
    return result;
}

}  // namespace geomsplat
