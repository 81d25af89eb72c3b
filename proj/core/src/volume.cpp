#include "geomsplat/volume.hpp"

#include <cmath>
#include <filesystem>

#include "geomsplat/errors.hpp"
#include "geomsplat/image_io.hpp"

namespace geomsplat {

Tensor sample_trilinear(const DenseVolume& volume, const Tensor& coords, FetchCounter* counter) {
    const int n = coords.rows();
    if (coords.cols() != 3) throw DimensionError("sample_trilinear: coords must be N x 3");
    const int D = volume.resolution, C = volume.channels;
    if (counter) counter->fetches += n;

    struct Corner {
        int cell;
        double w;
    };
    // 8 corners per point plus per-axis interpolation state for the backward.
    std::vector<int> i0(static_cast<size_t>(n) * 3), i1(static_cast<size_t>(n) * 3);
    std::vector<double> frac(static_cast<size_t>(n) * 3);
    std::vector<char> clamped(static_cast<size_t>(n) * 3);

    const auto pc = coords.data();
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) {
            const double g =
                (pc[static_cast<size_t>(i) * 3 + a] - volume.bounds.min(a)) / volume.cell_size(a) -
                0.5;
            double gc = g;
            bool cl = false;
            if (gc <= 0.0) {
                gc = 0.0;
                cl = (g < 0.0);
            }
            if (gc >= D - 1) {
                gc = D - 1;
                cl = cl || (g > D - 1);
            }
            int lo = static_cast<int>(gc);
            if (lo > D - 2) lo = std::max(D - 2, 0);
            const double f = gc - lo;
            i0[static_cast<size_t>(i) * 3 + a] = lo;
            i1[static_cast<size_t>(i) * 3 + a] = std::min(lo + 1, D - 1);
            frac[static_cast<size_t>(i) * 3 + a] = f;
            clamped[static_cast<size_t>(i) * 3 + a] = cl ? 1 : 0;
        }

    auto cell_of = [D](int x, int y, int z) { return (x * D + y) * D + z; };
    std::vector<double> out(static_cast<size_t>(n) * C, 0.0);
    const auto vals = volume.values.data();
    for (int i = 0; i < n; ++i) {
        const int x0 = i0[i * 3], x1 = i1[i * 3];
        const int y0 = i0[i * 3 + 1], y1 = i1[i * 3 + 1];
        const int z0 = i0[i * 3 + 2], z1 = i1[i * 3 + 2];
        const double fx = frac[i * 3], fy = frac[i * 3 + 1], fz = frac[i * 3 + 2];
        const Corner corners[8] = {
            {cell_of(x0, y0, z0), (1 - fx) * (1 - fy) * (1 - fz)},
            {cell_of(x0, y0, z1), (1 - fx) * (1 - fy) * fz},
            {cell_of(x0, y1, z0), (1 - fx) * fy * (1 - fz)},
            {cell_of(x0, y1, z1), (1 - fx) * fy * fz},
            {cell_of(x1, y0, z0), fx * (1 - fy) * (1 - fz)},
            {cell_of(x1, y0, z1), fx * (1 - fy) * fz},
            {cell_of(x1, y1, z0), fx * fy * (1 - fz)},
            {cell_of(x1, y1, z1), fx * fy * fz},
        };
        double* o = &out[static_cast<size_t>(i) * C];
        for (const auto& cr : corners) {
            if (cr.w == 0.0) continue;
            const double* v = &vals[static_cast<size_t>(cr.cell) * C];
            for (int c = 0; c < C; ++c) o[c] += cr.w * v[c];
        }
    }

    detail::Node* nv = volume.values.node().get();
    detail::Node* ncoord = coords.node().get();
    const double cell_sz[3] = {volume.cell_size(0), volume.cell_size(1), volume.cell_size(2)};
    Tensor r = make_node({n, C}, std::move(out), {volume.values, coords}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad()) {
        const double csx = cell_sz[0], csy = cell_sz[1], csz = cell_sz[2];
        nr->backprop = [nv, ncoord, nr, n, C, D, i0, i1, frac, clamped, cell_of, csx, csy, csz] {
            const bool gv = nv->requires_grad;
            const bool gc = ncoord->requires_grad;
            if (gv) nv->ensure_grad();
            if (gc) ncoord->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const int x0 = i0[i * 3], x1 = i1[i * 3];
                const int y0 = i0[i * 3 + 1], y1 = i1[i * 3 + 1];
                const int z0 = i0[i * 3 + 2], z1 = i1[i * 3 + 2];
                const double fx = frac[i * 3], fy = frac[i * 3 + 1], fz = frac[i * 3 + 2];
                const double* g = &nr->grad[static_cast<size_t>(i) * C];
                const int cells[8] = {cell_of(x0, y0, z0), cell_of(x0, y0, z1),
                                      cell_of(x0, y1, z0), cell_of(x0, y1, z1),
                                      cell_of(x1, y0, z0), cell_of(x1, y0, z1),
                                      cell_of(x1, y1, z0), cell_of(x1, y1, z1)};
                const double wx[2] = {1 - fx, fx}, wy[2] = {1 - fy, fy}, wz[2] = {1 - fz, fz};
                if (gv) {
                    for (int k = 0; k < 8; ++k) {
                        const double w = wx[k >> 2] * wy[(k >> 1) & 1] * wz[k & 1];
                        if (w == 0.0) continue;
                        double* dst = &nv->grad[static_cast<size_t>(cells[k]) * C];
                        for (int c = 0; c < C; ++c) dst[c] += w * g[c];
                    }
                }
                if (gc) {
                    // d(out)/d(frac) per axis, contracted with channel grads
                    double dfx = 0.0, dfy = 0.0, dfz = 0.0;
                    const double* vals2 = nv->data.data();
                    for (int k = 0; k < 8; ++k) {
                        const int bx = k >> 2, by = (k >> 1) & 1, bz = k & 1;
                        const double* v = &vals2[static_cast<size_t>(cells[k]) * C];
                        double dot = 0.0;
                        for (int c = 0; c < C; ++c) dot += v[c] * g[c];
                        dfx += (bx ? 1.0 : -1.0) * wy[by] * wz[bz] * dot;
                        dfy += (by ? 1.0 : -1.0) * wx[bx] * wz[bz] * dot;
                        dfz += (bz ? 1.0 : -1.0) * wx[bx] * wy[by] * dot;
                    }
                    double* gcrd = &ncoord->grad[static_cast<size_t>(i) * 3];
                    if (!clamped[i * 3] && x1 != x0) gcrd[0] += dfx / csx;
                    if (!clamped[i * 3 + 1] && y1 != y0) gcrd[1] += dfy / csy;
                    if (!clamped[i * 3 + 2] && z1 != z0) gcrd[2] += dfz / csz;
                }
            }
        };
    }
    return r;
}

Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, int resolution) {
    const int D = resolution;
    const int cells = D * D * D;
    if (input.rows() != cells) throw DimensionError("conv3d: input rows != resolution^3");
    const int cin = input.cols();
    if (weight.rows() != 27 * cin) throw DimensionError("conv3d: weight rows != 27*Cin");
    const int cout = weight.cols();
    if (bias.numel() != cout) throw DimensionError("conv3d: bias width mismatch");

    std::vector<double> out(static_cast<size_t>(cells) * cout);
    const auto din = input.data(), dw = weight.data(), db = bias.data();
    for (int i = 0; i < cells; ++i)
        for (int c = 0; c < cout; ++c) out[static_cast<size_t>(i) * cout + c] = db[c];

    auto accumulate = [D](auto&& body) {
        for (int x = 0; x < D; ++x)
            for (int y = 0; y < D; ++y)
                for (int z = 0; z < D; ++z) {
                    const int cell = (x * D + y) * D + z;
                    int tap = 0;
                    for (int dx = -1; dx <= 1; ++dx)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dz = -1; dz <= 1; ++dz, ++tap) {
                                const int nx = x + dx, ny = y + dy, nz = z + dz;
                                if (nx < 0 || nx >= D || ny < 0 || ny >= D || nz < 0 || nz >= D)
                                    continue;
                                body(cell, tap, (nx * D + ny) * D + nz);
                            }
                }
    };

    accumulate([&](int cell, int tap, int nb) {
        const double* in_row = &din[static_cast<size_t>(nb) * cin];
        double* out_row = &out[static_cast<size_t>(cell) * cout];
        const double* w_base = &dw[static_cast<size_t>(tap) * cin * cout];
        for (int ci = 0; ci < cin; ++ci) {
            const double v = in_row[ci];
            if (v == 0.0) continue;
            const double* w_row = &w_base[static_cast<size_t>(ci) * cout];
            for (int co = 0; co < cout; ++co) out_row[co] += v * w_row[co];
        }
    });

    detail::Node* ni = input.node().get();
    detail::Node* nw = weight.node().get();
    detail::Node* nb2 = bias.node().get();
    Tensor r = make_node({cells, cout}, std::move(out), {input, weight, bias}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad()) {
        nr->backprop = [ni, nw, nb2, nr, D, cin, cout, accumulate, cells] {
            const bool gi = ni->requires_grad, gw = nw->requires_grad, gb = nb2->requires_grad;
            if (gi) ni->ensure_grad();
            if (gw) nw->ensure_grad();
            if (gb) {
                auto& g = nb2->ensure_grad();
                for (int cell = 0; cell < cells; ++cell)
                    for (int co = 0; co < cout; ++co)
                        g[co] += nr->grad[static_cast<size_t>(cell) * cout + co];
            }
            if (!gi && !gw) return;
            accumulate([&](int cell, int tap, int nb) {
                const double* g_out = &nr->grad[static_cast<size_t>(cell) * cout];
                const size_t wb = static_cast<size_t>(tap) * cin * cout;
                if (gi) {
                    double* g_in = &ni->grad[static_cast<size_t>(nb) * cin];
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* w_row = &nw->data[wb + static_cast<size_t>(ci) * cout];
                        double acc = 0.0;
                        for (int co = 0; co < cout; ++co) acc += g_out[co] * w_row[co];
                        g_in[ci] += acc;
                    }
                }
                if (gw) {
                    const double* in_row = &ni->data[static_cast<size_t>(nb) * cin];
                    for (int ci = 0; ci < cin; ++ci) {
                        const double v = in_row[ci];
                        if (v == 0.0) continue;
                        double* gw_row = &nw->grad[wb + static_cast<size_t>(ci) * cout];
                        for (int co = 0; co < cout; ++co) gw_row[co] += v * g_out[co];
                    }
                }
            });
        };
    }
    return r;
}

namespace {

// partition boundaries of adaptive pooling: window i covers [b[i], b[i+1])
std::vector<int> pool_bounds(int in_res, int out_res) {
    std::vector<int> b(out_res + 1);
    for (int i = 0; i <= out_res; ++i)
        b[i] = static_cast<int>(static_cast<long long>(i) * in_res / out_res);
    return b;
}

}  // namespace

Tensor avg_pool3d(const Tensor& input, int in_res, int out_res) {
    const int cells_in = in_res * in_res * in_res;
    if (input.rows() != cells_in) throw DimensionError("avg_pool3d: input rows mismatch");
    if (out_res < 1 || out_res > in_res) throw ConfigError("avg_pool3d: bad output resolution");
    const int C = input.cols();
    const auto b = pool_bounds(in_res, out_res);
    const int cells_out = out_res * out_res * out_res;
    std::vector<double> out(static_cast<size_t>(cells_out) * C, 0.0);
    std::vector<double> inv_count(cells_out);
    const auto din = input.data();
    for (int ox = 0; ox < out_res; ++ox)
        for (int oy = 0; oy < out_res; ++oy)
            for (int oz = 0; oz < out_res; ++oz) {
                const int ocell = (ox * out_res + oy) * out_res + oz;
                const int count =
                    (b[ox + 1] - b[ox]) * (b[oy + 1] - b[oy]) * (b[oz + 1] - b[oz]);
                inv_count[ocell] = 1.0 / count;
                double* o = &out[static_cast<size_t>(ocell) * C];
                for (int x = b[ox]; x < b[ox + 1]; ++x)
                    for (int y = b[oy]; y < b[oy + 1]; ++y)
                        for (int z = b[oz]; z < b[oz + 1]; ++z) {
                            const double* v = &din[static_cast<size_t>((x * in_res + y) * in_res + z) * C];
                            for (int c = 0; c < C; ++c) o[c] += v[c];
                        }
                for (int c = 0; c < C; ++c) o[c] *= inv_count[ocell];
            }
    detail::Node* ni = input.node().get();
    Tensor r = make_node({cells_out, C}, std::move(out), {input}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [ni, nr, in_res, out_res, C, b, inv_count] {
            auto& g = ni->ensure_grad();
            for (int ox = 0; ox < out_res; ++ox)
                for (int oy = 0; oy < out_res; ++oy)
                    for (int oz = 0; oz < out_res; ++oz) {
                        const int ocell = (ox * out_res + oy) * out_res + oz;
                        const double* go = &nr->grad[static_cast<size_t>(ocell) * C];
                        for (int x = b[ox]; x < b[ox + 1]; ++x)
                            for (int y = b[oy]; y < b[oy + 1]; ++y)
                                for (int z = b[oz]; z < b[oz + 1]; ++z) {
                                    double* gi =
                                        &g[static_cast<size_t>((x * in_res + y) * in_res + z) * C];
                                    for (int c = 0; c < C; ++c)
                                        gi[c] += go[c] * inv_count[ocell];
                                }
                    }
        };
    return r;
}

Tensor upsample_nearest3d(const Tensor& input, int in_res, int out_res) {
    const int cells_in = in_res * in_res * in_res;
    if (input.rows() != cells_in) throw DimensionError("upsample_nearest3d: input rows mismatch");
    if (out_res < in_res) throw ConfigError("upsample_nearest3d: output below input resolution");
    const int C = input.cols();
    const auto b = pool_bounds(out_res, in_res);
    std::vector<int> axis_map(out_res);
    for (int i = 0; i < in_res; ++i)
        for (int x = b[i]; x < b[i + 1]; ++x) axis_map[x] = i;
    const int cells_out = out_res * out_res * out_res;
    std::vector<double> out(static_cast<size_t>(cells_out) * C);
    const auto din = input.data();
    for (int x = 0; x < out_res; ++x)
        for (int y = 0; y < out_res; ++y)
            for (int z = 0; z < out_res; ++z) {
                const int icell =
                    (axis_map[x] * in_res + axis_map[y]) * in_res + axis_map[z];
                const int ocell = (x * out_res + y) * out_res + z;
                const double* v = &din[static_cast<size_t>(icell) * C];
                double* o = &out[static_cast<size_t>(ocell) * C];
                for (int c = 0; c < C; ++c) o[c] = v[c];
            }
    detail::Node* ni = input.node().get();
    Tensor r = make_node({cells_out, C}, std::move(out), {input}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [ni, nr, in_res, out_res, C, axis_map] {
            auto& g = ni->ensure_grad();
            for (int x = 0; x < out_res; ++x)
                for (int y = 0; y < out_res; ++y)
                    for (int z = 0; z < out_res; ++z) {
                        const int icell =
                            (axis_map[x] * in_res + axis_map[y]) * in_res + axis_map[z];
                        const int ocell = (x * out_res + y) * out_res + z;
                        const double* go = &nr->grad[static_cast<size_t>(ocell) * C];
                        double* gi = &g[static_cast<size_t>(icell) * C];
                        for (int c = 0; c < C; ++c) gi[c] += go[c];
                    }
        };
    return r;
}

FusionNet FusionNet::create(ParamStore& store, const std::string& prefix, int in_channels,
                            int channels, Rng& rng) {
    FusionNet net;
    net.in_channels = in_channels;
    net.channels = channels;
    auto conv_init = [&](const std::string& name, int cin, int cout) {
        const double s = 1.0 / std::sqrt(27.0 * cin);
        return store.add_uniform(prefix + "." + name + ".w", {27 * cin, cout}, -s, s, rng);
    };
    net.w1 = conv_init("conv1", in_channels, channels);
    net.b1 = store.add(prefix + ".conv1.b", Tensor::zeros({1, channels}, true));
    net.w2 = conv_init("conv2", channels, channels);
    net.b2 = store.add(prefix + ".conv2.b", Tensor::zeros({1, channels}, true));
    net.w3 = conv_init("conv3", channels, channels);
    net.b3 = store.add(prefix + ".conv3.b", Tensor::zeros({1, channels}, true));
    return net;
}

FusionNet FusionNet::attach(ParamStore& store, const std::string& prefix, int in_channels,
                            int channels) {
    FusionNet net;
    net.in_channels = in_channels;
    net.channels = channels;
    net.w1 = store.get(prefix + ".conv1.w");
    net.b1 = store.get(prefix + ".conv1.b");
    net.w2 = store.get(prefix + ".conv2.w");
    net.b2 = store.get(prefix + ".conv2.b");
    net.w3 = store.get(prefix + ".conv3.w");
    net.b3 = store.get(prefix + ".conv3.b");
    return net;
}

DenseVolume fuse(const VoxelGrid& grid, const FusionNet& net) {
    const int D = grid.resolution;
    if (D % 2 != 0) throw ConfigError("fuse: grid resolution must be divisible by 2");
    const int occ_c = kOccupancyChannels;
    const int feat_c = grid.feature_channels;
    if (occ_c + feat_c != net.in_channels)
        throw DimensionError("fuse: grid channels do not match network input");

    // pack occupancy + feature volumes into one constant input tensor
    const int cells = grid.cells();
    std::vector<double> packed(static_cast<size_t>(cells) * net.in_channels);
    for (int i = 0; i < cells; ++i) {
        double* row = &packed[static_cast<size_t>(i) * net.in_channels];
        for (int c = 0; c < occ_c; ++c) row[c] = grid.occupancy[static_cast<size_t>(i) * occ_c + c];
        for (int c = 0; c < feat_c; ++c)
            row[occ_c + c] = grid.feature[static_cast<size_t>(i) * feat_c + c];
    }
    for (double v : packed)
        if (!std::isfinite(v)) throw NumericalError("fuse: non-finite voxel grid");
    Tensor input({cells, net.in_channels}, std::move(packed));

    Tensor h1 = leaky_relu(conv3d(input, net.w1, net.b1, D), kLeakySlope);
    Tensor down = avg_pool3d(h1, D, D / 2);
    Tensor h2 = leaky_relu(conv3d(down, net.w2, net.b2, D / 2), kLeakySlope);
    Tensor up = upsample_nearest3d(h2, D / 2, D);
    Tensor merged = add(up, h1);  // skip connection
    Tensor out = conv3d(merged, net.w3, net.b3, D);

    DenseVolume volume;
    volume.resolution = D;
    volume.channels = net.w3.cols();
    volume.bounds = grid.bounds;
    volume.values = out;
    return volume;
}

void save_volume(const DenseVolume& volume, const std::string& path) {
    ParamStore snapshot;
    snapshot.add("volume.meta.resolution",
                 Tensor({1}, {static_cast<double>(volume.resolution)}), false);
    snapshot.add("volume.meta.channels", Tensor({1}, {static_cast<double>(volume.channels)}),
                 false);
    snapshot.add("volume.meta.bounds",
                 Tensor({6}, std::vector<double>(volume.bounds.v.begin(), volume.bounds.v.end())),
                 false);
    snapshot.add("volume.values",
                 Tensor(volume.values.shape(),
                        std::vector<double>(volume.values.data().begin(),
                                            volume.values.data().end())),
                 false);
    save_checkpoint(snapshot, path);
}

DenseVolume load_volume(const std::string& path) {
    // Peek the metadata first so the values tensor can be shaped correctly.
    ParamStore meta;
    meta.add("volume.meta.resolution", Tensor({1}, {0.0}), false);
    meta.add("volume.meta.channels", Tensor({1}, {0.0}), false);
    meta.add("volume.meta.bounds", Tensor({6}, std::vector<double>(6, 0.0)), false);
    load_checkpoint(meta, path, false);
    DenseVolume volume;
    volume.resolution = static_cast<int>(meta.get("volume.meta.resolution").data()[0]);
    volume.channels = static_cast<int>(meta.get("volume.meta.channels").data()[0]);
    auto bb = meta.get("volume.meta.bounds").data();
    for (int i = 0; i < 6; ++i) volume.bounds.v[i] = bb[i];

    ParamStore full;
    full.add("volume.values", Tensor::zeros({volume.cells(), volume.channels}), false);
    load_checkpoint(full, path, false);
    volume.values = full.get("volume.values");
    return volume;
}

void dump_volume_heatmaps(const DenseVolume& volume, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const int D = volume.resolution, C = volume.channels;
    const auto vals = volume.values.data();
    double max_norm = 1e-12;
    std::vector<double> norms(volume.cells());
    for (int i = 0; i < volume.cells(); ++i) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) {
            const double v = vals[static_cast<size_t>(i) * C + c];
            s += v * v;
        }
        norms[i] = std::sqrt(s);
        max_norm = std::max(max_norm, norms[i]);
    }
    for (int z = 0; z < D; ++z) {
        Image img = Image::filled(D, D, 0, 0, 0);
        for (int x = 0; x < D; ++x)
            for (int y = 0; y < D; ++y) {
                const double v = norms[(x * D + y) * D + z] / max_norm;
                double* p = img.at(y, x);
                p[0] = p[1] = p[2] = v;
            }
        char name[32];
        std::snprintf(name, sizeof(name), "slice_%03d.ppm", z);
        write_ppm(img, dir + "/" + name);
    }
}

}  // namespace geomsplat
