#include "geomsplat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "geomsplat/errors.hpp"

namespace geomsplat {

namespace {

int shape_numel(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

bool any_requires_grad(const std::vector<Tensor>& parents) {
    for (const auto& p : parents)
        if (p.requires_grad()) return true;
    return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": operand shapes differ");
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != static_cast<int>(data.size()))
        throw DimensionError("tensor: shape does not match data length");
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    node_ = std::move(n);
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    int n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    int n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor({1}, {v}, requires_grad);
}

const std::vector<int>& Tensor::shape() const { return node_->shape; }
int Tensor::numel() const { return node_->numel(); }

int Tensor::rows() const {
    return node_->shape.size() >= 2 ? node_->shape[0] : 1;
}

int Tensor::cols() const {
    const auto& s = node_->shape;
    if (s.empty()) return 0;
    return s.size() >= 2 ? numel() / s[0] : s[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool v) { node_->requires_grad = v; }

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

std::span<const double> Tensor::grad() const {
    return node_->grad;
}

std::vector<double>& Tensor::ensure_grad() { return node_->ensure_grad(); }

void Tensor::clear_grad() { node_->grad.clear(); }

double Tensor::value() const {
    if (numel() != 1) throw ContractError("value(): tensor is not scalar");
    return node_->data[0];
}

double Tensor::at(int r, int c) const { return node_->data[static_cast<size_t>(r) * cols() + c]; }

Tensor make_node(std::vector<int> shape, std::vector<double> data,
                 const std::vector<Tensor>& parents, std::function<void()> backprop) {
    if (shape_numel(shape) != static_cast<int>(data.size()))
        throw DimensionError("make_node: shape does not match data length");
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = any_requires_grad(parents);
    if (n->requires_grad) {
        n->parents.reserve(parents.size());
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backprop = std::move(backprop);
    }
    return Tensor::wrap(std::move(n));
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward: loss must be a defined scalar");
    detail::Node* root = loss.node().get();
    if (!root->requires_grad) return;

    // Iterative post-order DFS; parents visited in stored order, so the
    // resulting schedule is identical between runs.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    struct Frame {
        detail::Node* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root, 0});
    visited.insert(root);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            detail::Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backprop && !n->grad.empty()) n->backprop();
    }
}

// ---------------------------------------------------------------------------
// elementwise / linear algebra
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    const auto da = a.data(), db = b.data();
    for (int i = 0; i < a.numel(); ++i) out[i] = da[i] + db[i];
    detail::Node *na = a.node().get(), *nb = b.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a, b}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nb, nr] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i];
            }
            if (nb->requires_grad) {
                auto& g = nb->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i];
            }
        };
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    const auto da = a.data(), db = b.data();
    for (int i = 0; i < a.numel(); ++i) out[i] = da[i] - db[i];
    detail::Node *na = a.node().get(), *nb = b.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a, b}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nb, nr] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i];
            }
            if (nb->requires_grad) {
                auto& g = nb->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] -= nr->grad[i];
            }
        };
    return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    const auto da = a.data(), db = b.data();
    for (int i = 0; i < a.numel(); ++i) out[i] = da[i] * db[i];
    detail::Node *na = a.node().get(), *nb = b.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a, b}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nb, nr] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i] * nb->data[i];
            }
            if (nb->requires_grad) {
                auto& g = nb->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i] * na->data[i];
            }
        };
    return r;
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    const auto da = a.data();
    for (int i = 0; i < a.numel(); ++i) out[i] = da[i] * c;
    detail::Node* na = a.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, c] {
            auto& g = na->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i] * c;
        };
    return r;
}

Tensor add_const(const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    const auto da = a.data();
    for (int i = 0; i < a.numel(); ++i) out[i] = da[i] + c;
    detail::Node* na = a.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr] {
            auto& g = na->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i];
        };
    return r;
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    const int n = a.rows(), c = a.cols();
    if (row.numel() != c) throw DimensionError("add_row: row width mismatch");
    std::vector<double> out(a.numel());
    const auto da = a.data(), dr = row.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<size_t>(i) * c + j] = da[static_cast<size_t>(i) * c + j] + dr[j];
    detail::Node *na = a.node().get(), *nb = row.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a, row}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nb, nr, n, c] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i];
            }
            if (nb->requires_grad) {
                auto& g = nb->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < c; ++j) g[j] += nr->grad[static_cast<size_t>(i) * c + j];
            }
        };
    return r;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const int n = a.rows(), k = a.cols(), k2 = b.rows(), m = b.cols();
    if (k != k2) throw DimensionError("matmul: inner dimensions differ");
    std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
    const auto da = a.data(), db = b.data();
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = da[static_cast<size_t>(i) * k + p];
            if (av == 0.0) continue;
            const size_t bo = static_cast<size_t>(p) * m;
            const size_t oo = static_cast<size_t>(i) * m;
            for (int j = 0; j < m; ++j) out[oo + j] += av * db[bo + j];
        }
    detail::Node *na = a.node().get(), *nb = b.node().get();
    Tensor r = make_node({n, m}, std::move(out), {a, b}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nb, nr, n, k, m] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const size_t go = static_cast<size_t>(i) * m;
                        const size_t bo = static_cast<size_t>(p) * m;
                        for (int j = 0; j < m; ++j) acc += nr->grad[go + j] * nb->data[bo + j];
                        g[static_cast<size_t>(i) * k + p] += acc;
                    }
            }
            if (nb->requires_grad) {
                auto& g = nb->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double av = na->data[static_cast<size_t>(i) * k + p];
                        if (av == 0.0) continue;
                        const size_t go = static_cast<size_t>(i) * m;
                        const size_t bo = static_cast<size_t>(p) * m;
                        for (int j = 0; j < m; ++j) g[bo + j] += av * nr->grad[go + j];
                    }
            }
        };
    return r;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const int n = a.rows(), k = a.cols(), m = b.rows();
    if (k != b.cols()) throw DimensionError("matmul_nt: inner dimensions differ");
    std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
    const auto da = a.data(), db = b.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            const size_t ao = static_cast<size_t>(i) * k;
            const size_t bo = static_cast<size_t>(j) * k;
            for (int p = 0; p < k; ++p) acc += da[ao + p] * db[bo + p];
            out[static_cast<size_t>(i) * m + j] = acc;
        }
    detail::Node *na = a.node().get(), *nb = b.node().get();
    Tensor r = make_node({n, m}, std::move(out), {a, b}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nb, nr, n, k, m] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        const double gv = nr->grad[static_cast<size_t>(i) * m + j];
                        if (gv == 0.0) continue;
                        const size_t ao = static_cast<size_t>(i) * k;
                        const size_t bo = static_cast<size_t>(j) * k;
                        for (int p = 0; p < k; ++p) g[ao + p] += gv * nb->data[bo + p];
                    }
            }
            if (nb->requires_grad) {
                auto& g = nb->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        const double gv = nr->grad[static_cast<size_t>(i) * m + j];
                        if (gv == 0.0) continue;
                        const size_t ao = static_cast<size_t>(i) * k;
                        const size_t bo = static_cast<size_t>(j) * k;
                        for (int p = 0; p < k; ++p) g[bo + p] += gv * na->data[ao + p];
                    }
            }
        };
    return r;
}

// ---------------------------------------------------------------------------
// nonlinearities
// ---------------------------------------------------------------------------

namespace {

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd dfn) {
    std::vector<double> out(a.numel());
    const auto da = a.data();
    for (int i = 0; i < a.numel(); ++i) out[i] = fwd(da[i]);
    detail::Node* na = a.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, dfn] {
            auto& g = na->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i] * dfn(na->data[i], nr->data[i]);
        };
    return r;
}

}  // namespace

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary_op(
        a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
        [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Tensor tanh_t(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid_t(const Tensor& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_t(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

Tensor clamp_t(const Tensor& a, double lo, double hi) {
    return unary_op(
        a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor softmax_rows(const Tensor& a) {
    const int n = a.rows(), c = a.cols();
    std::vector<double> out(a.numel());
    const auto da = a.data();
    for (int i = 0; i < n; ++i) {
        const size_t o = static_cast<size_t>(i) * c;
        double mx = da[o];
        for (int j = 1; j < c; ++j) mx = std::max(mx, da[o + j]);
        double denom = 0.0;
        for (int j = 0; j < c; ++j) {
            out[o + j] = std::exp(da[o + j] - mx);
            denom += out[o + j];
        }
        for (int j = 0; j < c; ++j) out[o + j] /= denom;
    }
    detail::Node* na = a.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, n, c] {
            auto& g = na->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const size_t o = static_cast<size_t>(i) * c;
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += nr->grad[o + j] * nr->data[o + j];
                for (int j = 0; j < c; ++j)
                    g[o + j] += nr->data[o + j] * (nr->grad[o + j] - dot);
            }
        };
    return r;
}

// ---------------------------------------------------------------------------
// reductions / shaping
// ---------------------------------------------------------------------------

Tensor sum_all(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    detail::Node* na = a.node().get();
    Tensor r = make_node({1}, {acc}, {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr] {
            auto& g = na->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[0];
        };
    return r;
}

Tensor mean_all(const Tensor& a) {
    return scale(sum_all(a), 1.0 / a.numel());
}

Tensor rowwise_sum(const Tensor& a) {
    const int n = a.rows(), c = a.cols();
    std::vector<double> out(n, 0.0);
    const auto da = a.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) out[i] += da[static_cast<size_t>(i) * c + j];
    detail::Node* na = a.node().get();
    Tensor r = make_node({n, 1}, std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, n, c] {
            auto& g = na->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j) g[static_cast<size_t>(i) * c + j] += nr->grad[i];
        };
    return r;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no parts");
    const int n = parts[0].rows();
    int total = 0;
    for (const auto& p : parts) {
        if (p.rows() != n) throw DimensionError("concat_cols: row counts differ");
        total += p.cols();
    }
    std::vector<double> out(static_cast<size_t>(n) * total);
    int off = 0;
    for (const auto& p : parts) {
        const int c = p.cols();
        const auto dp = p.data();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j)
                out[static_cast<size_t>(i) * total + off + j] = dp[static_cast<size_t>(i) * c + j];
        off += c;
    }
    std::vector<detail::Node*> pn;
    std::vector<int> pcols;
    for (const auto& p : parts) {
        pn.push_back(p.node().get());
        pcols.push_back(p.cols());
    }
    Tensor r = make_node({n, total}, std::move(out), parts, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [pn, pcols, nr, n, total] {
            int off2 = 0;
            for (size_t k = 0; k < pn.size(); ++k) {
                const int c = pcols[k];
                if (pn[k]->requires_grad) {
                    auto& g = pn[k]->ensure_grad();
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < c; ++j)
                            g[static_cast<size_t>(i) * c + j] +=
                                nr->grad[static_cast<size_t>(i) * total + off2 + j];
                }
                off2 += c;
            }
        };
    return r;
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
    const int n = a.rows(), c = a.cols();
    if (c0 < 0 || c1 > c || c0 >= c1) throw DimensionError("slice_cols: bad column range");
    const int w = c1 - c0;
    std::vector<double> out(static_cast<size_t>(n) * w);
    const auto da = a.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < w; ++j)
            out[static_cast<size_t>(i) * w + j] = da[static_cast<size_t>(i) * c + c0 + j];
    detail::Node* na = a.node().get();
    Tensor r = make_node({n, w}, std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, n, c, c0, w] {
            auto& g = na->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < w; ++j)
                    g[static_cast<size_t>(i) * c + c0 + j] += nr->grad[static_cast<size_t>(i) * w + j];
        };
    return r;
}

Tensor repeat_rows(const Tensor& a, int rrep) {
    const int n = a.rows(), c = a.cols();
    std::vector<double> out(static_cast<size_t>(n) * rrep * c);
    const auto da = a.data();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < rrep; ++k)
            for (int j = 0; j < c; ++j)
                out[(static_cast<size_t>(i) * rrep + k) * c + j] = da[static_cast<size_t>(i) * c + j];
    detail::Node* na = a.node().get();
    Tensor r = make_node({n * rrep, c}, std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, n, c, rrep] {
            auto& g = na->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < rrep; ++k)
                    for (int j = 0; j < c; ++j)
                        g[static_cast<size_t>(i) * c + j] +=
                            nr->grad[(static_cast<size_t>(i) * rrep + k) * c + j];
        };
    return r;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    if (shape_numel(shape) != a.numel()) throw DimensionError("reshape: element count differs");
    detail::Node* na = a.node().get();
    Tensor r = make_node(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()),
                         {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr] {
            auto& g = na->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += nr->grad[i];
        };
    return r;
}

Tensor row_scale(const Tensor& a, const Tensor& s) {
    const int n = a.rows(), c = a.cols();
    if (s.numel() != n) throw DimensionError("row_scale: scale length mismatch");
    std::vector<double> out(a.numel());
    const auto da = a.data(), ds = s.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<size_t>(i) * c + j] = da[static_cast<size_t>(i) * c + j] * ds[i];
    detail::Node *na = a.node().get(), *ns = s.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a, s}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, ns, nr, n, c] {
            if (na->requires_grad) {
                auto& g = na->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < c; ++j)
                        g[static_cast<size_t>(i) * c + j] +=
                            nr->grad[static_cast<size_t>(i) * c + j] * ns->data[i];
            }
            if (ns->requires_grad) {
                auto& g = ns->ensure_grad();
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < c; ++j)
                        acc += nr->grad[static_cast<size_t>(i) * c + j] * na->data[static_cast<size_t>(i) * c + j];
                    g[i] += acc;
                }
            }
        };
    return r;
}

Tensor group_sum_rows(const Tensor& a, int group) {
    const int nr_in = a.rows(), c = a.cols();
    if (group < 1 || nr_in % group != 0) throw DimensionError("group_sum_rows: bad group size");
    const int n = nr_in / group;
    std::vector<double> out(static_cast<size_t>(n) * c, 0.0);
    const auto da = a.data();
    for (int i = 0; i < nr_in; ++i) {
        const int o = i / group;
        for (int j = 0; j < c; ++j)
            out[static_cast<size_t>(o) * c + j] += da[static_cast<size_t>(i) * c + j];
    }
    detail::Node* na = a.node().get();
    Tensor r = make_node({n, c}, std::move(out), {a}, {});
    detail::Node* nrr = r.node().get();
    if (r.requires_grad())
        nrr->backprop = [na, nrr, nr_in, c, group] {
            auto& g = na->ensure_grad();
            for (int i = 0; i < nr_in; ++i) {
                const int o = i / group;
                for (int j = 0; j < c; ++j)
                    g[static_cast<size_t>(i) * c + j] += nrr->grad[static_cast<size_t>(o) * c + j];
            }
        };
    return r;
}

Tensor l2_normalize_rows(const Tensor& a, double eps) {
    const int n = a.rows(), c = a.cols();
    std::vector<double> out(a.numel());
    std::vector<double> norms(n);
    const auto da = a.data();
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            const double v = da[static_cast<size_t>(i) * c + j];
            s += v * v;
        }
        norms[i] = std::sqrt(s) + eps;
        for (int j = 0; j < c; ++j)
            out[static_cast<size_t>(i) * c + j] = da[static_cast<size_t>(i) * c + j] / norms[i];
    }
    detail::Node* na = a.node().get();
    Tensor r = make_node(a.shape(), std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, n, c, norms] {
            auto& g = na->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const size_t o = static_cast<size_t>(i) * c;
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += nr->grad[o + j] * nr->data[o + j];
                for (int j = 0; j < c; ++j)
                    g[o + j] += (nr->grad[o + j] - dot * nr->data[o + j]) / norms[i];
            }
        };
    return r;
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& rows) {
    const int n = a.rows(), c = a.cols();
    const int k = static_cast<int>(rows.size());
    std::vector<double> out(static_cast<size_t>(k) * c);
    const auto da = a.data();
    for (int i = 0; i < k; ++i) {
        const int src = rows[i];
        if (src < 0 || src >= n) throw DimensionError("gather_rows: index out of range");
        for (int j = 0; j < c; ++j)
            out[static_cast<size_t>(i) * c + j] = da[static_cast<size_t>(src) * c + j];
    }
    detail::Node* na = a.node().get();
    Tensor r = make_node({k, c}, std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, rows, c] {
            auto& g = na->ensure_grad();
            for (size_t i = 0; i < rows.size(); ++i)
                for (int j = 0; j < c; ++j)
                    g[static_cast<size_t>(rows[i]) * c + j] += nr->grad[i * c + j];
        };
    return r;
}

Tensor select_row(const Tensor& a, int rix) {
    const int n = a.rows(), c = a.cols();
    if (rix < 0 || rix >= n) throw DimensionError("select_row: index out of range");
    std::vector<double> out(c);
    const auto da = a.data();
    for (int j = 0; j < c; ++j) out[j] = da[static_cast<size_t>(rix) * c + j];
    detail::Node* na = a.node().get();
    Tensor r = make_node({1, c}, std::move(out), {a}, {});
    detail::Node* nr = r.node().get();
    if (r.requires_grad())
        nr->backprop = [na, nr, rix, c] {
            auto& g = na->ensure_grad();
            for (int j = 0; j < c; ++j) g[static_cast<size_t>(rix) * c + j] += nr->grad[j];
        };
    return r;
}

}  // namespace geomsplat
