#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace geomsplat {

namespace detail {

// One vertex of the recorded computation graph. Result nodes keep their
// parents alive through shared ownership; backward() walks the DAG from the
// loss in reverse topological order.
struct Node {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop;  // pulls this->grad into parents' grads

    int numel() const { return static_cast<int>(data.size()); }

    std::vector<double>& ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

// Dense row-major tensor with reverse-mode autodiff. Value-semantic handle:
// copies share the underlying node.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    int numel() const;
    // 2D conveniences; a 1-D tensor counts as a single row.
    int rows() const;
    int cols() const;
    bool requires_grad() const;
    void set_requires_grad(bool v);  // leaves only (freezing a parameter set)

    std::span<const double> data() const;
    std::span<double> mutable_data();  // leaf mutation only (optimizer, FD probes)
    std::span<const double> grad() const;
    std::vector<double>& ensure_grad();
    void clear_grad();

    double value() const;  // scalar tensors
    double at(int r, int c) const;

    std::shared_ptr<detail::Node> node() const { return node_; }
    static Tensor wrap(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;
};

// Builder for operations defined outside tensor.cpp (convolution, rasterizer,
// chamfer, ...). `backprop` runs with the graph alive; capture raw Node*.
Tensor make_node(std::vector<int> shape, std::vector<double> data,
                 const std::vector<Tensor>& parents, std::function<void()> backprop);

// Populates gradient buffers of every parameter reachable from `loss`.
// Deterministic: fixed traversal order, single-threaded.
void backward(const Tensor& loss);

// ---- elementwise / linear algebra ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor add_row(const Tensor& a, const Tensor& row);  // broadcast row over a's rows
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a [N,K] x b [M,K]^T -> [N,M]

// ---- nonlinearities ----
Tensor leaky_relu(const Tensor& a, double slope);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor clamp_t(const Tensor& a, double lo, double hi);  // zero subgradient outside
Tensor softmax_rows(const Tensor& a);

// ---- reductions / shaping ----
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor rowwise_sum(const Tensor& a);  // [N,C] -> [N,1]
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, int c0, int c1);  // half-open [c0, c1)
Tensor repeat_rows(const Tensor& a, int r);          // each row repeated r times in place
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor row_scale(const Tensor& a, const Tensor& s);  // a [N,C] * s [N,1] per row
Tensor group_sum_rows(const Tensor& a, int group);   // [(N*g),C] -> [N,C]
Tensor l2_normalize_rows(const Tensor& a, double eps = 1e-12);
Tensor select_row(const Tensor& a, int r);  // -> [1,C]
Tensor gather_rows(const Tensor& a, const std::vector<int>& rows);

}  // namespace geomsplat
