#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvface {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s);

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One node of the reverse-mode tape. Values are double precision throughout;
// desk-scale models are small enough that this costs little and it keeps the
// finite-difference checks tight.
struct TensorNode {
    std::vector<double> val;
    std::vector<double> grad;  // allocated lazily during backward
    Shape shape;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;  // accumulates into parents' grad
    bool visited = false;  // scratch for topo sort

    int64_t size() const { return static_cast<int64_t>(val.size()); }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

    static Tensor zeros(const Shape& s, bool requires_grad = false);
    static Tensor full(const Shape& s, double v, bool requires_grad = false);
    static Tensor from_data(const Shape& s, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v) { return full({}, v); }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t size() const { return node_->size(); }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }

    std::vector<double>& data() { return node_->val; }
    const std::vector<double>& data() const { return node_->val; }
    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }

    double item() const {
        if (node_->size() != 1) throw ShapeError("item() on non-scalar tensor");
        return node_->val[0];
    }

    std::shared_ptr<TensorNode> node() const { return node_; }

    void zero_grad() { node_->grad.assign(node_->val.size(), 0.0); }

private:
    std::shared_ptr<TensorNode> node_;
};

// Runs reverse-mode accumulation from a scalar loss.
void backward(const Tensor& loss);

// ---- elementwise / arithmetic ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor abs_t(const Tensor& a);
Tensor square(const Tensor& a);
// Clamp to [lo, hi]; gradient is zero where the clamp is active.
Tensor clamp_t(const Tensor& a, double lo, double hi);

// Broadcast b (shape = last dims of a) across a's leading dims.
Tensor add_broadcast(const Tensor& a, const Tensor& b);
Tensor mul_broadcast(const Tensor& a, const Tensor& b);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mse(const Tensor& a, const Tensor& b);
Tensor l1(const Tensor& a, const Tensor& b);

// ---- shape ----
Tensor reshape(const Tensor& a, const Shape& s);
Tensor permute(const Tensor& a, const std::vector<int>& perm);
Tensor slice0(const Tensor& a, int start, int len);   // slice along axis 0
Tensor concat0(const std::vector<Tensor>& parts);     // concat along axis 0

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);              // [m,k]x[k,n]
Tensor bmm(const Tensor& a, const Tensor& b);                 // [B,m,k]x[B,k,n]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);  // x[...,in] w[in,out]

// ---- neural-net specifics ----
Tensor softmax_lastdim(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
// x [B,H,W,Cin], w [kh,kw,Cin,Cout], bias [Cout]; zero ("same"-style) padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad);
// Nearest-neighbor spatial upsample of [B,H,W,C] by integer factor.
Tensor upsample_nearest2(const Tensor& x, int factor);
// Cross-entropy of logits [N,K] against integer targets, summed over rows.
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& targets);

// Identity value, blocks gradient flow.
Tensor detach(const Tensor& a);

// Differentiable bilinear warp of frame [H,W,C] by a fixed flow [H,W,2]
// (border-replicate); gradient flows into the frame only. valid_mask gets
// 1.0 where the sample footprint lies fully inside the frame.
Tensor warp_bilinear(const Tensor& frame, const std::vector<double>& flow,
                     std::vector<double>* valid_mask = nullptr);

}  // namespace dvface
