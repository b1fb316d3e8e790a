#include "core/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dvface {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
    auto n = std::make_shared<TensorNode>();
    n->shape = s;
    n->val.assign(static_cast<size_t>(numel(s)), 0.0);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
    Tensor t = zeros(s, requires_grad);
    std::fill(t.data().begin(), t.data().end(), v);
    return t;
}

Tensor Tensor::from_data(const Shape& s, std::vector<double> data, bool requires_grad) {
    if (static_cast<int64_t>(data.size()) != numel(s))
        throw ShapeError("from_data: size mismatch for shape " + shape_str(s));
    auto n = std::make_shared<TensorNode>();
    n->shape = s;
    n->val = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

namespace {

Tensor make_op(Shape shape, std::vector<double> val, std::vector<Tensor> parents,
               std::function<void(TensorNode&)> bwd) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->val = std::move(val);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    n->requires_grad = rg;
    if (rg) {
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(bwd);
    }
    return Tensor(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw ShapeError("backward: loss must be scalar");
    std::vector<TensorNode*> order;
    std::vector<TensorNode*> stack{loss.node().get()};
    // iterative DFS post-order
    std::vector<std::pair<TensorNode*, size_t>> frames;
    frames.emplace_back(loss.node().get(), 0);
    loss.node()->visited = true;
    while (!frames.empty()) {
        auto& [node, idx] = frames.back();
        if (idx < node->parents.size()) {
            TensorNode* p = node->parents[idx++].get();
            if (!p->visited) {
                p->visited = true;
                frames.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            frames.pop_back();
        }
    }
    for (TensorNode* n : order) {
        n->visited = false;
        n->ensure_grad();
    }
    loss.node()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) {
            for (auto& p : n->parents) p->ensure_grad();
            n->backward_fn(*n);
        }
    }
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> v(a.data());
    for (size_t i = 0; i < v.size(); ++i) v[i] += b.data()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            n.parents[0]->grad[i] += n.grad[i];
            n.parents[1]->grad[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> v(a.data());
    for (size_t i = 0; i < v.size(); ++i) v[i] -= b.data()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            n.parents[0]->grad[i] += n.grad[i];
            n.parents[1]->grad[i] -= n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> v(a.data());
    for (size_t i = 0; i < v.size(); ++i) v[i] *= b.data()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            n.parents[0]->grad[i] += n.grad[i] * n.parents[1]->val[i];
            n.parents[1]->grad[i] += n.grad[i] * n.parents[0]->val[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> v(a.data());
    for (auto& x : v) x *= s;
    return make_op(a.shape(), std::move(v), {a}, [s](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) n.parents[0]->grad[i] += n.grad[i] * s;
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> v(a.data());
    for (auto& x : v) x += s;
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) n.parents[0]->grad[i] += n.grad[i];
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = x > 0 ? x : 0.0;
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i)
            if (n.parents[0]->val[i] > 0) n.parents[0]->grad[i] += n.grad[i];
    });
}

Tensor silu(const Tensor& a) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = x / (1.0 + std::exp(-x));
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            double x = n.parents[0]->val[i];
            double s = 1.0 / (1.0 + std::exp(-x));
            n.parents[0]->grad[i] += n.grad[i] * (s + x * s * (1.0 - s));
        }
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = 1.0 / (1.0 + std::exp(-x));
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            double y = n.val[i];
            n.parents[0]->grad[i] += n.grad[i] * y * (1.0 - y);
        }
    });
}

Tensor log_t(const Tensor& a) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = std::log(x);
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i)
            n.parents[0]->grad[i] += n.grad[i] / n.parents[0]->val[i];
    });
}

Tensor exp_t(const Tensor& a) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = std::exp(x);
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i)
            n.parents[0]->grad[i] += n.grad[i] * n.val[i];
    });
}

Tensor abs_t(const Tensor& a) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = std::fabs(x);
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            double x = n.parents[0]->val[i];
            n.parents[0]->grad[i] += n.grad[i] * (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0));
        }
    });
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor clamp_t(const Tensor& a, double lo, double hi) {
    std::vector<double> v(a.data());
    for (auto& x : v) x = std::min(std::max(x, lo), hi);
    return make_op(a.shape(), std::move(v), {a}, [lo, hi](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            double x = n.parents[0]->val[i];
            if (x > lo && x < hi) n.parents[0]->grad[i] += n.grad[i];
        }
    });
}

Tensor add_broadcast(const Tensor& a, const Tensor& b) {
    int64_t bn = b.size();
    if (bn == 0 || a.size() % bn != 0)
        throw ShapeError("add_broadcast: " + shape_str(b.shape()) + " does not tile " +
                         shape_str(a.shape()));
    std::vector<double> v(a.data());
    for (size_t i = 0; i < v.size(); ++i) v[i] += b.data()[i % bn];
    return make_op(a.shape(), std::move(v), {a, b}, [bn](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            n.parents[0]->grad[i] += n.grad[i];
            n.parents[1]->grad[i % bn] += n.grad[i];
        }
    });
}

Tensor mul_broadcast(const Tensor& a, const Tensor& b) {
    int64_t bn = b.size();
    if (bn == 0 || a.size() % bn != 0)
        throw ShapeError("mul_broadcast: " + shape_str(b.shape()) + " does not tile " +
                         shape_str(a.shape()));
    std::vector<double> v(a.data());
    for (size_t i = 0; i < v.size(); ++i) v[i] *= b.data()[i % bn];
    return make_op(a.shape(), std::move(v), {a, b}, [bn](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) {
            n.parents[0]->grad[i] += n.grad[i] * n.parents[1]->val[i % bn];
            n.parents[1]->grad[i % bn] += n.grad[i] * n.parents[0]->val[i];
        }
    });
}

// ---- reductions ----

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    return make_op({}, {s}, {a}, [](TensorNode& n) {
        double g = n.grad[0];
        for (auto& pg : n.parents[0]->grad) pg += g;
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor mse(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }

Tensor l1(const Tensor& a, const Tensor& b) { return mean(abs_t(sub(a, b))); }

// ---- shape ----

Tensor reshape(const Tensor& a, const Shape& s) {
    if (numel(s) != a.size())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(s));
    return make_op(s, a.data(), {a}, [](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i) n.parents[0]->grad[i] += n.grad[i];
    });
}

namespace {
std::vector<int64_t> strides_of(const Shape& s) {
    std::vector<int64_t> st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
    return st;
}
}  // namespace

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
    const Shape& in = a.shape();
    if (perm.size() != in.size()) throw ShapeError("permute: rank mismatch");
    Shape out(in.size());
    for (size_t i = 0; i < perm.size(); ++i) out[i] = in[static_cast<size_t>(perm[i])];
    auto ist = strides_of(in);
    auto ost = strides_of(out);
    int64_t n = a.size();
    std::vector<double> v(static_cast<size_t>(n));
    // mapping from output index -> input index, reused in backward
    auto map = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n));
    size_t rank = in.size();
    std::vector<int64_t> idx(rank, 0);
    for (int64_t o = 0; o < n; ++o) {
        int64_t rem = o, src = 0;
        for (size_t d = 0; d < rank; ++d) {
            int64_t c = rem / ost[d];
            rem %= ost[d];
            src += c * ist[static_cast<size_t>(perm[d])];
        }
        (*map)[static_cast<size_t>(o)] = src;
        v[static_cast<size_t>(o)] = a.data()[static_cast<size_t>(src)];
    }
    return make_op(out, std::move(v), {a}, [map](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i)
            n.parents[0]->grad[static_cast<size_t>((*map)[i])] += n.grad[i];
    });
}

Tensor slice0(const Tensor& a, int start, int len) {
    const Shape& in = a.shape();
    if (in.empty() || start < 0 || len < 0 || start + len > in[0])
        throw ShapeError("slice0: range out of bounds for " + shape_str(in));
    int64_t inner = a.size() / in[0];
    Shape out = in;
    out[0] = len;
    std::vector<double> v(static_cast<size_t>(len * inner));
    std::copy(a.data().begin() + start * inner, a.data().begin() + (start + len) * inner, v.begin());
    return make_op(out, std::move(v), {a}, [start, inner](TensorNode& n) {
        for (size_t i = 0; i < n.val.size(); ++i)
            n.parents[0]->grad[static_cast<size_t>(start * inner) + i] += n.grad[i];
    });
}

Tensor concat0(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat0: empty list");
    Shape out = parts[0].shape();
    int64_t inner = parts[0].size() / out[0];
    int total = 0;
    for (const auto& p : parts) {
        Shape s = p.shape();
        if (Shape(s.begin() + 1, s.end()) != Shape(out.begin() + 1, out.end()))
            throw ShapeError("concat0: trailing dims differ");
        total += s[0];
    }
    out[0] = total;
    std::vector<double> v;
    v.reserve(static_cast<size_t>(total * inner));
    for (const auto& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
    auto sizes = std::make_shared<std::vector<int64_t>>();
    for (const auto& p : parts) sizes->push_back(p.size());
    return make_op(out, std::move(v), parts, [sizes](TensorNode& n) {
        size_t off = 0;
        for (size_t pi = 0; pi < n.parents.size(); ++pi) {
            auto sz = static_cast<size_t>((*sizes)[pi]);
            for (size_t i = 0; i < sz; ++i) n.parents[pi]->grad[i] += n.grad[off + i];
            off += sz;
        }
    });
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: incompatible " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> v(static_cast<size_t>(int64_t(m) * n));
    CMapMat A(a.data().data(), m, k), B(b.data().data(), k, n);
    MapMat(v.data(), m, n).noalias() = A * B;
    return make_op({m, n}, std::move(v), {a, b}, [m, k, n](TensorNode& nd) {
        CMapMat G(nd.grad.data(), m, n);
        CMapMat A(nd.parents[0]->val.data(), m, k);
        CMapMat B(nd.parents[1]->val.data(), k, n);
        MapMat(nd.parents[0]->grad.data(), m, k).noalias() += G * B.transpose();
        MapMat(nd.parents[1]->grad.data(), k, n).noalias() += A.transpose() * G;
    });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1))
        throw ShapeError("bmm: incompatible " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    int B = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    std::vector<double> v(static_cast<size_t>(int64_t(B) * m * n));
    for (int i = 0; i < B; ++i) {
        CMapMat A(a.data().data() + int64_t(i) * m * k, m, k);
        CMapMat Bm(b.data().data() + int64_t(i) * k * n, k, n);
        MapMat(v.data() + int64_t(i) * m * n, m, n).noalias() = A * Bm;
    }
    return make_op({B, m, n}, std::move(v), {a, b}, [B, m, k, n](TensorNode& nd) {
        for (int i = 0; i < B; ++i) {
            CMapMat G(nd.grad.data() + int64_t(i) * m * n, m, n);
            CMapMat A(nd.parents[0]->val.data() + int64_t(i) * m * k, m, k);
            CMapMat Bm(nd.parents[1]->val.data() + int64_t(i) * k * n, k, n);
            MapMat(nd.parents[0]->grad.data() + int64_t(i) * m * k, m, k).noalias() +=
                G * Bm.transpose();
            MapMat(nd.parents[1]->grad.data() + int64_t(i) * k * n, k, n).noalias() +=
                A.transpose() * G;
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    int in = w.dim(0), out = w.dim(1);
    if (x.shape().back() != in)
        throw ShapeError("linear: input width " + std::to_string(x.shape().back()) +
                         " vs weight " + shape_str(w.shape()));
    int64_t rows = x.size() / in;
    Tensor x2 = reshape(x, {static_cast<int>(rows), in});
    Tensor y = matmul(x2, w);
    if (b.defined()) y = add_broadcast(y, b);
    Shape os = x.shape();
    os.back() = out;
    return reshape(y, os);
}

// ---- nn specifics ----

Tensor softmax_lastdim(const Tensor& a) {
    int K = a.shape().back();
    int64_t rows = a.size() / K;
    std::vector<double> v(a.data().size());
    for (int64_t r = 0; r < rows; ++r) {
        const double* in = a.data().data() + r * K;
        double* out = v.data() + r * K;
        double mx = in[0];
        for (int i = 1; i < K; ++i) mx = std::max(mx, in[i]);
        double s = 0.0;
        for (int i = 0; i < K; ++i) {
            out[i] = std::exp(in[i] - mx);
            s += out[i];
        }
        for (int i = 0; i < K; ++i) out[i] /= s;
    }
    return make_op(a.shape(), std::move(v), {a}, [K, rows](TensorNode& n) {
        for (int64_t r = 0; r < rows; ++r) {
            const double* y = n.val.data() + r * K;
            const double* g = n.grad.data() + r * K;
            double dot = 0.0;
            for (int i = 0; i < K; ++i) dot += y[i] * g[i];
            double* pg = n.parents[0]->grad.data() + r * K;
            for (int i = 0; i < K; ++i) pg[i] += y[i] * (g[i] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    int C = x.shape().back();
    if (gamma.size() != C || beta.size() != C) throw ShapeError("layer_norm: affine size mismatch");
    int64_t rows = x.size() / C;
    std::vector<double> v(x.data().size());
    auto stats = std::make_shared<std::vector<double>>(static_cast<size_t>(rows * 2));  // mean, rstd
    for (int64_t r = 0; r < rows; ++r) {
        const double* in = x.data().data() + r * C;
        double mu = 0.0;
        for (int i = 0; i < C; ++i) mu += in[i];
        mu /= C;
        double var = 0.0;
        for (int i = 0; i < C; ++i) var += (in[i] - mu) * (in[i] - mu);
        var /= C;
        double rstd = 1.0 / std::sqrt(var + eps);
        (*stats)[static_cast<size_t>(2 * r)] = mu;
        (*stats)[static_cast<size_t>(2 * r + 1)] = rstd;
        double* out = v.data() + r * C;
        for (int i = 0; i < C; ++i)
            out[i] = (in[i] - mu) * rstd * gamma.data()[static_cast<size_t>(i)] +
                     beta.data()[static_cast<size_t>(i)];
    }
    return make_op(x.shape(), std::move(v), {x, gamma, beta}, [C, rows, stats](TensorNode& n) {
        const double* gm = n.parents[1]->val.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* in = n.parents[0]->val.data() + r * C;
            const double* g = n.grad.data() + r * C;
            double mu = (*stats)[static_cast<size_t>(2 * r)];
            double rstd = (*stats)[static_cast<size_t>(2 * r + 1)];
            double sum_gy = 0.0, sum_gyxhat = 0.0;
            for (int i = 0; i < C; ++i) {
                double xhat = (in[i] - mu) * rstd;
                double gy = g[i] * gm[i];
                sum_gy += gy;
                sum_gyxhat += gy * xhat;
                n.parents[1]->grad[static_cast<size_t>(i)] += g[i] * xhat;
                n.parents[2]->grad[static_cast<size_t>(i)] += g[i];
            }
            double* pg = n.parents[0]->grad.data() + r * C;
            for (int i = 0; i < C; ++i) {
                double xhat = (in[i] - mu) * rstd;
                double gy = g[i] * gm[i];
                pg[i] += rstd * (gy - sum_gy / C - xhat * sum_gyxhat / C);
            }
        }
    });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
    if (x.ndim() != 4 || w.ndim() != 4) throw ShapeError("conv2d: expects x[B,H,W,C], w[kh,kw,C,F]");
    int B = x.dim(0), H = x.dim(1), W = x.dim(2), Cin = x.dim(3);
    int kh = w.dim(0), kw = w.dim(1), F = w.dim(3);
    if (w.dim(2) != Cin) throw ShapeError("conv2d: channel mismatch");
    int Ho = (H + 2 * pad - kh) / stride + 1;
    int Wo = (W + 2 * pad - kw) / stride + 1;
    int64_t patches = int64_t(B) * Ho * Wo;
    int cols = kh * kw * Cin;
    auto col = std::make_shared<std::vector<double>>(static_cast<size_t>(patches * cols), 0.0);
    // offsets into x for each patch slot, -1 where the tap falls into padding
    auto offs = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(patches * cols), -1);
    {
        int64_t p = 0;
        for (int b = 0; b < B; ++b)
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox, ++p) {
                    int64_t base = p * cols;
                    int c = 0;
                    for (int ky = 0; ky < kh; ++ky) {
                        int iy = oy * stride - pad + ky;
                        for (int kx = 0; kx < kw; ++kx) {
                            int ix = ox * stride - pad + kx;
                            if (iy >= 0 && iy < H && ix >= 0 && ix < W) {
                                int64_t src = ((int64_t(b) * H + iy) * W + ix) * Cin;
                                for (int ci = 0; ci < Cin; ++ci) {
                                    (*offs)[static_cast<size_t>(base + c)] = src + ci;
                                    (*col)[static_cast<size_t>(base + c)] =
                                        x.data()[static_cast<size_t>(src + ci)];
                                    ++c;
                                }
                            } else {
                                c += Cin;
                            }
                        }
                    }
                }
    }
    std::vector<double> v(static_cast<size_t>(patches * F));
    CMapMat Col(col->data(), patches, cols);
    CMapMat Wm(w.data().data(), cols, F);
    MapMat(v.data(), patches, F).noalias() = Col * Wm;
    if (bias.defined()) {
        for (int64_t p = 0; p < patches; ++p)
            for (int f = 0; f < F; ++f)
                v[static_cast<size_t>(p * F + f)] += bias.data()[static_cast<size_t>(f)];
    }
    std::vector<Tensor> parents{x, w};
    bool has_bias = bias.defined();
    if (has_bias) parents.push_back(bias);
    return make_op({B, Ho, Wo, F}, std::move(v), parents,
                   [patches, cols, F, col, offs, has_bias](TensorNode& n) {
                       CMapMat G(n.grad.data(), patches, F);
                       CMapMat Col(col->data(), patches, cols);
                       CMapMat Wm(n.parents[1]->val.data(), cols, F);
                       // dW
                       MapMat(n.parents[1]->grad.data(), cols, F).noalias() += Col.transpose() * G;
                       // dX via dCol
                       RowMat dcol = G * Wm.transpose();
                       double* xg = n.parents[0]->grad.data();
                       for (int64_t p = 0; p < patches; ++p)
                           for (int c = 0; c < cols; ++c) {
                               int64_t o = (*offs)[static_cast<size_t>(p * cols + c)];
                               if (o >= 0) xg[o] += dcol(p, c);
                           }
                       if (has_bias) {
                           double* bg = n.parents[2]->grad.data();
                           for (int64_t p = 0; p < patches; ++p)
                               for (int f = 0; f < F; ++f) bg[f] += G(p, f);
                       }
                   });
}

Tensor upsample_nearest2(const Tensor& x, int factor) {
    if (x.ndim() != 4) throw ShapeError("upsample_nearest2: expects [B,H,W,C]");
    int B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    int Ho = H * factor, Wo = W * factor;
    std::vector<double> v(static_cast<size_t>(int64_t(B) * Ho * Wo * C));
    for (int b = 0; b < B; ++b)
        for (int y = 0; y < Ho; ++y)
            for (int xo = 0; xo < Wo; ++xo) {
                int64_t src = ((int64_t(b) * H + y / factor) * W + xo / factor) * C;
                int64_t dst = ((int64_t(b) * Ho + y) * Wo + xo) * C;
                for (int c = 0; c < C; ++c)
                    v[static_cast<size_t>(dst + c)] = x.data()[static_cast<size_t>(src + c)];
            }
    return make_op({B, Ho, Wo, C}, std::move(v), {x}, [B, H, W, C, factor](TensorNode& n) {
        int Ho = H * factor, Wo = W * factor;
        for (int b = 0; b < B; ++b)
            for (int y = 0; y < Ho; ++y)
                for (int xo = 0; xo < Wo; ++xo) {
                    int64_t src = ((int64_t(b) * H + y / factor) * W + xo / factor) * C;
                    int64_t dst = ((int64_t(b) * Ho + y) * Wo + xo) * C;
                    for (int c = 0; c < C; ++c)
                        n.parents[0]->grad[static_cast<size_t>(src + c)] +=
                            n.grad[static_cast<size_t>(dst + c)];
                }
    });
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& targets) {
    if (logits.ndim() != 2) throw ShapeError("cross_entropy_logits: expects [N,K]");
    int N = logits.dim(0), K = logits.dim(1);
    if (static_cast<int>(targets.size()) != N)
        throw ShapeError("cross_entropy_logits: target count mismatch");
    for (int t : targets)
        if (t < 0 || t >= K) throw std::out_of_range("cross_entropy_logits: target index out of range");
    auto probs = std::make_shared<std::vector<double>>(logits.data().size());
    double total = 0.0;
    for (int r = 0; r < N; ++r) {
        const double* in = logits.data().data() + int64_t(r) * K;
        double* p = probs->data() + int64_t(r) * K;
        double mx = in[0];
        for (int i = 1; i < K; ++i) mx = std::max(mx, in[i]);
        double s = 0.0;
        for (int i = 0; i < K; ++i) {
            p[i] = std::exp(in[i] - mx);
            s += p[i];
        }
        for (int i = 0; i < K; ++i) p[i] /= s;
        total += std::log(s) + mx - in[targets[static_cast<size_t>(r)]];
    }
    auto tg = std::make_shared<std::vector<int>>(targets);
    // Sum over rows; callers divide when a per-token value is wanted.
    return make_op({}, {total}, {logits}, [N, K, probs, tg](TensorNode& n) {
        double g = n.grad[0];
        for (int r = 0; r < N; ++r) {
            double* pg = n.parents[0]->grad.data() + int64_t(r) * K;
            const double* p = probs->data() + int64_t(r) * K;
            for (int i = 0; i < K; ++i) pg[i] += g * p[i];
            pg[(*tg)[static_cast<size_t>(r)]] -= g;
        }
    });
}

Tensor detach(const Tensor& a) {
    auto n = std::make_shared<TensorNode>();
    n->shape = a.shape();
    n->val = a.data();
    n->requires_grad = false;
    return Tensor(n);
}

Tensor warp_bilinear(const Tensor& frame, const std::vector<double>& flow,
                     std::vector<double>* valid_mask) {
    if (frame.ndim() != 3) throw ShapeError("warp_bilinear: expects [H,W,C]");
    int H = frame.dim(0), W = frame.dim(1), C = frame.dim(2);
    if (static_cast<int64_t>(flow.size()) != int64_t(H) * W * 2)
        throw ShapeError("warp_bilinear: flow size mismatch");
    std::vector<double> v(frame.data().size());
    if (valid_mask) valid_mask->assign(static_cast<size_t>(int64_t(H) * W), 0.0);
    // per output pixel: 4 tap offsets + weights, for backward
    struct Tap {
        int64_t o00, o01, o10, o11;
        double w00, w01, w10, w11;
    };
    auto taps = std::make_shared<std::vector<Tap>>(static_cast<size_t>(int64_t(H) * W));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int64_t pi = int64_t(y) * W + x;
            double sx = x + flow[static_cast<size_t>(pi * 2 + 0)];
            double sy = y + flow[static_cast<size_t>(pi * 2 + 1)];
            bool inside = sx >= 0.0 && sx <= W - 1 && sy >= 0.0 && sy <= H - 1;
            if (valid_mask && inside) (*valid_mask)[static_cast<size_t>(pi)] = 1.0;
            // border replicate
            double cx = std::min(std::max(sx, 0.0), double(W - 1));
            double cy = std::min(std::max(sy, 0.0), double(H - 1));
            int x0 = static_cast<int>(std::floor(cx));
            int y0 = static_cast<int>(std::floor(cy));
            int x1 = std::min(x0 + 1, W - 1);
            int y1 = std::min(y0 + 1, H - 1);
            double fx = cx - x0, fy = cy - y0;
            Tap t;
            t.o00 = (int64_t(y0) * W + x0) * C;
            t.o01 = (int64_t(y0) * W + x1) * C;
            t.o10 = (int64_t(y1) * W + x0) * C;
            t.o11 = (int64_t(y1) * W + x1) * C;
            t.w00 = (1 - fy) * (1 - fx);
            t.w01 = (1 - fy) * fx;
            t.w10 = fy * (1 - fx);
            t.w11 = fy * fx;
            (*taps)[static_cast<size_t>(pi)] = t;
            for (int c = 0; c < C; ++c) {
                const auto& d = frame.data();
                v[static_cast<size_t>(pi * C + c)] =
                    t.w00 * d[static_cast<size_t>(t.o00 + c)] +
                    t.w01 * d[static_cast<size_t>(t.o01 + c)] +
                    t.w10 * d[static_cast<size_t>(t.o10 + c)] +
                    t.w11 * d[static_cast<size_t>(t.o11 + c)];
            }
        }
    return make_op({H, W, C}, std::move(v), {frame}, [H, W, C, taps](TensorNode& n) {
        for (int64_t pi = 0; pi < int64_t(H) * W; ++pi) {
            const auto& t = (*taps)[static_cast<size_t>(pi)];
            for (int c = 0; c < C; ++c) {
                double g = n.grad[static_cast<size_t>(pi * C + c)];
                n.parents[0]->grad[static_cast<size_t>(t.o00 + c)] += g * t.w00;
                n.parents[0]->grad[static_cast<size_t>(t.o01 + c)] += g * t.w01;
                n.parents[0]->grad[static_cast<size_t>(t.o10 + c)] += g * t.w10;
                n.parents[0]->grad[static_cast<size_t>(t.o11 + c)] += g * t.w11;
            }
        }
    });
}

}  // namespace dvface
