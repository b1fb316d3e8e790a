#include "core/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dvface {

Tensor ParamStore::create(const std::string& name, const Shape& shape, double std_dev) {
    if (params_.count(name)) throw std::runtime_error("duplicate parameter: " + name);
    CounterRng rng = make_stream(seed_, name);
    std::vector<double> v(static_cast<size_t>(numel(shape)));
    for (auto& x : v) x = rng.next_gaussian() * std_dev;
    Tensor t = Tensor::from_data(shape, std::move(v), true);
    params_.emplace(name, t);
    return t;
}

Tensor ParamStore::create_zeros(const std::string& name, const Shape& shape) {
    return create_const(name, shape, 0.0);
}

Tensor ParamStore::create_const(const std::string& name, const Shape& shape, double v) {
    if (params_.count(name)) throw std::runtime_error("duplicate parameter: " + name);
    Tensor t = Tensor::full(shape, v, true);
    params_.emplace(name, t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
}

std::vector<Tensor> ParamStore::tensors() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& [k, v] : params_) out.push_back(v);
    return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : params_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

Linear Linear::create(ParamStore& ps, const std::string& name, int in, int out, bool zero_init) {
    Linear l;
    if (zero_init) {
        l.w = ps.create_zeros(name + ".w", {in, out});
    } else {
        l.w = ps.create(name + ".w", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)));
    }
    l.b = ps.create_zeros(name + ".b", {out});
    return l;
}

Conv2d Conv2d::create(ParamStore& ps, const std::string& name, int kh, int kw, int cin, int cout,
                      int stride, int pad, bool zero_init) {
    Conv2d c;
    double fan_in = static_cast<double>(kh * kw * cin);
    if (zero_init) {
        c.w = ps.create_zeros(name + ".w", {kh, kw, cin, cout});
    } else {
        c.w = ps.create(name + ".w", {kh, kw, cin, cout}, 1.0 / std::sqrt(fan_in));
    }
    c.b = ps.create_zeros(name + ".b", {cout});
    c.stride = stride;
    c.pad = pad;
    return c;
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int dim) {
    LayerNorm ln;
    ln.gamma = ps.create_const(name + ".g", {dim}, 1.0);
    ln.beta = ps.create_zeros(name + ".b", {dim});
    return ln;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
    int B = q.dim(0), S = q.dim(1), D = q.dim(2);
    int S2 = k.dim(1);
    if (D % heads != 0) throw ShapeError("attention: heads must divide width");
    int dh = D / heads;
    auto split = [&](const Tensor& x, int len) {
        // [B,len,D] -> [B*heads, len, dh]
        Tensor r = reshape(x, {B, len, heads, dh});
        r = permute(r, {0, 2, 1, 3});
        return reshape(r, {B * heads, len, dh});
    };
    Tensor qh = split(q, S), kh = split(k, S2), vh = split(v, S2);
    Tensor scores = bmm(qh, permute(kh, {0, 2, 1}));
    scores = scale(scores, 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor attn = softmax_lastdim(scores);
    Tensor out = bmm(attn, vh);  // [B*heads, S, dh]
    out = reshape(out, {B, heads, S, dh});
    out = permute(out, {0, 2, 1, 3});
    return reshape(out, {B, S, D});
}

TransformerBlock TransformerBlock::create(ParamStore& ps, const std::string& name, int dim,
                                          int heads, int mlp_hidden) {
    TransformerBlock b;
    b.ln1 = LayerNorm::create(ps, name + ".ln1", dim);
    b.ln2 = LayerNorm::create(ps, name + ".ln2", dim);
    b.wq = Linear::create(ps, name + ".wq", dim, dim);
    b.wk = Linear::create(ps, name + ".wk", dim, dim);
    b.wv = Linear::create(ps, name + ".wv", dim, dim);
    b.wo = Linear::create(ps, name + ".wo", dim, dim);
    b.mlp1 = Linear::create(ps, name + ".mlp1", dim, mlp_hidden);
    b.mlp2 = Linear::create(ps, name + ".mlp2", mlp_hidden, dim);
    b.heads = heads;
    return b;
}

Tensor TransformerBlock::operator()(const Tensor& x) const {
    Tensor h = ln1(x);
    Tensor a = attention(wq(h), wk(h), wv(h), heads);
    Tensor y = add(x, wo(a));
    Tensor m = mlp2(silu(mlp1(ln2(y))));
    return add(y, m);
}

std::vector<double> sinusoidal_embedding(double t, int dim) {
    std::vector<double> e(static_cast<size_t>(dim));
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::pow(10000.0, -static_cast<double>(i) / half);
        e[static_cast<size_t>(i)] = std::sin(t * freq);
        e[static_cast<size_t>(half + i)] = std::cos(t * freq);
    }
    return e;
}

AdamW::AdamW(std::vector<Tensor> params, Hyper h) : params_(std::move(params)), h_(h) {
    int64_t total = 0;
    for (auto& p : params_) {
        offsets_.push_back(total);
        total += p.size();
    }
    m_.assign(static_cast<size_t>(total), 0.0);
    v_.assign(static_cast<size_t>(total), 0.0);
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void AdamW::step() {
    ++t_;
    if (h_.clip_norm > 0) {
        double sq = 0.0;
        for (auto& p : params_)
            for (double g : p.grad()) sq += g * g;
        double norm = std::sqrt(sq);
        if (norm > h_.clip_norm) {
            double s = h_.clip_norm / norm;
            for (auto& p : params_)
                for (double& g : p.grad()) g *= s;
        }
    }
    double bc1 = 1.0 - std::pow(h_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(h_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        auto& p = params_[pi];
        auto& g = p.grad();
        auto& w = p.data();
        int64_t off = offsets_[pi];
        for (size_t i = 0; i < w.size(); ++i) {
            double gi = g[i];
            double& m = m_[static_cast<size_t>(off) + i];
            double& v = v_[static_cast<size_t>(off) + i];
            m = h_.beta1 * m + (1.0 - h_.beta1) * gi;
            v = h_.beta2 * v + (1.0 - h_.beta2) * gi * gi;
            double mhat = m / bc1;
            double vhat = v / bc2;
            w[i] -= h_.lr * (mhat / (std::sqrt(vhat) + h_.eps) + h_.weight_decay * w[i]);
        }
    }
}

}  // namespace dvface
