#pragma once

#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace dvface {

// Named parameter registry. One store per model; names are stable across
// runs so checkpoints, freeze lists, and the optimizer all key on them.
// std::map keeps iteration order deterministic.
class ParamStore {
public:
    explicit ParamStore(uint64_t seed = 0) : seed_(seed) {}

    // Gaussian init scaled by `std`; each parameter draws from its own
    // counter stream keyed on (seed, name), so creation order is irrelevant.
    Tensor create(const std::string& name, const Shape& shape, double std_dev);
    Tensor create_zeros(const std::string& name, const Shape& shape);
    Tensor create_const(const std::string& name, const Shape& shape, double v);

    Tensor get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    const std::map<std::string, Tensor>& all() const { return params_; }

    std::vector<Tensor> tensors() const;
    // Parameters whose name starts with any of the given prefixes.
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    std::map<std::string, Tensor> params_;
};

struct Linear {
    Tensor w, b;

    static Linear create(ParamStore& ps, const std::string& name, int in, int out,
                         bool zero_init = false);
    Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
};

struct Conv2d {
    Tensor w, b;
    int stride = 1, pad = 0;

    static Conv2d create(ParamStore& ps, const std::string& name, int kh, int kw, int cin, int cout,
                         int stride, int pad, bool zero_init = false);
    Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }
};

struct LayerNorm {
    Tensor gamma, beta;

    static LayerNorm create(ParamStore& ps, const std::string& name, int dim);
    Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

// Scaled dot-product attention with optional multiple heads.
// q [B,S,D], k/v [B,S2,D]; D must divide by heads. Returns [B,S,D].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads);

// Pre-LN transformer block: x + Attn(LN(x)), then x + MLP(LN(x)).
struct TransformerBlock {
    LayerNorm ln1, ln2;
    Linear wq, wk, wv, wo;
    Linear mlp1, mlp2;
    int heads = 1;

    static TransformerBlock create(ParamStore& ps, const std::string& name, int dim, int heads,
                                   int mlp_hidden);
    Tensor operator()(const Tensor& x) const;  // x [B,S,D]
};

// Sinusoidal embedding of a scalar into `dim` values.
std::vector<double> sinusoidal_embedding(double t, int dim);

// AdamW with decoupled weight decay and global-norm gradient clipping.
class AdamW {
public:
    struct Hyper {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.95;
        double eps = 1e-8;
        double weight_decay = 0.01;
        double clip_norm = 1.0;  // <= 0 disables clipping
    };

    AdamW(std::vector<Tensor> params, Hyper h);

    void zero_grad();
    void step();

    int64_t iteration() const { return t_; }

    // Moment state round-trips through checkpoints for exact resume.
    std::vector<double>& moment1() { return m_; }
    std::vector<double>& moment2() { return v_; }
    void set_iteration(int64_t t) { t_ = t; }
    int64_t state_size() const { return static_cast<int64_t>(m_.size()); }

private:
    std::vector<Tensor> params_;
    Hyper h_;
    std::vector<double> m_, v_;
    std::vector<int64_t> offsets_;
    int64_t t_ = 0;
};

}  // namespace dvface
