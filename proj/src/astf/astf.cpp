#include "astf/astf.hpp"

#include <stdexcept>

namespace dvface {

PriorMode prior_mode_from_string(const std::string& s) {
    if (s == "none") return PriorMode::none;
    if (s == "spatial") return PriorMode::spatial_only;
    if (s == "temporal") return PriorMode::temporal_only;
    if (s == "both") return PriorMode::both;
    throw std::invalid_argument("unknown prior mode: " + s);
}

std::string prior_mode_to_string(PriorMode m) {
    switch (m) {
        case PriorMode::none: return "none";
        case PriorMode::spatial_only: return "spatial";
        case PriorMode::temporal_only: return "temporal";
        case PriorMode::both: return "both";
    }
    return "?";
}

AstfModule::AstfModule(ParamStore& ps, const std::string& name, const AstfConfig& cfg)
    : cfg_(cfg) {
    int n_mod = cfg.shared_modulation ? 1 : cfg.n_blocks;
    for (int i = 0; i < n_mod; ++i) {
        ModMlp m;
        std::string mn = name + ".mod" + (cfg.shared_modulation ? "" : std::to_string(i));
        m.l1 = Linear::create(ps, mn + ".l1", cfg.d_prior, cfg.mlp_hidden);
        m.l2 = Linear::create(ps, mn + ".l2", cfg.mlp_hidden, 2 * cfg.c_dit, /*zero_init=*/true);
        mod_.push_back(m);
    }
    for (int i = 0; i < cfg.n_blocks; ++i) {
        BlockProj b;
        std::string bn = name + ".blk" + std::to_string(i);
        b.wq = Linear::create(ps, bn + ".wq", cfg.d_prior, cfg.c_dit);
        b.wk = Linear::create(ps, bn + ".wk", cfg.d_prior, cfg.c_dit);
        b.wv = Linear::create(ps, bn + ".wv", cfg.d_prior, cfg.c_dit);
        b.proj = Linear::create(ps, bn + ".proj", cfg.c_dit, cfg.c_dit, /*zero_init=*/true);
        blocks_.push_back(b);
    }
}

ModulationParams AstfModule::compute_modulation(const Tensor& f_t, int block) const {
    const ModMlp& m = mod_[cfg_.shared_modulation ? 0 : static_cast<size_t>(block)];
    int d = f_t.shape().back();
    int64_t n = f_t.size() / d;
    // arithmetic mean over (t,h,w)
    Tensor flat = reshape(f_t, {static_cast<int>(n), d});
    Tensor ones = Tensor::full({1, static_cast<int>(n)}, 1.0 / static_cast<double>(n));
    Tensor pooled = reshape(matmul(ones, flat), {d});
    Tensor gb = m.l2(silu(m.l1(pooled)));  // [2*c_dit]
    ModulationParams out;
    out.gamma = slice0(gb, 0, cfg_.c_dit);
    out.beta = slice0(gb, cfg_.c_dit, cfg_.c_dit);
    return out;
}

Tensor AstfModule::apply_modulation(const Tensor& x, const ModulationParams& m) {
    if (x.shape().back() != m.gamma.dim(0))
        throw ShapeError("apply_modulation: channel width mismatch");
    return add_broadcast(mul_broadcast(x, add_scalar(m.gamma, 1.0)), m.beta);
}

Tensor AstfModule::cross_refine(const Tensor& f_t, const Tensor& f_s, int block) const {
    if (f_t.shape() != f_s.shape())
        throw ShapeError("cross_refine: prior grids differ: " + shape_str(f_t.shape()) + " vs " +
                         shape_str(f_s.shape()));
    const BlockProj& b = blocks_[static_cast<size_t>(block)];
    int d = f_t.shape().back();
    int tokens = static_cast<int>(f_t.size() / d);
    Tensor qt = reshape(f_t, {1, tokens, d});
    Tensor ks = reshape(f_s, {1, tokens, d});
    // ablation: drop temporal pre-refinement, query with the spatial prior itself
    Tensor q = b.wq(cfg_.simple_spatial ? ks : qt);
    Tensor out = attention(q, b.wk(ks), b.wv(ks), cfg_.heads);
    return reshape(out, {tokens, cfg_.c_dit});
}

Tensor AstfModule::fuse(const Tensor& x, const Tensor& f_s, const Tensor& f_t, int block,
                        const ModulationParams& m) const {
    int d = f_t.shape().back();
    int tokens = static_cast<int>(f_t.size() / d);
    if (x.dim(0) != tokens)
        throw ShapeError("fuse: prior token count " + std::to_string(tokens) +
                         " does not match backbone tokens " + std::to_string(x.dim(0)));
    const BlockProj& b = blocks_[static_cast<size_t>(block)];
    Tensor modulated = apply_modulation(x, m);
    Tensor delta = b.proj(cross_refine(f_t, f_s, block));
    return add(modulated, delta);
}

}  // namespace dvface
