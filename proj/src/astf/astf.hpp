#pragma once

#include "core/nn.hpp"

#include <string>
#include <vector>

namespace dvface {

// Which priors a restorer conditions on; single-prior variants exist for the
// ablation switch only.
enum class PriorMode { none, spatial_only, temporal_only, both };

PriorMode prior_mode_from_string(const std::string& s);
std::string prior_mode_to_string(PriorMode m);

struct AstfConfig {
    int c_dit = 128;       // backbone hidden width
    int d_prior = 32;      // prior code dimension
    int mlp_hidden = 128;
    int heads = 1;         // cross-refinement attention
    int n_blocks = 4;      // one fusion module per DiT block
    bool shared_modulation = true;   // false -> per-layer (gamma, beta), ablation
    bool simple_spatial = false;     // true -> inject f_s without temporal queries, ablation
};

struct ModulationParams {
    Tensor gamma, beta;  // [c_dit] each; exactly zero at initialization
};

// Asymmetric fusion: one shared modulation MLP (temporal prior -> global
// scale/shift) plus per-block cross-attention residual injection of the
// spatial prior under temporal queries. Final projection layers are
// zero-initialized so a fresh module is an exact identity on the backbone.
class AstfModule {
public:
    AstfModule() = default;
    AstfModule(ParamStore& ps, const std::string& name, const AstfConfig& cfg);

    const AstfConfig& config() const { return cfg_; }

    // Pool(f_t) over (t,h,w) -> MLP -> (gamma, beta). With shared modulation
    // the block index is ignored and every block reuses one result.
    ModulationParams compute_modulation(const Tensor& f_t, int block = 0) const;

    // x_tilde = (1 + gamma) (*) x + beta, per channel.
    static Tensor apply_modulation(const Tensor& x, const ModulationParams& m);

    // Delta x = Attn(Q = Wq f_t, K = Wk f_s, V = Wv f_s) over flattened tokens.
    Tensor cross_refine(const Tensor& f_t, const Tensor& f_s, int block) const;

    // apply_modulation(x, m) + Proj(cross_refine(f_t, f_s)); identity at init.
    Tensor fuse(const Tensor& x, const Tensor& f_s, const Tensor& f_t, int block,
                const ModulationParams& m) const;

private:
    AstfConfig cfg_;
    // modulation MLP; one instance when shared, one per block otherwise
    struct ModMlp {
        Linear l1, l2;  // l2 zero-initialized
    };
    std::vector<ModMlp> mod_;
    struct BlockProj {
        Linear wq, wk, wv;
        Linear proj;  // zero-initialized
    };
    std::vector<BlockProj> blocks_;
};

}  // namespace dvface
