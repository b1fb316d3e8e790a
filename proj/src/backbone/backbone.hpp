#pragma once

#include "astf/astf.hpp"
#include "core/nn.hpp"
#include "core/serialize.hpp"
#include "stdc/stdc.hpp"
#include "videodata/video.hpp"

namespace dvface {

struct RestorerConfig {
    // VAE stand-in: per-frame 2D autoencoder
    int vae_dv = 8;
    int vae_stride = 4;  // power of two
    int vae_width = 32;
    // DiT
    int dit_width = 128;
    int dit_blocks = 4;
    int dit_heads = 4;
    // token grid (patch size 1 on the VAE latent grid)
    int grid_t = 8, grid_h = 8, grid_w = 8;
    int d_prior = 32;  // must match the stdc code dimension
    double tstar = 1.0;
    PriorMode priors = PriorMode::both;
    bool shared_modulation = true;
    bool simple_spatial = false;
    uint64_t seed = 2;
};

// z_t = t * eps + (1 - t) * z_hq
Tensor noise_inject(const Tensor& z_hq, const Tensor& eps, double t);

class RestorerModel {
public:
    explicit RestorerModel(const RestorerConfig& cfg);

    const RestorerConfig& config() const { return cfg_; }
    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }

    Tensor vae_encode(const Tensor& frames) const;  // [T,H,W,3] -> [t,h,w,d_v]
    Tensor vae_decode(const Tensor& z) const;       // -> [T,H,W,3] in (0,1)

    // Velocity field on the latent grid; fusion hooks run per DiT block.
    // Bumps the evaluation counter (the one-step contract is asserted on it).
    Tensor predict_velocity(const Tensor& z, double t, const Tensor& f_s, const Tensor& f_t) const;

    // vae_encode -> priors from pixel-space LQ -> one velocity evaluation at
    // t* -> z_lq - t* v -> vae_decode.
    VideoClip one_step_restore(const VideoClip& x_lq, const StdcModel& stdc) const;

    // Training-path variant returning differentiable latent and pixels.
    struct RestoreTensors {
        Tensor z_lq, z_hat, x_hat;
    };
    RestoreTensors restore_training(const VideoClip& x_lq, const StdcModel& stdc) const;

    int64_t velocity_evals() const { return velocity_evals_; }
    void reset_velocity_evals() { velocity_evals_ = 0; }

    Tensor clip_tensor(const VideoClip& clip) const;
    static VideoClip tensor_clip(const Tensor& t, const std::string& name = "");

    const AstfModule& fusion() const { return fusion_; }

    void save(Checkpoint& ck, const std::string& prefix = "restorer.") const;
    void load(const Checkpoint& ck, const std::string& prefix = "restorer.");

private:
    RestorerConfig cfg_;
    ParamStore ps_;
    std::vector<Conv2d> venc_, vdec_;
    Linear patch_embed_;
    Tensor pos_;     // [tokens, dit_width]
    Tensor c_text_;  // learned null text embedding, [1, dit_width]
    struct DitBlock {
        LayerNorm ln1, ln2, ln3;
        Linear wq, wk, wv, wo;       // self-attention
        Linear cq, ck, cv, co;       // cross-attention to c_text
        Linear mlp1, mlp2;
    };
    std::vector<DitBlock> blocks_;
    LayerNorm ln_out_;
    Linear head_;  // zero-initialized
    AstfModule fusion_;
    mutable int64_t velocity_evals_ = 0;
};

}  // namespace dvface
