#include "backbone/backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace dvface {

Tensor noise_inject(const Tensor& z_hq, const Tensor& eps, double t) {
    if (t < 0.0 || t > 1.0) throw std::domain_error("noise_inject: t must be in [0,1]");
    if (z_hq.shape() != eps.shape()) throw ShapeError("noise_inject: shape mismatch");
    return add(scale(eps, t), scale(z_hq, 1.0 - t));
}

RestorerModel::RestorerModel(const RestorerConfig& cfg) : cfg_(cfg), ps_(cfg.seed) {
    if (cfg.vae_stride < 1 || (cfg.vae_stride & (cfg.vae_stride - 1)) != 0)
        throw ConfigError("restorer: VAE stride must be a power of two");
    if (cfg.tstar <= 0.0 || cfg.tstar > 1.0)
        throw ConfigError("restorer: t* must lie in (0, 1]");

    int w = cfg.vae_width;
    int n_down = 0;
    for (int s = cfg.vae_stride; s > 1; s /= 2) ++n_down;
    venc_.push_back(Conv2d::create(ps_, "vae.enc.c0", 3, 3, 3, w, 1, 1));
    for (int i = 0; i < n_down; ++i)
        venc_.push_back(Conv2d::create(ps_, "vae.enc.d" + std::to_string(i), 3, 3, w, w, 2, 1));
    venc_.push_back(Conv2d::create(ps_, "vae.enc.out", 3, 3, w, cfg.vae_dv, 1, 1));

    vdec_.push_back(Conv2d::create(ps_, "vae.dec.c0", 3, 3, cfg.vae_dv, w, 1, 1));
    for (int i = 0; i < n_down; ++i)
        vdec_.push_back(Conv2d::create(ps_, "vae.dec.u" + std::to_string(i), 3, 3, w, w, 1, 1));
    vdec_.push_back(Conv2d::create(ps_, "vae.dec.out", 3, 3, w, 3, 1, 1));

    int tokens = cfg.grid_t * cfg.grid_h * cfg.grid_w;
    patch_embed_ = Linear::create(ps_, "dit.patch", cfg.vae_dv, cfg.dit_width);
    pos_ = ps_.create("dit.pos", {tokens, cfg.dit_width}, 0.02);
    c_text_ = ps_.create("dit.ctext", {1, cfg.dit_width}, 0.02);
    for (int i = 0; i < cfg.dit_blocks; ++i) {
        DitBlock b;
        std::string bn = "dit.b" + std::to_string(i);
        b.ln1 = LayerNorm::create(ps_, bn + ".ln1", cfg.dit_width);
        b.ln2 = LayerNorm::create(ps_, bn + ".ln2", cfg.dit_width);
        b.ln3 = LayerNorm::create(ps_, bn + ".ln3", cfg.dit_width);
        b.wq = Linear::create(ps_, bn + ".wq", cfg.dit_width, cfg.dit_width);
        b.wk = Linear::create(ps_, bn + ".wk", cfg.dit_width, cfg.dit_width);
        b.wv = Linear::create(ps_, bn + ".wv", cfg.dit_width, cfg.dit_width);
        b.wo = Linear::create(ps_, bn + ".wo", cfg.dit_width, cfg.dit_width);
        b.cq = Linear::create(ps_, bn + ".cq", cfg.dit_width, cfg.dit_width);
        b.ck = Linear::create(ps_, bn + ".ck", cfg.dit_width, cfg.dit_width);
        b.cv = Linear::create(ps_, bn + ".cv", cfg.dit_width, cfg.dit_width);
        b.co = Linear::create(ps_, bn + ".co", cfg.dit_width, cfg.dit_width);
        b.mlp1 = Linear::create(ps_, bn + ".mlp1", cfg.dit_width, cfg.dit_width * 2);
        b.mlp2 = Linear::create(ps_, bn + ".mlp2", cfg.dit_width * 2, cfg.dit_width);
        blocks_.push_back(b);
    }
    ln_out_ = LayerNorm::create(ps_, "dit.lnout", cfg.dit_width);
    head_ = Linear::create(ps_, "dit.head", cfg.dit_width, cfg.vae_dv, /*zero_init=*/true);

    AstfConfig fc;
    fc.c_dit = cfg.dit_width;
    fc.d_prior = cfg.d_prior;
    fc.mlp_hidden = 128;
    fc.heads = 1;
    fc.n_blocks = cfg.dit_blocks;
    fc.shared_modulation = cfg.shared_modulation;
    fc.simple_spatial = cfg.simple_spatial;
    fusion_ = AstfModule(ps_, "fusion", fc);
}

Tensor RestorerModel::clip_tensor(const VideoClip& clip) const {
    return Tensor::from_data({clip.T, clip.H, clip.W, clip.C}, clip.data);
}

VideoClip RestorerModel::tensor_clip(const Tensor& t, const std::string& name) {
    VideoClip c;
    c.T = t.dim(0);
    c.H = t.dim(1);
    c.W = t.dim(2);
    c.C = t.dim(3);
    c.data = t.data();
    for (auto& v : c.data) v = std::min(std::max(v, 0.0), 1.0);
    c.name = name;
    return c;
}

Tensor RestorerModel::vae_encode(const Tensor& frames) const {
    if (frames.ndim() != 4 || frames.dim(3) != 3) throw ShapeError("vae_encode: expects [T,H,W,3]");
    if (frames.dim(1) % cfg_.vae_stride != 0 || frames.dim(2) % cfg_.vae_stride != 0)
        throw ShapeError("vae_encode: H, W must be divisible by the VAE stride");
    Tensor x = frames;
    for (size_t i = 0; i < venc_.size(); ++i) {
        x = venc_[i](x);
        if (i + 1 < venc_.size()) x = silu(x);
    }
    return x;
}

Tensor RestorerModel::vae_decode(const Tensor& z) const {
    if (z.ndim() != 4 || z.dim(3) != cfg_.vae_dv)
        throw ShapeError("vae_decode: expects [t,h,w," + std::to_string(cfg_.vae_dv) + "]");
    Tensor x = silu(vdec_[0](z));
    size_t n_up = vdec_.size() - 2;
    for (size_t i = 0; i < n_up; ++i) {
        x = upsample_nearest2(x, 2);
        x = silu(vdec_[1 + i](x));
    }
    return sigmoid(vdec_.back()(x));
}

Tensor RestorerModel::predict_velocity(const Tensor& z, double t, const Tensor& f_s,
                                       const Tensor& f_t) const {
    if (z.ndim() != 4 || z.dim(3) != cfg_.vae_dv)
        throw ShapeError("predict_velocity: expects latent [t,h,w,d_v]");
    ++velocity_evals_;
    int tokens = z.dim(0) * z.dim(1) * z.dim(2);
    int budget = cfg_.grid_t * cfg_.grid_h * cfg_.grid_w;
    if (tokens != budget)
        throw ShapeError("predict_velocity: latent grid does not match configured token grid");
    bool use_t = cfg_.priors == PriorMode::temporal_only || cfg_.priors == PriorMode::both;
    bool use_s = cfg_.priors == PriorMode::spatial_only || cfg_.priors == PriorMode::both;
    if ((use_s || use_t) && (!f_s.defined() || !f_t.defined()))
        throw ShapeError("predict_velocity: priors required for the configured mode");

    Tensor x = patch_embed_(reshape(z, {tokens, cfg_.vae_dv}));
    x = add(x, pos_);
    // timestep embedding added to every token
    Tensor temb = Tensor::from_data({cfg_.dit_width}, sinusoidal_embedding(t, cfg_.dit_width));
    x = add_broadcast(x, temb);

    // spatial-only ablation: spatial prior also drives the queries
    Tensor q_prior = use_t ? f_t : f_s;
    ModulationParams m;
    if (use_t && cfg_.shared_modulation) m = fusion_.compute_modulation(f_t);

    for (size_t i = 0; i < blocks_.size(); ++i) {
        const DitBlock& b = blocks_[i];
        if (use_t || use_s) {
            ModulationParams mi;
            if (use_t)
                mi = cfg_.shared_modulation ? m
                                            : fusion_.compute_modulation(f_t, static_cast<int>(i));
            else {
                mi.gamma = Tensor::zeros({cfg_.dit_width});
                mi.beta = Tensor::zeros({cfg_.dit_width});
            }
            if (use_s) {
                x = fusion_.fuse(x, f_s, q_prior, static_cast<int>(i), mi);
            } else {
                x = AstfModule::apply_modulation(x, mi);
            }
        }
        // self-attention
        Tensor h = b.ln1(reshape(x, {1, tokens, cfg_.dit_width}));
        Tensor a = attention(b.wq(h), b.wk(h), b.wv(h), cfg_.dit_heads);
        x = add(x, reshape(b.wo(a), {tokens, cfg_.dit_width}));
        // cross-attention to the single learned text slot
        Tensor h2 = b.ln2(reshape(x, {1, tokens, cfg_.dit_width}));
        Tensor ctx = reshape(c_text_, {1, 1, cfg_.dit_width});
        Tensor ca = attention(b.cq(h2), b.ck(ctx), b.cv(ctx), cfg_.dit_heads);
        x = add(x, reshape(b.co(ca), {tokens, cfg_.dit_width}));
        // MLP
        Tensor h3 = b.ln3(x);
        x = add(x, b.mlp2(silu(b.mlp1(h3))));
    }
    Tensor v = head_(ln_out_(x));
    return reshape(v, z.shape());
}

RestorerModel::RestoreTensors RestorerModel::restore_training(const VideoClip& x_lq,
                                                              const StdcModel& stdc) const {
    RestoreTensors rt;
    rt.z_lq = vae_encode(clip_tensor(x_lq));
    StdcModel::Priors pr = stdc.extract_priors(x_lq);
    Tensor v = predict_velocity(rt.z_lq, cfg_.tstar, pr.f_s, pr.f_t);
    rt.z_hat = sub(rt.z_lq, scale(v, cfg_.tstar));
    rt.x_hat = vae_decode(rt.z_hat);
    return rt;
}

VideoClip RestorerModel::one_step_restore(const VideoClip& x_lq, const StdcModel& stdc) const {
    RestoreTensors rt = restore_training(x_lq, stdc);
    return tensor_clip(rt.x_hat, x_lq.name);
}

void RestorerModel::save(Checkpoint& ck, const std::string& prefix) const {
    save_params(ps_, ck, prefix);
    ck.put_scalar(prefix + "meta.tstar", cfg_.tstar);
}

void RestorerModel::load(const Checkpoint& ck, const std::string& prefix) {
    load_params(ps_, ck, prefix);
    if (ck.has(prefix + "meta.tstar")) cfg_.tstar = ck.get_scalar(prefix + "meta.tstar");
}

}  // namespace dvface
