#include "stdc/stdc.hpp"

#include <cmath>
#include <stdexcept>

namespace dvface {

std::vector<int> nearest_codes(const Tensor& z_tokens, const Tensor& codebook) {
    int d = codebook.dim(1);
    if (z_tokens.shape().back() != d)
        throw ShapeError("nearest_codes: token dim " + std::to_string(z_tokens.shape().back()) +
                         " vs codebook dim " + std::to_string(d));
    int K = codebook.dim(0);
    int64_t n = z_tokens.size() / d;
    std::vector<int> idx(static_cast<size_t>(n));
    const double* cb = codebook.data().data();
    for (int64_t i = 0; i < n; ++i) {
        const double* z = z_tokens.data().data() + i * d;
        double best = -1.0;
        int bi = 0;
        for (int k = 0; k < K; ++k) {
            const double* c = cb + int64_t(k) * d;
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += (z[j] - c[j]) * (z[j] - c[j]);
            if (best < 0 || s < best) {  // strict <: ties keep the smallest k
                best = s;
                bi = k;
            }
        }
        idx[static_cast<size_t>(i)] = bi;
    }
    return idx;
}

namespace {

// Row gather with gradient scatter into the codebook.
Tensor gather_rows(const Tensor& codebook, const std::vector<int>& idx, const Shape& out_shape) {
    int d = codebook.dim(1);
    std::vector<double> v(idx.size() * static_cast<size_t>(d));
    for (size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < d; ++j)
            v[i * static_cast<size_t>(d) + static_cast<size_t>(j)] =
                codebook.data()[static_cast<size_t>(int64_t(idx[i]) * d + j)];
    Tensor flat = Tensor::from_data({static_cast<int>(idx.size()), d}, std::move(v));
    if (codebook.requires_grad()) {
        auto n = flat.node();
        n->requires_grad = true;
        n->parents = {codebook.node()};
        auto ix = std::make_shared<std::vector<int>>(idx);
        int dd = d;
        n->backward_fn = [ix, dd](TensorNode& nd) {
            for (size_t i = 0; i < ix->size(); ++i)
                for (int j = 0; j < dd; ++j)
                    nd.parents[0]->grad[static_cast<size_t>(int64_t((*ix)[i]) * dd + j)] +=
                        nd.grad[i * static_cast<size_t>(dd) + static_cast<size_t>(j)];
        };
    }
    return reshape(flat, out_shape);
}

}  // namespace

QuantizeResult quantize(const Tensor& z, const Tensor& codebook) {
    QuantizeResult r;
    r.indices = nearest_codes(z, codebook);
    r.values = gather_rows(codebook, r.indices, z.shape());
    // straight-through: value equals the lookup, gradient is the identity on z
    r.ste = add(z, detach(sub(r.values, z)));
    return r;
}

StdcModel::StdcModel(const StdcConfig& cfg) : cfg_(cfg), ps_(cfg.seed) {
    if (cfg.spatial_stride < 1 || (cfg.spatial_stride & (cfg.spatial_stride - 1)) != 0)
        throw ConfigError("stdc: spatial stride must be a power of two");
    if (cfg.temporal_stride != 1)
        throw ConfigError("stdc: only temporal stride 1 is supported");
    if (cfg.K < 2) throw ConfigError("stdc: codebook needs K >= 2");

    int w = cfg.enc_width;
    int n_down = 0;
    for (int s = cfg.spatial_stride; s > 1; s /= 2) ++n_down;
    enc_.push_back(Conv2d::create(ps_, "enc.c0", 3, 3, 3, w, 1, 1));
    for (int i = 0; i < n_down; ++i)
        enc_.push_back(Conv2d::create(ps_, "enc.d" + std::to_string(i), 3, 3, w, w, 2, 1));
    enc_.push_back(Conv2d::create(ps_, "enc.out", 3, 3, w, cfg.d, 1, 1));

    t_wq_ = Linear::create(ps_, "tattn.wq", cfg.d, cfg.d);
    t_wk_ = Linear::create(ps_, "tattn.wk", cfg.d, cfg.d);
    t_wv_ = Linear::create(ps_, "tattn.wv", cfg.d, cfg.d);
    t_wo_ = Linear::create(ps_, "tattn.wo", cfg.d, cfg.d);

    sp_conv1_ = Conv2d::create(ps_, "spath.c1", 3, 3, cfg.d, cfg.d, 1, 1);
    sp_conv2_ = Conv2d::create(ps_, "spath.c2", 3, 3, cfg.d, cfg.d, 1, 1);

    // modest spread keeps early lookups diverse without dwarfing encoder output
    cb_s_ = ps_.create("cb.s", {cfg.K, cfg.d}, 0.5);
    cb_t_ = ps_.create("cb.t", {cfg.K, cfg.d}, 0.5);

    int tokens = cfg.grid_t * cfg.grid_h * cfg.grid_w;
    auto build_tf = [&](const std::string& name) {
        CodePredictor p;
        p.in = Linear::create(ps_, name + ".in", cfg.d, cfg.tf_width);
        p.pos = ps_.create(name + ".pos", {tokens, cfg.tf_width}, 0.02);
        for (int i = 0; i < cfg.tf_layers; ++i)
            p.blocks.push_back(TransformerBlock::create(ps_, name + ".b" + std::to_string(i),
                                                        cfg.tf_width, cfg.tf_heads,
                                                        cfg.tf_width * 2));
        p.ln = LayerNorm::create(ps_, name + ".ln", cfg.tf_width);
        p.out = Linear::create(ps_, name + ".out", cfg.tf_width, cfg.K);
        return p;
    };
    tf_s_ = build_tf("tf.s");
    tf_t_ = build_tf("tf.t");

    dec_.push_back(Conv2d::create(ps_, "dec.c0", 3, 3, cfg.d, w, 1, 1));
    for (int i = 0; i < n_down; ++i)
        dec_.push_back(Conv2d::create(ps_, "dec.u" + std::to_string(i), 3, 3, w, w, 1, 1));
    dec_.push_back(Conv2d::create(ps_, "dec.out", 3, 3, w, 3, 1, 1));
}

Tensor StdcModel::clip_tensor(const VideoClip& clip) const {
    return Tensor::from_data({clip.T, clip.H, clip.W, clip.C}, clip.data);
}

Tensor StdcModel::encode(const VideoClip& clip) const { return encode(clip_tensor(clip)); }

Tensor StdcModel::encode(const Tensor& frames) const {
    if (frames.ndim() != 4 || frames.dim(3) != 3)
        throw ShapeError("stdc encode: expects [T,H,W,3]");
    int H = frames.dim(1), W = frames.dim(2);
    if (H % cfg_.spatial_stride != 0)
        throw ShapeError("stdc encode: H=" + std::to_string(H) + " not divisible by stride " +
                         std::to_string(cfg_.spatial_stride));
    if (W % cfg_.spatial_stride != 0)
        throw ShapeError("stdc encode: W=" + std::to_string(W) + " not divisible by stride " +
                         std::to_string(cfg_.spatial_stride));
    Tensor x = frames;
    for (size_t i = 0; i < enc_.size(); ++i) {
        x = enc_[i](x);
        if (i + 1 < enc_.size()) x = silu(x);
    }
    return x;  // [t, h, w, d]
}

void StdcModel::check_grid(const Tensor& z) const {
    if (z.ndim() != 4 || z.dim(3) != cfg_.d)
        throw ShapeError("stdc: expected latent grid [t,h,w," + std::to_string(cfg_.d) + "]");
}

Tensor StdcModel::frame_diff(const Tensor& z_l) const {
    check_grid(z_l);
    int t = z_l.dim(0);
    if (t < 2) throw ShapeError("frame_diff: needs t >= 2");
    Tensor head = Tensor::zeros({1, z_l.dim(1), z_l.dim(2), z_l.dim(3)});
    Tensor diffs = sub(slice0(z_l, 1, t - 1), slice0(z_l, 0, t - 1));
    return concat0({head, diffs});
}

Tensor StdcModel::temporal_attn(const Tensor& z_l) const {
    check_grid(z_l);
    int t = z_l.dim(0), h = z_l.dim(1), w = z_l.dim(2), d = z_l.dim(3);
    // sequences along t, one per spatial position: [h*w, t, d]
    Tensor seq = reshape(z_l, {t, h * w, d});
    seq = permute(seq, {1, 0, 2});
    Tensor a = attention(t_wq_(seq), t_wk_(seq), t_wv_(seq), cfg_.attn_heads);
    a = t_wo_(a);
    a = permute(a, {1, 0, 2});
    return reshape(a, {t, h, w, d});
}

Tensor StdcModel::temporal_interaction(const Tensor& z_l) const {
    if (z_l.dim(0) < 2)
        throw ShapeError("temporal_interaction: undefined on single-frame grids");
    return add(temporal_attn(z_l), frame_diff(z_l));
}

Tensor StdcModel::spatial_path(const Tensor& z_l) const {
    check_grid(z_l);
    return sp_conv2_(silu(sp_conv1_(z_l)));
}

Tensor StdcModel::predict_codes(const Tensor& z, Which which) const {
    check_grid(z);
    int tokens = z.dim(0) * z.dim(1) * z.dim(2);
    int budget = cfg_.grid_t * cfg_.grid_h * cfg_.grid_w;
    if (tokens > budget)
        throw std::length_error("predict_codes: " + std::to_string(tokens) +
                                " tokens exceed configured budget " + std::to_string(budget));
    if (z.dim(0) != cfg_.grid_t || z.dim(1) != cfg_.grid_h || z.dim(2) != cfg_.grid_w)
        throw ShapeError("predict_codes: grid " + shape_str(z.shape()) +
                         " does not match configured token grid");
    const CodePredictor& p = which == Which::spatial ? tf_s_ : tf_t_;
    Tensor x = reshape(z, {1, tokens, cfg_.d});
    x = p.in(x);
    x = add(x, reshape(p.pos, {1, tokens, cfg_.tf_width}));
    for (const auto& b : p.blocks) x = b(x);
    x = p.ln(x);
    x = p.out(x);
    return reshape(x, {tokens, cfg_.K});
}

StdcModel::Priors StdcModel::extract_priors(const VideoClip& x_lq) const {
    Tensor z_l = encode(x_lq);
    Tensor z_t = temporal_interaction(z_l);
    Tensor z_s = spatial_path(z_l);
    Priors pr;
    auto pick = [&](const Tensor& z, Which which, const Tensor& cb, CodeIndexGrid& grid) {
        Tensor logits = predict_codes(z, which);
        int tokens = logits.dim(0), K = logits.dim(1);
        grid.t = z.dim(0);
        grid.h = z.dim(1);
        grid.w = z.dim(2);
        grid.indices.resize(static_cast<size_t>(tokens));
        for (int i = 0; i < tokens; ++i) {
            const double* row = logits.data().data() + int64_t(i) * K;
            int best = 0;
            for (int k = 1; k < K; ++k)
                if (row[k] > row[best]) best = k;  // hard argmax, first max wins
            grid.indices[static_cast<size_t>(i)] = best;
        }
        return gather_rows(detach(cb), grid.indices, z.shape());
    };
    pr.f_s = pick(z_s, Which::spatial, cb_s_, pr.idx_s);
    pr.f_t = pick(z_t, Which::temporal, cb_t_, pr.idx_t);
    return pr;
}

Tensor StdcModel::decode(const Tensor& z_q) const {
    check_grid(z_q);
    Tensor x = z_q;
    size_t n_up = dec_.size() - 2;
    x = silu(dec_[0](x));
    for (size_t i = 0; i < n_up; ++i) {
        x = upsample_nearest2(x, 2);
        x = silu(dec_[1 + i](x));
    }
    x = dec_.back()(x);
    return sigmoid(x);  // [T, H, W, 3], bounded to (0,1)
}

void save_params(const ParamStore& ps, Checkpoint& ck, const std::string& prefix) {
    for (const auto& [name, t] : ps.all()) ck.put(prefix + name, t.shape(), t.data());
}

void load_params(ParamStore& ps, const Checkpoint& ck, const std::string& prefix) {
    for (const auto& [name, t] : ps.all()) {
        auto it = ck.arrays.find(prefix + name);
        if (it == ck.arrays.end()) throw IoError("checkpoint missing parameter: " + prefix + name);
        if (it->second.first != t.shape())
            throw IoError("checkpoint shape mismatch for " + prefix + name);
        Tensor handle = t;  // shared node
        handle.data() = it->second.second;
    }
}

void StdcModel::save(Checkpoint& ck, const std::string& prefix) const {
    save_params(ps_, ck, prefix);
}

void StdcModel::load(const Checkpoint& ck, const std::string& prefix) {
    load_params(ps_, ck, prefix);
}

}  // namespace dvface
