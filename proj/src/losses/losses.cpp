#include "losses/losses.hpp"

#include <cmath>

namespace dvface {

std::map<std::string, double> LossReport::values() const {
    std::map<std::string, double> out;
    for (const auto& [k, v] : terms) out[k] = v.item();
    out["total"] = total.item();
    return out;
}

FeatureExtractor::FeatureExtractor(uint64_t seed, int levels, int width)
    : ps_(seed), levels_(levels) {
    int cin = 3;
    for (int i = 0; i < levels; ++i) {
        convs_.push_back(
            Conv2d::create(ps_, "fe.l" + std::to_string(i), 3, 3, cin, width, i == 0 ? 1 : 2, 1));
        cin = width;
    }
    // fixed features: freeze everything
    for (auto& t : ps_.tensors()) {
        Tensor h = t;
        h.set_requires_grad(false);
    }
}

std::vector<Tensor> FeatureExtractor::features(const Tensor& x) const {
    std::vector<Tensor> out;
    Tensor h = x;
    for (const auto& c : convs_) {
        h = silu(c(h));
        out.push_back(h);
    }
    return out;
}

Tensor FeatureExtractor::perceptual(const Tensor& a, const Tensor& b) const {
    if (a.shape() != b.shape()) throw ShapeError("perceptual: shape mismatch");
    auto fa = features(a);
    auto fb = features(b);
    Tensor total = mse(fa[0], fb[0]);
    for (size_t i = 1; i < fa.size(); ++i) total = add(total, mse(fa[i], fb[i]));
    return total;
}

Discriminator::Discriminator(uint64_t seed, int width) : ps_(seed) {
    convs_.push_back(Conv2d::create(ps_, "disc.c0", 3, 3, 3, width, 2, 1));
    convs_.push_back(Conv2d::create(ps_, "disc.c1", 3, 3, width, width * 2, 2, 1));
    convs_.push_back(Conv2d::create(ps_, "disc.c2", 3, 3, width * 2, width * 2, 2, 1));
    convs_.push_back(Conv2d::create(ps_, "disc.c3", 3, 3, width * 2, 1, 1, 1));
}

Tensor Discriminator::logits(const Tensor& frames) const {
    Tensor h = frames;
    for (size_t i = 0; i < convs_.size(); ++i) {
        h = convs_[i](h);
        if (i + 1 < convs_.size()) h = silu(h);
    }
    // h: [T, h', w', 1] -> per-frame mean logit
    int T = h.dim(0);
    int inner = h.dim(1) * h.dim(2);
    Tensor flat = reshape(h, {T, inner});
    Tensor ones = Tensor::full({inner, 1}, 1.0 / inner);
    return reshape(matmul(flat, ones), {T});
}

namespace {

constexpr double kProbEps = 1e-6;

Tensor log_prob(const Tensor& logits) {
    return log_t(clamp_t(sigmoid(logits), kProbEps, 1.0 - kProbEps));
}

Tensor log_one_minus_prob(const Tensor& logits) {
    return log_t(clamp_t(sigmoid(neg(logits)), kProbEps, 1.0 - kProbEps));
}

}  // namespace

LossReport stage1_loss(const Tensor& x_hat, const Tensor& x_hq, const Tensor& z_h,
                       const Tensor& z_q, const Discriminator& disc, const FeatureExtractor& fe,
                       const LossWeights& w) {
    LossReport r;
    r.terms["l1"] = l1(x_hat, x_hq);
    r.terms["per"] = fe.perceptual(x_hat, x_hq);
    r.terms["feat"] =
        add(mse(detach(z_h), z_q), scale(mse(z_h, detach(z_q)), w.beta));
    // non-saturating generator objective on the discriminator's fake score
    r.terms["adv_g"] = neg(mean(log_prob(disc.logits(x_hat))));
    r.total = add(add(r.terms["l1"], r.terms["per"]),
                  add(r.terms["feat"], scale(r.terms["adv_g"], w.lambda_adv)));
    return r;
}

Tensor discriminator_step_loss(const Tensor& x_hq, const Tensor& x_hat, const Discriminator& disc) {
    Tensor real = mean(log_prob(disc.logits(detach(x_hq))));
    Tensor fake = mean(log_one_minus_prob(disc.logits(detach(x_hat))));
    return neg(add(real, fake));  // minimize the negated objective
}

LossReport stage1p_loss(const Tensor& logits_s, const Tensor& logits_t,
                        const std::vector<int>& targets_s, const std::vector<int>& targets_t,
                        const Tensor& z_l, const Tensor& z_q, const LossWeights& w) {
    LossReport r;
    r.terms["ce_s"] = cross_entropy_logits(logits_s, targets_s);
    r.terms["ce_t"] = cross_entropy_logits(logits_t, targets_t);
    r.terms["cf"] = mse(z_l, detach(z_q));
    r.total = add(r.terms["cf"], scale(add(r.terms["ce_s"], r.terms["ce_t"]), w.lambda_ce));
    return r;
}

Tensor temporal_loss(const Tensor& x_hat, const FlowFieldSequence& flows) {
    int T = x_hat.dim(0), H = x_hat.dim(1), W = x_hat.dim(2), C = x_hat.dim(3);
    if (T < 3) throw ShapeError("temporal_loss: needs T >= 3");
    if (flows.pairs != T - 1 || flows.H != H || flows.W != W)
        throw ShapeError("temporal_loss: flow/clip geometry mismatch");

    auto masked_mean_abs = [&](const Tensor& a, const Tensor& b, const std::vector<double>& mask) {
        double count = 0.0;
        for (double m : mask) count += m;
        if (count == 0.0) return Tensor::scalar(0.0);
        // broadcast mask over channels via an explicit constant tensor
        std::vector<double> mc(static_cast<size_t>(int64_t(H) * W * C));
        for (int64_t p = 0; p < int64_t(H) * W; ++p)
            for (int c = 0; c < C; ++c)
                mc[static_cast<size_t>(p * C + c)] = mask[static_cast<size_t>(p)];
        Tensor m = Tensor::from_data({H, W, C}, std::move(mc));
        Tensor diff = abs_t(sub(a, b));
        return scale(sum(mul(diff, m)), 1.0 / (count * C));
    };

    Tensor total = Tensor::scalar(0.0);
    // Eq-range: middle frames only (1..T-2 zero-indexed); the ends appear
    // only as comparison targets.
    for (int i = 1; i <= T - 2; ++i) {
        Tensor fi = slice0(x_hat, i, 1);
        fi = reshape(fi, {H, W, C});
        std::vector<double> mask_fw, mask_bw;
        // forward[i] rebuilds frame i+1 from frame i
        std::vector<double> fw(flows.fw(i), flows.fw(i) + int64_t(H) * W * 2);
        Tensor warped_next = warp_bilinear(fi, fw, &mask_fw);
        Tensor next = reshape(slice0(x_hat, i + 1, 1), {H, W, C});
        total = add(total, masked_mean_abs(warped_next, next, mask_fw));
        // backward[i-1] rebuilds frame i-1 from frame i
        std::vector<double> bw(flows.bw(i - 1), flows.bw(i - 1) + int64_t(H) * W * 2);
        Tensor warped_prev = warp_bilinear(fi, bw, &mask_bw);
        Tensor prev = reshape(slice0(x_hat, i - 1, 1), {H, W, C});
        total = add(total, masked_mean_abs(warped_prev, prev, mask_bw));
    }
    return total;
}

LossReport stage2_loss(const Tensor& z_hat, const Tensor& z_hq, const Tensor& x_hat,
                       const Tensor& x_hq, const FlowFieldSequence& flows,
                       const FeatureExtractor& fe, const LossWeights& w) {
    LossReport r;
    r.terms["rec_latent"] = mse(z_hat, z_hq);
    r.terms["rec_pixel"] = mse(x_hat, x_hq);
    r.terms["per"] = fe.perceptual(x_hat, x_hq);
    r.terms["temp"] = temporal_loss(x_hat, flows);
    r.total = add(add(r.terms["rec_latent"], r.terms["rec_pixel"]),
                  add(r.terms["per"], scale(r.terms["temp"], w.lambda_temp)));
    return r;
}

}  // namespace dvface
