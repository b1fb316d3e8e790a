#pragma once

#include "core/nn.hpp"
#include "flowlab/flow.hpp"

#include <map>
#include <string>

namespace dvface {

struct LossWeights {
    double beta = 0.25;      // commitment weight
    double lambda_adv = 0.8;
    double lambda_ce = 0.5;
    double lambda_temp = 0.1;
};

// Named scalar terms plus the weighted total for the active stage.
struct LossReport {
    std::map<std::string, Tensor> terms;
    Tensor total;

    double value(const std::string& name) const { return terms.at(name).item(); }
    std::map<std::string, double> values() const;
};

// Fixed (never trained) multi-scale conv pyramid standing in for a pretrained
// perceptual network. Deterministic from its seed; parameters immutable.
class FeatureExtractor {
public:
    explicit FeatureExtractor(uint64_t seed = 77, int levels = 3, int width = 16);

    // mean squared distance between feature maps, summed over pyramid levels;
    // inputs are [T,H,W,3] tensors.
    Tensor perceptual(const Tensor& a, const Tensor& b) const;

private:
    std::vector<Tensor> features(const Tensor& x) const;
    ParamStore ps_;
    std::vector<Conv2d> convs_;
    int levels_;
};

// Small per-frame conv classifier -> one logit per frame.
class Discriminator {
public:
    explicit Discriminator(uint64_t seed = 99, int width = 16);

    Tensor logits(const Tensor& frames) const;  // [T,H,W,3] -> [T]
    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }

private:
    ParamStore ps_;
    std::vector<Conv2d> convs_;
};

// L1 + perceptual + codebook feature loss + weighted adversarial term.
// z_q must carry gradient into the codebooks; the stop-gradient routing of
// the feature loss is implemented exactly as: mse(sg(z_h), z_q) + beta *
// mse(z_h, sg(z_q)).
LossReport stage1_loss(const Tensor& x_hat, const Tensor& x_hq, const Tensor& z_h,
                       const Tensor& z_q, const Discriminator& disc, const FeatureExtractor& fe,
                       const LossWeights& w);

// Discriminator objective (negated for minimization); generator outputs are
// detached before entering the graph. Probabilities clamped to
// [1e-6, 1 - 1e-6] before the logs.
Tensor discriminator_step_loss(const Tensor& x_hq, const Tensor& x_hat, const Discriminator& disc);

// Code-prediction cross-entropy (summed over tokens) + latent alignment.
LossReport stage1p_loss(const Tensor& logits_s, const Tensor& logits_t,
                        const std::vector<int>& targets_s, const std::vector<int>& targets_t,
                        const Tensor& z_l, const Tensor& z_q, const LossWeights& w);

// Warp-based temporal consistency: frames 2..T-1 (1-indexed) are warped onto
// both neighbors with ground-truth flows; masked mean-L1 per term, summed.
Tensor temporal_loss(const Tensor& x_hat, const FlowFieldSequence& flows);

LossReport stage2_loss(const Tensor& z_hat, const Tensor& z_hq, const Tensor& x_hat,
                       const Tensor& x_hq, const FlowFieldSequence& flows,
                       const FeatureExtractor& fe, const LossWeights& w);

}  // namespace dvface
