#pragma once

#include "harness/config.hpp"
#include "metrics/metrics.hpp"

#include <map>
#include <string>
#include <vector>

namespace dvface {

struct TrainResult {
    std::vector<std::map<std::string, double>> history;  // one row per iteration
    std::string ckpt_path;
};

// Forward paths are exposed so tests can recompute iteration-0 losses and
// probe gradient routing on the exact graphs the trainers build.
struct Stage1Forward {
    Tensor z_l, z_s, z_t;
    QuantizeResult qs, qt;
    Tensor z_h, z_q;  // stacked token matrices feeding the feature loss
    Tensor x_hat;
};
Stage1Forward stage1_forward(const StdcModel& m, const VideoClip& hq);

struct Stage1pForward {
    Tensor logits_s, logits_t;
    std::vector<int> target_s, target_t;
    Tensor z_l_tokens, z_q_tokens;
    double acc_s = 0.0, acc_t = 0.0;
};
Stage1pForward stage1p_forward(const StdcModel& m, const VideoClip& lq,
                               const std::vector<int>& target_s,
                               const std::vector<int>& target_t);

// Ground-truth code indices from an HQ clip under a fixed (reference) model.
void hq_code_targets(const StdcModel& ref, const VideoClip& hq, std::vector<int>& target_s,
                     std::vector<int>& target_t);

std::vector<Tensor> params_with_prefixes(const ParamStore& ps,
                                         const std::vector<std::string>& prefixes);
void freeze_with_prefixes(ParamStore& ps, const std::vector<std::string>& prefixes);

// Each trainer writes <out_dir>/<stage>.ckpt (parameters + optimizer state +
// iteration counter), a loss-curve image, and a history file. Passing the
// checkpoint path of an interrupted run as `resume` continues it; the
// continued run is bit-identical to an uninterrupted one.
TrainResult train_stage0(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir,
                         const std::string& resume = "");
TrainResult train_stage1(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir,
                         const std::string& resume = "");
TrainResult train_stage1p(const RunConfig& cfg, const Dataset& ds, const std::string& stage1_ckpt,
                          const std::string& out_dir, const std::string& resume = "");
// stage2.ckpt bundles the restorer and the (frozen) prior extractor so the
// restore/eval paths need a single file.
TrainResult train_stage2(const RunConfig& cfg, const Dataset& ds, const std::string& stdc_ckpt,
                         const std::string& vae_ckpt, const std::string& out_dir,
                         const std::string& resume = "");

EvalReport evaluate(const RunConfig& cfg, const Dataset& test, const std::string& stage2_ckpt,
                    const std::string& out_dir, bool allow_hash_mismatch = false);

VideoClip restore_clip(const RunConfig& cfg, const std::string& stage2_ckpt, const VideoClip& lq);

// Deterministic train/test split material: clips beyond cfg.data.n_clips.
Dataset generate_test_dataset(const RunConfig& cfg);

}  // namespace dvface
