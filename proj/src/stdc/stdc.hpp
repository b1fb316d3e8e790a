#pragma once

#include "core/nn.hpp"
#include "core/serialize.hpp"
#include "videodata/video.hpp"

#include <string>
#include <vector>

namespace dvface {

struct StdcConfig {
    int d = 32;               // code dimension
    int K = 64;               // entries per codebook
    int spatial_stride = 4;   // power of two
    int temporal_stride = 1;
    int enc_width = 64;
    int attn_heads = 4;       // temporal-interaction attention
    int tf_layers = 4;
    int tf_heads = 4;
    int tf_width = 128;
    // token grid the transformers are built for (learned positional encodings)
    int grid_t = 8, grid_h = 8, grid_w = 8;
    uint64_t seed = 1;
};

struct CodeIndexGrid {
    int t = 0, h = 0, w = 0;
    std::vector<int> indices;
};

// Nearest-neighbor lookup, ties broken by smallest index. Pure function used
// both by the model and as the target generator.
std::vector<int> nearest_codes(const Tensor& z_tokens, const Tensor& codebook);

struct QuantizeResult {
    std::vector<int> indices;
    Tensor values;   // codebook rows; gradient flows into the codebook
    Tensor ste;      // z + sg(values - z); gradient flows into z (identity)
};

QuantizeResult quantize(const Tensor& z, const Tensor& codebook);

// Spatio-temporal dual-codebook prior extractor with its Stage-1 decoder.
class StdcModel {
public:
    explicit StdcModel(const StdcConfig& cfg);

    const StdcConfig& config() const { return cfg_; }
    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }

    // clip -> latent grid [t, h, w, d]
    Tensor encode(const VideoClip& clip) const;
    Tensor encode(const Tensor& frames) const;  // frames [T, H, W, 3]

    // Eq-style temporal path: temporal self-attention + adjacent-frame diffs.
    Tensor temporal_interaction(const Tensor& z_l) const;
    Tensor frame_diff(const Tensor& z_l) const;
    Tensor temporal_attn(const Tensor& z_l) const;

    // Two per-frame convolutions; no temporal mixing.
    Tensor spatial_path(const Tensor& z_l) const;

    Tensor codebook_spatial() const { return cb_s_; }
    Tensor codebook_temporal() const { return cb_t_; }

    enum class Which { spatial, temporal };
    // Full-sequence code prediction; returns per-token logits [t*h*w, K].
    Tensor predict_codes(const Tensor& z, Which which) const;

    // encode -> dual heads -> predicted indices -> codebook rows.
    struct Priors {
        Tensor f_s, f_t;                     // [t,h,w,d], every token a codebook row
        CodeIndexGrid idx_s, idx_t;
    };
    Priors extract_priors(const VideoClip& x_lq) const;

    // quantized latent grid -> clip tensor [T, H, W, 3] in [0,1]
    Tensor decode(const Tensor& z_q) const;

    Tensor clip_tensor(const VideoClip& clip) const;  // leaf tensor from pixels

    void save(Checkpoint& ck, const std::string& prefix = "stdc.") const;
    void load(const Checkpoint& ck, const std::string& prefix = "stdc.");

private:
    void check_grid(const Tensor& z) const;

    StdcConfig cfg_;
    ParamStore ps_;
    std::vector<Conv2d> enc_;
    Linear t_wq_, t_wk_, t_wv_, t_wo_;
    Conv2d sp_conv1_, sp_conv2_;
    Tensor cb_s_, cb_t_;
    struct CodePredictor {
        Linear in;
        Tensor pos;
        std::vector<TransformerBlock> blocks;
        LayerNorm ln;
        Linear out;
    };
    CodePredictor tf_s_, tf_t_;
    std::vector<Conv2d> dec_;
};

void save_params(const ParamStore& ps, Checkpoint& ck, const std::string& prefix);
void load_params(ParamStore& ps, const Checkpoint& ck, const std::string& prefix);

}  // namespace dvface
