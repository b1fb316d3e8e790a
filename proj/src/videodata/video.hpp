#pragma once

#include "flowlab/flow.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dvface {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// T x H x W x C frame sequence, values in [0,1], C = 3.
struct VideoClip {
    int T = 0, H = 0, W = 0, C = 3;
    std::vector<double> data;
    std::string name;

    static VideoClip zeros(int T, int H, int W, int C = 3);

    double& at(int t, int y, int x, int c) {
        return data[static_cast<size_t>(((int64_t(t) * H + y) * W + x) * C + c)];
    }
    double at(int t, int y, int x, int c) const {
        return data[static_cast<size_t>(((int64_t(t) * H + y) * W + x) * C + c)];
    }
    const double* frame(int t) const { return data.data() + static_cast<size_t>(int64_t(t) * H * W * C); }
    double* frame(int t) { return data.data() + static_cast<size_t>(int64_t(t) * H * W * C); }
    int64_t frame_size() const { return int64_t(H) * W * C; }

    void validate() const;
};

enum class MotionKind { translate, rotate, scale, composite };

struct MotionSpec {
    MotionKind kind = MotionKind::translate;
    double vx = 0.0, vy = 0.0;      // px/frame
    double omega = 0.0;             // rad/frame, about the frame center
    double scale_rate = 0.0;        // per-frame relative scale change
    uint64_t background_seed = 0;   // texture variation
};

struct DegradeConfig {
    double blur_sigma_lo = 0.0, blur_sigma_hi = 0.0;
    double noise_sigma_lo = 0.0, noise_sigma_hi = 0.0;
    std::vector<int> downscale_factors{1};
    int quality_lo = 100, quality_hi = 100;
    uint64_t seed = 0;

    void validate(int H, int W) const;
};

// Parameters actually sampled for one clip; persisted in the manifest.
struct DegradeLog {
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;
    int downscale_factor = 1;
    int quality = 100;
};

// Renders a clip with analytically known rigid motion; the returned flows
// are derived from the spec, not estimated, and warp frame i exactly onto
// frame i+1 for integer translations.
std::pair<VideoClip, FlowFieldSequence> make_toy_clip(const MotionSpec& spec, int T, int H, int W,
                                                      uint64_t seed);

// blur -> downscale -> noise -> compression surrogate -> upscale, all
// deterministic for a fixed (cfg.seed, clip).
VideoClip degrade(const VideoClip& clip, const DegradeConfig& cfg, DegradeLog* log = nullptr);

struct Dataset {
    std::vector<VideoClip> hq;
    std::vector<VideoClip> lq;
    std::vector<FlowFieldSequence> flows;
    std::vector<DegradeLog> logs;
    uint64_t seed = 0;

    size_t size() const { return hq.size(); }
};

struct DatasetParams {
    int n_clips = 8;
    int T = 4, H = 16, W = 16;
    uint64_t seed = 0;
    DegradeConfig degrade;
};

Dataset generate_toy_dataset(const DatasetParams& p);

void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace dvface
