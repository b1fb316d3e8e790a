#pragma once

#include "videodata/video.hpp"

#include <map>
#include <string>
#include <vector>

namespace dvface {

// Per-frame 10*log10(1/MSE) in dB, averaged over frames. Identical clips
// report the 100 dB cap instead of infinity.
double psnr(const VideoClip& a, const VideoClip& b);

// Mean SSIM with the original constants: 11x11 Gaussian window, sigma 1.5,
// C1 = (0.01)^2, C2 = (0.03)^2 on the [0,1] range. Averaged over frames and
// channels.
double ssim(const VideoClip& a, const VideoClip& b);

// Temporal consistency: mean over frame pairs of the masked MSE between
// warp(frame_i, forward_flow_i) and frame_{i+1}, reported x 10^3.
double warping_error(const VideoClip& clip, const FlowFieldSequence& flows);

struct ClipMetrics {
    std::string name;
    double psnr = 0.0, ssim = 0.0, ewarp = 0.0;
};

struct EvalReport {
    std::vector<ClipMetrics> clips;
    ClipMetrics aggregate;  // mean of per-clip values, name = "mean"
    std::map<std::string, std::string> meta;

    void finalize();  // recomputes the aggregate

    // One structured line per clip plus the aggregate.
    void write_jsonl(const std::string& path) const;
    // Machine-readable summary (aggregate + metadata).
    void write_summary(const std::string& path) const;
    static EvalReport read_summary(const std::string& path);
};

}  // namespace dvface
