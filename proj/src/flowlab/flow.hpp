#pragma once

#include <stdexcept>
#include <vector>

namespace dvface {

struct VideoClip;

// Per-frame-pair pixel displacements. forward[i] warps frame i onto frame
// i+1 (backward sampling: out(p) = frame_i(p + flow(p))); backward[i] warps
// frame i+1 onto frame i. Both are (T-1) x H x W x 2 with (dx, dy) order.
struct FlowFieldSequence {
    int pairs = 0, H = 0, W = 0;
    std::vector<double> forward;
    std::vector<double> backward;

    static FlowFieldSequence zeros(int pairs, int H, int W);

    double* fw(int i) { return forward.data() + static_cast<size_t>(i) * H * W * 2; }
    const double* fw(int i) const { return forward.data() + static_cast<size_t>(i) * H * W * 2; }
    double* bw(int i) { return backward.data() + static_cast<size_t>(i) * H * W * 2; }
    const double* bw(int i) const { return backward.data() + static_cast<size_t>(i) * H * W * 2; }

    void validate() const;
};

// Backward bilinear warp with border replication. out(p) = frame(p + flow(p)).
// mask gets 1.0 where the sample position lies fully inside the frame.
// frame is H x W x C row-major.
void warp_frame(const double* frame, int H, int W, int C, const double* flow, double* out,
                double* mask);

// Exhaustive integer-displacement block matching (SAD), ties broken by
// smallest displacement magnitude then lexicographic (dy, dx) order.
FlowFieldSequence block_match_flow(const VideoClip& clip, int block, int radius);

}  // namespace dvface
