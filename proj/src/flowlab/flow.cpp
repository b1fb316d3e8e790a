#include "flowlab/flow.hpp"

#include "videodata/video.hpp"

#include <algorithm>
#include <cmath>

namespace dvface {

FlowFieldSequence FlowFieldSequence::zeros(int pairs, int H, int W) {
    FlowFieldSequence f;
    f.pairs = pairs;
    f.H = H;
    f.W = W;
    f.forward.assign(static_cast<size_t>(int64_t(pairs) * H * W * 2), 0.0);
    f.backward.assign(static_cast<size_t>(int64_t(pairs) * H * W * 2), 0.0);
    return f;
}

void FlowFieldSequence::validate() const {
    double bound = static_cast<double>(std::max(H, W));
    for (double v : forward)
        if (!std::isfinite(v) || std::fabs(v) > bound)
            throw std::runtime_error("flow displacement out of bounds");
    for (double v : backward)
        if (!std::isfinite(v) || std::fabs(v) > bound)
            throw std::runtime_error("flow displacement out of bounds");
}

void warp_frame(const double* frame, int H, int W, int C, const double* flow, double* out,
                double* mask) {
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int64_t pi = int64_t(y) * W + x;
            double sx = x + flow[pi * 2 + 0];
            double sy = y + flow[pi * 2 + 1];
            bool inside = sx >= 0.0 && sx <= W - 1 && sy >= 0.0 && sy <= H - 1;
            if (mask) mask[pi] = inside ? 1.0 : 0.0;
            double cx = std::min(std::max(sx, 0.0), double(W - 1));
            double cy = std::min(std::max(sy, 0.0), double(H - 1));
            int x0 = static_cast<int>(std::floor(cx));
            int y0 = static_cast<int>(std::floor(cy));
            int x1 = std::min(x0 + 1, W - 1);
            int y1 = std::min(y0 + 1, H - 1);
            double fx = cx - x0, fy = cy - y0;
            for (int c = 0; c < C; ++c) {
                double v00 = frame[(int64_t(y0) * W + x0) * C + c];
                double v01 = frame[(int64_t(y0) * W + x1) * C + c];
                double v10 = frame[(int64_t(y1) * W + x0) * C + c];
                double v11 = frame[(int64_t(y1) * W + x1) * C + c];
                out[pi * C + c] = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                  fy * ((1 - fx) * v10 + fx * v11);
            }
        }
}

FlowFieldSequence block_match_flow(const VideoClip& clip, int block, int radius) {
    if (block <= 0 || clip.H % block != 0 || clip.W % block != 0)
        throw std::invalid_argument("block_match_flow: block must divide H and W");
    if (radius < 0 || radius > block)
        throw std::invalid_argument("block_match_flow: radius must be in [0, block]");
    FlowFieldSequence f = FlowFieldSequence::zeros(clip.T - 1, clip.H, clip.W);
    int H = clip.H, W = clip.W, C = clip.C;

    // SAD of target block (tgt frame) against src frame shifted by (dx,dy);
    // out-of-frame taps use border replication.
    auto sad = [&](const double* src, const double* tgt, int by, int bx, int dy, int dx) {
        double s = 0.0;
        for (int y = by; y < by + block; ++y)
            for (int x = bx; x < bx + block; ++x) {
                int sy = std::min(std::max(y + dy, 0), H - 1);
                int sx = std::min(std::max(x + dx, 0), W - 1);
                for (int c = 0; c < C; ++c)
                    s += std::fabs(tgt[(int64_t(y) * W + x) * C + c] -
                                   src[(int64_t(sy) * W + sx) * C + c]);
            }
        return s;
    };

    auto search = [&](const double* src, const double* tgt, double* flow) {
        for (int by = 0; by < H; by += block)
            for (int bx = 0; bx < W; bx += block) {
                double best = -1.0;
                int bdy = 0, bdx = 0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        double s = sad(src, tgt, by, bx, dy, dx);
                        bool better = false;
                        if (best < 0 || s < best) {
                            better = true;
                        } else if (s == best) {
                            int m0 = bdy * bdy + bdx * bdx;
                            int m1 = dy * dy + dx * dx;
                            if (m1 < m0 || (m1 == m0 && (dy < bdy || (dy == bdy && dx < bdx))))
                                better = true;
                        }
                        if (better) {
                            best = s;
                            bdy = dy;
                            bdx = dx;
                        }
                    }
                for (int y = by; y < by + block; ++y)
                    for (int x = bx; x < bx + block; ++x) {
                        int64_t pi = int64_t(y) * W + x;
                        flow[pi * 2 + 0] = bdx;
                        flow[pi * 2 + 1] = bdy;
                    }
            }
    };

    for (int i = 0; i + 1 < clip.T; ++i) {
        // forward[i]: sample frame i to rebuild frame i+1
        search(clip.frame(i), clip.frame(i + 1), f.fw(i));
        // backward[i]: sample frame i+1 to rebuild frame i
        search(clip.frame(i + 1), clip.frame(i), f.bw(i));
    }
    return f;
}

}  // namespace dvface
