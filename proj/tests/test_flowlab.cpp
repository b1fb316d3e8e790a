#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "flowlab/flow.hpp"
#include "videodata/video.hpp"

#include <cmath>
#include <limits>

using namespace dvface;

TEST_CASE("zero flow is the identity warp with a full validity mask") {
    int H = 6, W = 7, C = 3;
    std::vector<double> frame(size_t(H * W * C));
    for (size_t i = 0; i < frame.size(); ++i) frame[i] = std::sin(0.1 * double(i));
    std::vector<double> flow(size_t(H * W * 2), 0.0);
    std::vector<double> out(frame.size()), mask(size_t(H * W));
    warp_frame(frame.data(), H, W, C, flow.data(), out.data(), mask.data());
    CHECK(out == frame);
    for (double m : mask) CHECK(m == 1.0);
}

TEST_CASE("constant integer flow shifts columns and masks the border") {
    int H = 4, W = 5, C = 1;
    std::vector<double> frame(size_t(H * W));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) frame[size_t(y * W + x)] = 10.0 * y + x;
    std::vector<double> flow(size_t(H * W * 2));
    for (int p = 0; p < H * W; ++p) {
        flow[size_t(p * 2 + 0)] = 1.0;  // sample one column to the right
        flow[size_t(p * 2 + 1)] = 0.0;
    }
    std::vector<double> out(frame.size()), mask(size_t(H * W));
    warp_frame(frame.data(), H, W, C, flow.data(), out.data(), mask.data());
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (x + 1 < W) {
                CHECK(out[size_t(y * W + x)] == doctest::Approx(frame[size_t(y * W + x + 1)]));
                CHECK(mask[size_t(y * W + x)] == 1.0);
            } else {
                CHECK(mask[size_t(y * W + x)] == 0.0);  // sample fell off the frame
            }
        }
}

TEST_CASE("fractional warp of a linear ramp is exact") {
    int H = 8, W = 8, C = 1;
    std::vector<double> frame(size_t(H * W));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) frame[size_t(y * W + x)] = 0.25 * x - 0.125 * y;
    std::vector<double> flow(size_t(H * W * 2));
    for (int p = 0; p < H * W; ++p) {
        flow[size_t(p * 2 + 0)] = 0.5;
        flow[size_t(p * 2 + 1)] = -0.75;
    }
    std::vector<double> out(frame.size()), mask(size_t(H * W));
    warp_frame(frame.data(), H, W, C, flow.data(), out.data(), mask.data());
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (mask[size_t(y * W + x)] == 0.0) continue;
            double want = 0.25 * (x + 0.5) - 0.125 * (y - 0.75);
            CHECK(out[size_t(y * W + x)] == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("block matching recovers integer translations and is deterministic") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 1.0;
    spec.vy = 0.0;
    auto [clip, gt] = make_toy_clip(spec, 4, 16, 16, 9);
    FlowFieldSequence est = block_match_flow(clip, 4, 2);
    FlowFieldSequence est2 = block_match_flow(clip, 4, 2);
    CHECK(est.forward == est2.forward);
    CHECK(est.backward == est2.backward);
    double err = 0.0;
    for (size_t i = 0; i < est.forward.size(); ++i)
        err += std::abs(est.forward[i] - gt.forward[i]);
    err /= double(est.forward.size());
    CHECK(err <= 0.5);
}

TEST_CASE("block matching reports zero motion for a static clip") {
    auto [clip, gt] = make_toy_clip(MotionSpec{}, 3, 16, 16, 10);
    (void)gt;
    FlowFieldSequence est = block_match_flow(clip, 4, 2);
    for (double v : est.forward) CHECK(v == 0.0);
    for (double v : est.backward) CHECK(v == 0.0);
}

TEST_CASE("flow sequence values are validated") {
    FlowFieldSequence f = FlowFieldSequence::zeros(2, 4, 4);
    f.validate();
    f.forward[0] = 100.0;  // displacement far beyond the frame
    CHECK_THROWS(f.validate());
    f.forward[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(f.validate());
}
