#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/rng.hpp"
#include "metrics/metrics.hpp"
#include "videodata/video.hpp"

#include <cmath>
#include <filesystem>

using namespace dvface;

namespace {

VideoClip noise_clip(int T, int H, int W, uint64_t seed, double lo = 0.0, double hi = 1.0) {
    VideoClip c = VideoClip::zeros(T, H, W);
    CounterRng rng = make_stream(seed, "m");
    for (auto& v : c.data) v = rng.next_uniform(lo, hi);
    return c;
}

}  // namespace

TEST_CASE("psnr matches the closed form and caps at 100 dB") {
    VideoClip a = VideoClip::zeros(2, 8, 8);
    VideoClip b = VideoClip::zeros(2, 8, 8);
    CHECK(psnr(a, a) == 100.0);
    for (auto& v : b.data) v = 0.1;  // MSE = 0.01 -> 20 dB
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(a, b) == psnr(b, a));
    // per-frame averaging: frame0 identical, frame1 offset by 0.1
    VideoClip c = VideoClip::zeros(2, 8, 8);
    for (int64_t i = c.frame_size(); i < 2 * c.frame_size(); ++i) c.data[size_t(i)] = 0.1;
    CHECK(psnr(a, c) == doctest::Approx((100.0 + 20.0) / 2).epsilon(1e-12));
}

TEST_CASE("psnr recomputation on random clips") {
    VideoClip a = noise_clip(3, 8, 8, 1);
    VideoClip b = noise_clip(3, 8, 8, 2);
    double want = 0.0;
    for (int t = 0; t < 3; ++t) {
        double m = 0.0;
        for (int64_t i = 0; i < a.frame_size(); ++i) {
            double d = a.frame(t)[i] - b.frame(t)[i];
            m += d * d;
        }
        m /= double(a.frame_size());
        want += 10.0 * std::log10(1.0 / m);
    }
    want /= 3.0;
    CHECK(psnr(a, b) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("ssim is 1 for identical clips, symmetric, and penalizes distortion") {
    VideoClip a = noise_clip(2, 16, 16, 3, 0.2, 0.8);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    VideoClip b = a;
    for (auto& v : b.data) v = std::min(1.0, v + 0.2);
    double s = ssim(a, b);
    CHECK(s < 1.0);
    CHECK(s > -1.0);
    CHECK(ssim(b, a) == doctest::Approx(s).epsilon(1e-12));
    // inverted signal anti-correlates with the original
    VideoClip inv = a;
    for (auto& v : inv.data) v = 1.0 - v;
    CHECK(ssim(a, inv) < 0.0);
    // structural noise hurts more than a constant shift of the same energy
    VideoClip noisy = a;
    CounterRng rng = make_stream(4, "n");
    for (auto& v : noisy.data) v = std::min(1.0, std::max(0.0, v + 0.2 * rng.next_gaussian()));
    CHECK(ssim(a, noisy) < s);
}

TEST_CASE("warping error is zero for static content and grows with flicker") {
    VideoClip base = noise_clip(1, 16, 16, 5);
    VideoClip stat = VideoClip::zeros(3, 16, 16);
    for (int t = 0; t < 3; ++t)
        for (int64_t i = 0; i < base.frame_size(); ++i) stat.frame(t)[i] = base.frame(0)[i];
    FlowFieldSequence flows = FlowFieldSequence::zeros(2, 16, 16);
    CHECK(warping_error(stat, flows) == 0.0);

    auto flicker = [&](double amp) {
        VideoClip c = stat;
        for (int t = 0; t < 3; ++t) {
            double sign = (t % 2 == 0) ? 1.0 : -1.0;
            for (int64_t i = 0; i < c.frame_size(); ++i)
                c.frame(t)[i] = std::min(1.0, std::max(0.0, c.frame(t)[i] + sign * amp));
        }
        return warping_error(c, flows);
    };
    double e1 = flicker(0.05), e2 = flicker(0.10), e3 = flicker(0.20);
    CHECK(e1 > 0.0);
    CHECK(e2 > e1);
    CHECK(e3 > e2);
}

TEST_CASE("warping error is zero for exact rigid motion with its true flow") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 1.0;
    auto [clip, flows] = make_toy_clip(spec, 4, 16, 16, 6);
    CHECK(warping_error(clip, flows) <= 1e-9);
}

TEST_CASE("warping error recomputation against the definition") {
    VideoClip c = noise_clip(3, 16, 16, 7);
    FlowFieldSequence flows = FlowFieldSequence::zeros(2, 16, 16);
    CounterRng rng = make_stream(8, "f");
    for (auto& v : flows.forward) v = rng.next_uniform(-1.0, 1.0);
    double want = 0.0;
    for (int i = 0; i < 2; ++i) {
        std::vector<double> out(size_t(c.frame_size())), mask(size_t(16 * 16));
        warp_frame(c.frame(i), 16, 16, 3, flows.fw(i), out.data(), mask.data());
        double s = 0.0, n = 0.0;
        for (int p = 0; p < 16 * 16; ++p) {
            if (mask[size_t(p)] == 0.0) continue;
            for (int ch = 0; ch < 3; ++ch) {
                double d = out[size_t(p * 3 + ch)] - c.frame(i + 1)[p * 3 + ch];
                s += d * d;
            }
            n += 3.0;
        }
        want += s / n;
    }
    want = want / 2.0 * 1e3;
    CHECK(warping_error(c, flows) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("evaluation reports aggregate correctly and round trip through disk") {
    EvalReport rep;
    for (int i = 0; i < 3; ++i) {
        ClipMetrics m;
        m.name = "clip" + std::to_string(i);
        m.psnr = 20.0 + i;
        m.ssim = 0.5 + 0.1 * i;
        m.ewarp = 2.0 - 0.5 * i;
        rep.clips.push_back(m);
    }
    rep.finalize();
    CHECK(rep.aggregate.name == "mean");
    CHECK(rep.aggregate.psnr == doctest::Approx(21.0).epsilon(1e-12));
    CHECK(rep.aggregate.ssim == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rep.aggregate.ewarp == doctest::Approx(1.5).epsilon(1e-12));
    rep.meta["priors"] = "both";

    auto dir = std::filesystem::temp_directory_path() / "dvface_metrics_test";
    std::filesystem::create_directories(dir);
    rep.write_jsonl((dir / "report.jsonl").string());
    rep.write_summary((dir / "summary.json").string());
    EvalReport back = EvalReport::read_summary((dir / "summary.json").string());
    CHECK(back.aggregate.psnr == doctest::Approx(rep.aggregate.psnr).epsilon(1e-9));
    CHECK(back.aggregate.ssim == doctest::Approx(rep.aggregate.ssim).epsilon(1e-9));
    CHECK(back.aggregate.ewarp == doctest::Approx(rep.aggregate.ewarp).epsilon(1e-9));
    CHECK(back.meta.at("priors") == "both");
}
