#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/serialize.hpp"
#include "metrics/metrics.hpp"
#include "videodata/video.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace dvface;

TEST_CASE("toy clips are deterministic and valued in [0,1]") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 1.0;
    auto [a, fa] = make_toy_clip(spec, 4, 16, 16, 3);
    auto [b, fb] = make_toy_clip(spec, 4, 16, 16, 3);
    CHECK(a.data == b.data);
    CHECK(fa.forward == fb.forward);
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    a.validate();
    fa.validate();
}

TEST_CASE("static motion yields identical frames and zero flow") {
    MotionSpec spec;  // all rates zero
    auto [clip, flows] = make_toy_clip(spec, 3, 16, 16, 11);
    for (int t = 1; t < clip.T; ++t)
        for (int64_t i = 0; i < clip.frame_size(); ++i)
            CHECK(clip.frame(t)[i] == clip.frame(0)[i]);
    for (double v : flows.forward) CHECK(v == 0.0);
    for (double v : flows.backward) CHECK(v == 0.0);
}

TEST_CASE("integer translation flow is constant and warps exactly") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 1.0;
    spec.vy = 0.0;
    int T = 4, H = 16, W = 16;
    auto [clip, flows] = make_toy_clip(spec, T, H, W, 5);
    // forward flow warps frame i onto frame i+1 by sampling at p + flow
    for (int i = 0; i < T - 1; ++i) {
        const double* f = flows.fw(i);
        for (int p = 0; p < H * W; ++p) {
            CHECK(f[p * 2 + 0] == doctest::Approx(1.0));
            CHECK(f[p * 2 + 1] == doctest::Approx(0.0));
        }
        std::vector<double> out(size_t(clip.frame_size())), mask(size_t(H * W));
        warp_frame(clip.frame(i), H, W, 3, f, out.data(), mask.data());
        double worst = 0.0;
        for (int p = 0; p < H * W; ++p) {
            if (mask[size_t(p)] == 0.0) continue;
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst,
                                 std::abs(out[size_t(p * 3 + c)] - clip.frame(i + 1)[p * 3 + c]));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("translation forward and backward flows are opposite") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 0.5;
    spec.vy = -0.25;
    auto [clip, flows] = make_toy_clip(spec, 3, 16, 16, 2);
    (void)clip;
    for (size_t i = 0; i < flows.forward.size(); ++i)
        CHECK(flows.forward[i] == doctest::Approx(-flows.backward[i]).epsilon(1e-9));
}

TEST_CASE("rotation flow matches the rigid-motion formula") {
    MotionSpec spec;
    spec.kind = MotionKind::rotate;
    spec.omega = 0.05;
    int H = 17, W = 17;
    auto [clip, flows] = make_toy_clip(spec, 3, H, W, 4);
    (void)clip;
    // frame 0 is unrotated, so flow(p) = R_omega(p - c) + c - p exactly
    double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
    double cs = std::cos(spec.omega), sn = std::sin(spec.omega);
    const double* f = flows.fw(0);
    double worst = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double rx = x - cx, ry = y - cy;
            double sx = cs * rx - sn * ry + cx;
            double sy = sn * rx + cs * ry + cy;
            int p = y * W + x;
            worst = std::max(worst, std::abs(f[p * 2 + 0] - (sx - x)));
            worst = std::max(worst, std::abs(f[p * 2 + 1] - (sy - y)));
        }
    CHECK(worst <= 1e-9);
}

TEST_CASE("clip geometry is validated") {
    CHECK_THROWS_AS(make_toy_clip(MotionSpec{}, 2, 16, 16, 0), ConfigError);
    CHECK_THROWS_AS(make_toy_clip(MotionSpec{}, 4, 8, 8, 0), ConfigError);
    MotionSpec fast;
    fast.kind = MotionKind::translate;
    fast.vx = 100.0;
    CHECK_THROWS_AS(make_toy_clip(fast, 4, 16, 16, 0), ConfigError);
}

TEST_CASE("degradation with identity settings is a no-op") {
    auto [clip, flows] = make_toy_clip(MotionSpec{}, 3, 16, 16, 6);
    (void)flows;
    DegradeConfig cfg;  // defaults: no blur, no noise, factor 1, quality 100
    VideoClip lq = degrade(clip, cfg);
    CHECK(lq.data == clip.data);
}

TEST_CASE("degradation is deterministic and actually degrades") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 1.0;
    auto [clip, flows] = make_toy_clip(spec, 4, 16, 16, 7);
    (void)flows;
    DegradeConfig cfg;
    cfg.blur_sigma_lo = 0.8;
    cfg.blur_sigma_hi = 1.2;
    cfg.noise_sigma_lo = 0.02;
    cfg.noise_sigma_hi = 0.05;
    cfg.downscale_factors = {2};
    cfg.quality_lo = 60;
    cfg.quality_hi = 80;
    cfg.seed = 13;
    DegradeLog log_a, log_b;
    VideoClip a = degrade(clip, cfg, &log_a);
    VideoClip b = degrade(clip, cfg, &log_b);
    CHECK(a.data == b.data);
    CHECK(log_a.blur_sigma == log_b.blur_sigma);
    CHECK(log_a.noise_sigma == log_b.noise_sigma);
    CHECK(a.T == clip.T);
    CHECK(a.H == clip.H);
    CHECK(a.W == clip.W);
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    double p = psnr(a, clip);
    CHECK(p < 45.0);  // visibly degraded
    CHECK(p > 5.0);   // but still related to the source
    CHECK(log_a.blur_sigma >= cfg.blur_sigma_lo);
    CHECK(log_a.blur_sigma <= cfg.blur_sigma_hi);
    CHECK(log_a.downscale_factor == 2);
}

TEST_CASE("degrade config is validated against the frame size") {
    DegradeConfig bad;
    bad.downscale_factors = {3};  // does not divide 16
    CHECK_THROWS_AS(bad.validate(16, 16), ConfigError);
    DegradeConfig neg;
    neg.noise_sigma_lo = -0.1;
    CHECK_THROWS_AS(neg.validate(16, 16), ConfigError);
}

TEST_CASE("datasets round trip through disk exactly") {
    DatasetParams p;
    p.n_clips = 3;
    p.T = 4;
    p.H = 16;
    p.W = 16;
    p.seed = 21;
    p.degrade.blur_sigma_lo = 0.5;
    p.degrade.blur_sigma_hi = 1.0;
    p.degrade.noise_sigma_lo = 0.01;
    p.degrade.noise_sigma_hi = 0.03;
    p.degrade.downscale_factors = {2};
    p.degrade.seed = 22;
    Dataset ds = generate_toy_dataset(p);
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.flows.size() == 3);
    REQUIRE(ds.logs.size() == 3);

    // same params -> bit-identical dataset
    Dataset ds2 = generate_toy_dataset(p);
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.hq[i].data == ds2.hq[i].data);
        CHECK(ds.lq[i].data == ds2.lq[i].data);
    }

    auto dir = (std::filesystem::temp_directory_path() / "dvface_ds_test").string();
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    CHECK(std::filesystem::exists(dir + "/manifest.json"));
    Dataset back = load_dataset(dir);
    REQUIRE(back.size() == ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.hq[i].data == ds.hq[i].data);
        CHECK(back.lq[i].data == ds.lq[i].data);
        CHECK(back.flows[i].forward == ds.flows[i].forward);
        CHECK(back.flows[i].backward == ds.flows[i].backward);
        CHECK(back.hq[i].name == ds.hq[i].name);
    }

    CHECK_THROWS_AS(load_dataset(dir + "_missing"), IoError);

    // corrupt one payload byte -> checksum mismatch on load
    std::string victim;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".dvar") {
            victim = e.path().string();
            break;
        }
    REQUIRE(!victim.empty());
    {
        std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-9, std::ios::end);
        char c;
        f.seekg(-9, std::ios::end);
        f.get(c);
        f.seekp(-9, std::ios::end);
        c = char(c ^ 0x40);
        f.put(c);
    }
    CHECK_THROWS_AS(load_dataset(dir), IoError);
}
