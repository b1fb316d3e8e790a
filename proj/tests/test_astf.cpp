#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "astf/astf.hpp"
#include "harness/checks.hpp"

#include <cmath>

using namespace dvface;

namespace {

AstfConfig tiny_cfg() {
    AstfConfig c;
    c.c_dit = 6;
    c.d_prior = 4;
    c.mlp_hidden = 8;
    c.heads = 1;
    c.n_blocks = 2;
    return c;
}

Tensor randn(const Shape& s, uint64_t seed, double sc = 1.0, bool rg = false) {
    CounterRng rng = make_stream(seed, "t");
    std::vector<double> v(size_t(numel(s)));
    for (auto& x : v) x = rng.next_gaussian() * sc;
    return Tensor::from_data(s, std::move(v), rg);
}

void fill_params(ParamStore& ps, uint64_t seed, double sc) {
    uint64_t k = 0;
    for (auto& t : ps.tensors()) {
        CounterRng rng = make_stream(seed + k++, "fill");
        Tensor h = t;
        for (auto& v : h.data()) v = rng.next_gaussian() * sc;
    }
}

}  // namespace

TEST_CASE("prior mode names round trip") {
    for (PriorMode m : {PriorMode::none, PriorMode::spatial_only, PriorMode::temporal_only,
                        PriorMode::both})
        CHECK(prior_mode_from_string(prior_mode_to_string(m)) == m);
    CHECK_THROWS_AS(prior_mode_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("a fresh fusion module is an exact identity") {
    ParamStore ps(42);
    AstfModule mod(ps, "f", tiny_cfg());
    Tensor f_t = randn({1, 2, 3, 4}, 1);
    Tensor f_s = randn({1, 2, 3, 4}, 2);
    Tensor x = randn({6, 6}, 3);
    for (int b = 0; b < 2; ++b) {
        ModulationParams m = mod.compute_modulation(f_t, b);
        for (double v : m.gamma.data()) CHECK(v == 0.0);
        for (double v : m.beta.data()) CHECK(v == 0.0);
        Tensor y = mod.fuse(x, f_s, f_t, b, m);
        CHECK(y.data() == x.data());
    }
}

TEST_CASE("modulation pooling is invariant to token order") {
    ParamStore ps(43);
    AstfModule mod(ps, "f", tiny_cfg());
    fill_params(ps, 100, 0.3);
    Tensor f_t = randn({1, 2, 2, 4}, 4);
    // reverse token order
    std::vector<double> rev(f_t.data().size());
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) rev[size_t(i * 4 + j)] = f_t.data()[size_t((3 - i) * 4 + j)];
    Tensor f_rev = Tensor::from_data({1, 2, 2, 4}, rev);
    ModulationParams a = mod.compute_modulation(f_t);
    ModulationParams b = mod.compute_modulation(f_rev);
    for (int64_t i = 0; i < a.gamma.size(); ++i)
        CHECK(a.gamma.data()[size_t(i)] == doctest::Approx(b.gamma.data()[size_t(i)]).epsilon(1e-12));
    for (int64_t i = 0; i < a.beta.size(); ++i)
        CHECK(a.beta.data()[size_t(i)] == doctest::Approx(b.beta.data()[size_t(i)]).epsilon(1e-12));
}

TEST_CASE("modulation MLP matches a scalar recomputation") {
    AstfConfig cfg = tiny_cfg();
    ParamStore ps(44);
    AstfModule mod(ps, "f", cfg);
    fill_params(ps, 200, 0.4);
    Tensor f_t = randn({1, 1, 2, 4}, 5);
    ModulationParams m = mod.compute_modulation(f_t);
    // pooled mean over the 2 tokens
    std::vector<double> pooled(4);
    for (int j = 0; j < 4; ++j)
        pooled[size_t(j)] = 0.5 * (f_t.data()[size_t(j)] + f_t.data()[size_t(4 + j)]);
    const auto& w1 = ps.get("f.mod.l1.w").data();
    const auto& b1 = ps.get("f.mod.l1.b").data();
    const auto& w2 = ps.get("f.mod.l2.w").data();
    const auto& b2 = ps.get("f.mod.l2.b").data();
    std::vector<double> hid(size_t(cfg.mlp_hidden));
    for (int o = 0; o < cfg.mlp_hidden; ++o) {
        double s = b1[size_t(o)];
        for (int i = 0; i < 4; ++i) s += pooled[size_t(i)] * w1[size_t(i * cfg.mlp_hidden + o)];
        hid[size_t(o)] = s / (1.0 + std::exp(-s));  // silu
    }
    for (int o = 0; o < 2 * cfg.c_dit; ++o) {
        double s = b2[size_t(o)];
        for (int i = 0; i < cfg.mlp_hidden; ++i)
            s += hid[size_t(i)] * w2[size_t(i * 2 * cfg.c_dit + o)];
        double got = o < cfg.c_dit ? m.gamma.data()[size_t(o)]
                                   : m.beta.data()[size_t(o - cfg.c_dit)];
        CHECK(got == doctest::Approx(s).epsilon(1e-10));
    }
}

TEST_CASE("shared modulation reuses one MLP across blocks; per-layer does not") {
    AstfConfig cfg = tiny_cfg();
    ParamStore ps(45);
    AstfModule mod(ps, "f", cfg);
    fill_params(ps, 300, 0.3);
    Tensor f_t = randn({1, 2, 2, 4}, 6);
    ModulationParams a = mod.compute_modulation(f_t, 0);
    ModulationParams b = mod.compute_modulation(f_t, 1);
    CHECK(a.gamma.data() == b.gamma.data());
    CHECK(a.beta.data() == b.beta.data());

    cfg.shared_modulation = false;
    ParamStore ps2(46);
    AstfModule mod2(ps2, "f", cfg);
    fill_params(ps2, 400, 0.3);
    CHECK(ps2.has("f.mod0.l2.w"));
    CHECK(ps2.has("f.mod1.l2.w"));
    ModulationParams c = mod2.compute_modulation(f_t, 0);
    ModulationParams d = mod2.compute_modulation(f_t, 1);
    bool differ = false;
    for (int64_t i = 0; i < c.gamma.size(); ++i)
        differ |= c.gamma.data()[size_t(i)] != d.gamma.data()[size_t(i)];
    CHECK(differ);
}

TEST_CASE("single-token cross refinement reduces to the value projection") {
    AstfConfig cfg = tiny_cfg();
    ParamStore ps(47);
    AstfModule mod(ps, "f", cfg);
    fill_params(ps, 500, 0.4);
    Tensor f_t = randn({1, 1, 1, 4}, 7);
    Tensor f_s = randn({1, 1, 1, 4}, 8);
    Tensor out = mod.cross_refine(f_t, f_s, 0);
    // one key -> softmax weight 1 -> output is exactly Wv f_s + b
    const auto& wv = ps.get("f.blk0.wv.w").data();
    const auto& bv = ps.get("f.blk0.wv.b").data();
    for (int o = 0; o < cfg.c_dit; ++o) {
        double s = bv[size_t(o)];
        for (int i = 0; i < 4; ++i) s += f_s.data()[size_t(i)] * wv[size_t(i * cfg.c_dit + o)];
        CHECK(out.data()[size_t(o)] == doctest::Approx(s).epsilon(1e-10));
    }
    CHECK_THROWS_AS(mod.cross_refine(f_t, randn({1, 1, 2, 4}, 9), 0), ShapeError);
}

TEST_CASE("fusion is asymmetric: priors enter by different routes") {
    AstfConfig cfg = tiny_cfg();
    ParamStore ps(48);
    AstfModule mod(ps, "f", cfg);
    fill_params(ps, 600, 0.3);
    Tensor f_t = randn({1, 2, 2, 4}, 10);
    Tensor f_s = randn({1, 2, 2, 4}, 11);
    Tensor x = randn({4, 6}, 12);
    // the spatial prior never touches the modulation parameters
    Tensor f_s2 = randn({1, 2, 2, 4}, 13);
    ModulationParams m = mod.compute_modulation(f_t);
    Tensor y1 = mod.fuse(x, f_s, f_t, 0, m);
    Tensor y2 = mod.fuse(x, f_s2, f_t, 0, m);
    // both use the same modulation; the difference is purely the attention residual
    Tensor d1 = mod.cross_refine(f_t, f_s, 0);
    Tensor d2 = mod.cross_refine(f_t, f_s2, 0);
    const auto& pw = ps.get("f.blk0.proj.w").data();
    const auto& pb = ps.get("f.blk0.proj.b").data();
    for (int t = 0; t < 4; ++t)
        for (int o = 0; o < 6; ++o) {
            double p1 = pb[size_t(o)], p2 = pb[size_t(o)];
            for (int i = 0; i < 6; ++i) {
                p1 += d1.data()[size_t(t * 6 + i)] * pw[size_t(i * 6 + o)];
                p2 += d2.data()[size_t(t * 6 + i)] * pw[size_t(i * 6 + o)];
            }
            double got = y1.data()[size_t(t * 6 + o)] - y2.data()[size_t(t * 6 + o)];
            CHECK(got == doctest::Approx(p1 - p2).epsilon(1e-9));
        }
    // the temporal prior does move the modulation
    Tensor f_t2 = randn({1, 2, 2, 4}, 14);
    ModulationParams m2 = mod.compute_modulation(f_t2);
    bool differ = false;
    for (int64_t i = 0; i < m.gamma.size(); ++i)
        differ |= m.gamma.data()[size_t(i)] != m2.gamma.data()[size_t(i)];
    CHECK(differ);
}

TEST_CASE("fusion gradients match finite differences") {
    AstfConfig cfg = tiny_cfg();
    cfg.n_blocks = 1;
    ParamStore ps(49);
    AstfModule mod(ps, "f", cfg);
    fill_params(ps, 700, 0.3);
    Tensor x = randn({4, 6}, 15, 1.0, true);
    Tensor f_s = randn({1, 2, 2, 4}, 16, 1.0, true);
    Tensor f_t = randn({1, 2, 2, 4}, 17, 1.0, true);
    auto loss_fn = [&]() {
        ModulationParams m = mod.compute_modulation(f_t);
        return sum(square(mod.fuse(x, f_s, f_t, 0, m)));
    };
    for (Tensor* p : {&x, &f_s, &f_t}) CHECK(fd_relative_error(loss_fn, *p) <= 1e-4);
}

TEST_CASE("token count mismatches are rejected") {
    ParamStore ps(50);
    AstfModule mod(ps, "f", tiny_cfg());
    Tensor f_t = randn({1, 2, 2, 4}, 18);
    Tensor f_s = randn({1, 2, 2, 4}, 19);
    ModulationParams m = mod.compute_modulation(f_t);
    CHECK_THROWS_AS(mod.fuse(randn({3, 6}, 20), f_s, f_t, 0, m), ShapeError);
}
