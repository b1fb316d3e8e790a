#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/nn.hpp"
#include "core/rng.hpp"
#include "core/serialize.hpp"
#include "core/tensor.hpp"
#include "flowlab/flow.hpp"
#include "harness/checks.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace dvface;

namespace {

Tensor randn(const Shape& s, uint64_t seed, double sc = 1.0, bool rg = false) {
    CounterRng rng = make_stream(seed, "t");
    std::vector<double> v(size_t(numel(s)));
    for (auto& x : v) x = rng.next_gaussian() * sc;
    return Tensor::from_data(s, std::move(v), rg);
}

}  // namespace

TEST_CASE("counter rng streams are deterministic and independent") {
    CounterRng a = make_stream(42, "x");
    CounterRng b = make_stream(42, "x");
    CounterRng c = make_stream(42, "y");
    for (int i = 0; i < 100; ++i) {
        uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
    }
    // different tag -> different sequence
    CounterRng a2 = make_stream(42, "x");
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= a2.next_u64() != c.next_u64();
    CHECK(any_diff);
    // uniforms in range, gaussians roughly centered
    CounterRng g = make_stream(7, "g");
    double mean = 0;
    for (int i = 0; i < 2000; ++i) {
        double u = g.next_uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        mean += g.next_gaussian();
    }
    CHECK(std::abs(mean / 2000) < 0.1);
}

TEST_CASE("elementwise ops and broadcasting match scalar loops") {
    Tensor a = randn({3, 4}, 1);
    Tensor b = randn({3, 4}, 2);
    Tensor s = add(mul(a, b), scale(a, 0.5));
    for (int64_t i = 0; i < a.size(); ++i)
        CHECK(s.data()[size_t(i)] ==
              doctest::Approx(a.data()[size_t(i)] * b.data()[size_t(i)] + 0.5 * a.data()[size_t(i)])
                  .epsilon(1e-12));
    Tensor v = randn({4}, 3);
    Tensor br = add_broadcast(a, v);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(br.data()[size_t(r * 4 + c)] ==
                  doctest::Approx(a.data()[size_t(r * 4 + c)] + v.data()[size_t(c)]));
}

TEST_CASE("matmul matches a naive triple loop") {
    Tensor a = randn({3, 5}, 4);
    Tensor b = randn({5, 2}, 5);
    Tensor c = matmul(a, b);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            double want = 0;
            for (int k = 0; k < 5; ++k)
                want += a.data()[size_t(i * 5 + k)] * b.data()[size_t(k * 2 + j)];
            CHECK(c.data()[size_t(i * 2 + j)] == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("conv2d matches direct convolution on a hand-checkable case") {
    // 1x3x3x1 input, 3x3 kernel, pad 1
    Tensor x = Tensor::from_data({1, 3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    std::vector<double> wv(9, 0.0);
    wv[4] = 1.0;  // center tap only -> identity
    Tensor w = Tensor::from_data({3, 3, 1, 1}, wv);
    Tensor bias = Tensor::zeros({1});
    Tensor y = conv2d(x, w, bias, 1, 1);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(y.data()[size_t(i)] == x.data()[size_t(i)]);

    // general random case vs scalar loop
    Tensor xr = randn({2, 4, 4, 3}, 6);
    Tensor wr = randn({3, 3, 3, 2}, 7);
    Tensor br = randn({2}, 8);
    Tensor yr = conv2d(xr, wr, br, 2, 1);
    REQUIRE(yr.shape() == Shape{2, 2, 2, 2});
    for (int n = 0; n < 2; ++n)
        for (int oy = 0; oy < 2; ++oy)
            for (int ox = 0; ox < 2; ++ox)
                for (int co = 0; co < 2; ++co) {
                    double want = br.data()[size_t(co)];
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx)
                            for (int ci = 0; ci < 3; ++ci) {
                                int iy = oy * 2 + ky - 1, ix = ox * 2 + kx - 1;
                                if (iy < 0 || ix < 0 || iy >= 4 || ix >= 4) continue;
                                want += xr.data()[size_t(((n * 4 + iy) * 4 + ix) * 3 + ci)] *
                                        wr.data()[size_t(((ky * 3 + kx) * 3 + ci) * 2 + co)];
                            }
                    CHECK(yr.data()[size_t(((n * 2 + oy) * 2 + ox) * 2 + co)] ==
                          doctest::Approx(want).epsilon(1e-10));
                }
}

TEST_CASE("softmax rows are normalized and layer norm standardizes") {
    Tensor x = randn({4, 7}, 9);
    Tensor p = softmax_lastdim(x);
    for (int r = 0; r < 4; ++r) {
        double s = 0;
        for (int c = 0; c < 7; ++c) s += p.data()[size_t(r * 7 + c)];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    Tensor g = Tensor::full({7}, 1.0);
    Tensor b = Tensor::zeros({7});
    Tensor ln = layer_norm(x, g, b);
    for (int r = 0; r < 4; ++r) {
        double mean = 0, var = 0;
        for (int c = 0; c < 7; ++c) mean += ln.data()[size_t(r * 7 + c)];
        mean /= 7;
        for (int c = 0; c < 7; ++c) {
            double d = ln.data()[size_t(r * 7 + c)] - mean;
            var += d * d;
        }
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var / 7 == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("attention reduces to a softmax-weighted sum in a manual case") {
    // single batch, 2 queries, 3 keys, width 2, one head
    Tensor q = randn({1, 2, 2}, 10);
    Tensor k = randn({1, 3, 2}, 11);
    Tensor v = randn({1, 3, 2}, 12);
    Tensor out = attention(q, k, v, 1);
    for (int i = 0; i < 2; ++i) {
        double logits[3];
        for (int j = 0; j < 3; ++j) {
            double dot = 0;
            for (int d = 0; d < 2; ++d)
                dot += q.data()[size_t(i * 2 + d)] * k.data()[size_t(j * 2 + d)];
            logits[j] = dot / std::sqrt(2.0);
        }
        double mx = std::max({logits[0], logits[1], logits[2]});
        double wsum = 0, wj[3];
        for (int j = 0; j < 3; ++j) {
            wj[j] = std::exp(logits[j] - mx);
            wsum += wj[j];
        }
        for (int d = 0; d < 2; ++d) {
            double want = 0;
            for (int j = 0; j < 3; ++j) want += wj[j] / wsum * v.data()[size_t(j * 2 + d)];
            CHECK(out.data()[size_t(i * 2 + d)] == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("gradients of stacked ops match finite differences") {
    Tensor x = randn({2, 3, 3, 2}, 13, 0.5, true);
    Tensor w = randn({3, 3, 2, 2}, 14, 0.5, true);
    Tensor b = randn({2}, 15, 0.5, true);
    Tensor g = Tensor::full({2}, 1.0, true);
    Tensor be = Tensor::zeros({2}, true);
    auto loss_fn = [&]() {
        Tensor y = silu(conv2d(x, w, b, 1, 1));
        y = layer_norm(y, g, be);
        Tensor flat = reshape(y, {2, 9, 2});
        Tensor a = attention(flat, flat, flat, 2);
        return add(sum(square(a)), l1(sigmoid(y), Tensor::zeros(y.shape())));
    };
    for (Tensor* p : {&x, &w, &b, &g, &be})
        CHECK(fd_relative_error(loss_fn, *p, 6) <= 1e-4);
}

TEST_CASE("warp_bilinear agrees with the non-autodiff warp and is differentiable") {
    Tensor frame = randn({5, 6, 2}, 16, 0.5, true);
    CounterRng rng = make_stream(17, "flow");
    std::vector<double> flow(5 * 6 * 2);
    for (auto& f : flow) f = rng.next_uniform(-1.0, 1.0);
    std::vector<double> mask_a;
    Tensor out = warp_bilinear(frame, flow, &mask_a);
    std::vector<double> ref(frame.size()), mask_b(5 * 6);
    warp_frame(frame.data().data(), 5, 6, 2, flow.data(), ref.data(), mask_b.data());
    for (int64_t i = 0; i < out.size(); ++i)
        CHECK(out.data()[size_t(i)] == doctest::Approx(ref[size_t(i)]).epsilon(1e-12));
    CHECK(mask_a == mask_b);
    auto loss_fn = [&]() { return sum(square(warp_bilinear(frame, flow))); };
    CHECK(fd_relative_error(loss_fn, frame, 8) <= 1e-4);
}

TEST_CASE("cross entropy limits") {
    int N = 5, K = 16;
    Tensor uniform = Tensor::zeros({N, K});
    std::vector<int> tgt(size_t(N), 2);
    CHECK(cross_entropy_logits(uniform, tgt).item() / N ==
          doctest::Approx(std::log(double(K))).epsilon(1e-9));
    // margin-20 one-hot-consistent logits drive the loss to ~0
    std::vector<double> lv(size_t(N * K), 0.0);
    for (int r = 0; r < N; ++r) lv[size_t(r * K + 2)] = 20.0;
    Tensor sharp = Tensor::from_data({N, K}, std::move(lv));
    CHECK(cross_entropy_logits(sharp, tgt).item() / N <= 1e-6);
    CHECK_THROWS_AS(cross_entropy_logits(uniform, std::vector<int>(size_t(N), K)),
                    std::out_of_range);
}

TEST_CASE("adamw optimizes a quadratic and clips the global norm") {
    Tensor p = Tensor::from_data({2}, {5.0, -3.0}, true);
    AdamW::Hyper h;
    h.lr = 0.1;
    h.weight_decay = 0.0;
    AdamW opt({p}, h);
    for (int i = 0; i < 400; ++i) {
        opt.zero_grad();
        backward(sum(square(p)));
        opt.step();
    }
    CHECK(std::abs(p.data()[0]) < 1e-2);
    CHECK(std::abs(p.data()[1]) < 1e-2);

    Tensor q = Tensor::from_data({1}, {0.0}, true);
    AdamW::Hyper h2;
    h2.clip_norm = 1.0;
    AdamW opt2({q}, h2);
    opt2.zero_grad();
    backward(scale(q, 100.0));  // raw grad 100
    opt2.step();
    // clipping happens inside step; verify the recorded moment reflects it
    CHECK(opt2.moment1()[0] == doctest::Approx(0.1 * 1.0));
}

TEST_CASE("param store init is name-keyed, not order-keyed") {
    ParamStore a(3), b(3);
    Tensor a1 = a.create("x", {4}, 1.0);
    a.create("y", {4}, 1.0);
    b.create("y", {4}, 1.0);
    Tensor b1 = b.create("x", {4}, 1.0);
    CHECK(a1.data() == b1.data());
    CHECK(a.names_with_prefix("x") == std::vector<std::string>{"x"});
}

TEST_CASE("array files and checkpoints round trip") {
    auto dir = std::filesystem::temp_directory_path() / "dvface_core_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "a.dvar").string();
    Tensor t = randn({3, 4, 2}, 18);
    save_array_file(path, t.shape(), t.data());
    Shape s;
    std::vector<double> d;
    load_array_file(path, s, d);
    CHECK(s == t.shape());
    CHECK(d == t.data());
    CHECK(fnv1a_file(path) == fnv1a_file(path));

    Checkpoint ck;
    ck.config_hash = 77;
    ck.put("w", t.shape(), t.data());
    ck.put_scalar("s", 2.5);
    std::string cpath = (dir / "c.ckpt").string();
    ck.save(cpath);
    Checkpoint back = Checkpoint::load(cpath);
    CHECK(back.config_hash == 77);
    CHECK(back.arrays.at("w").second == t.data());
    CHECK(back.get_scalar("s") == 2.5);

    CHECK_THROWS_AS(Checkpoint::load((dir / "missing.ckpt").string()), IoError);
    std::ofstream bad((dir / "bad.ckpt").string(), std::ios::binary);
    bad << "not a checkpoint";
    bad.close();
    CHECK_THROWS_AS(Checkpoint::load((dir / "bad.ckpt").string()), IoError);
}

TEST_CASE("detach blocks gradients and clamp zeroes them outside the range") {
    Tensor x = randn({4}, 19, 1.0, true);
    x.zero_grad();
    backward(sum(square(detach(x))));
    for (double g : x.grad()) CHECK(g == 0.0);
    Tensor y = Tensor::from_data({3}, {-2.0, 0.5, 2.0}, true);
    y.zero_grad();
    Tensor c = clamp_t(y, 0.0, 1.0);
    CHECK(c.data() == std::vector<double>{0.0, 0.5, 1.0});
    backward(sum(c));
    CHECK(y.grad() == std::vector<double>{0.0, 1.0, 0.0});
}
