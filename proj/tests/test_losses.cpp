#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "harness/checks.hpp"
#include "losses/losses.hpp"
#include "videodata/video.hpp"

#include <cmath>

using namespace dvface;

namespace {

Tensor randn(const Shape& s, uint64_t seed, double sc = 1.0, bool rg = false) {
    CounterRng rng = make_stream(seed, "t");
    std::vector<double> v(size_t(numel(s)));
    for (auto& x : v) x = rng.next_gaussian() * sc;
    return Tensor::from_data(s, std::move(v), rg);
}

Tensor rand01(const Shape& s, uint64_t seed, bool rg = false) {
    CounterRng rng = make_stream(seed, "u");
    std::vector<double> v(size_t(numel(s)));
    for (auto& x : v) x = rng.next_uniform();
    return Tensor::from_data(s, std::move(v), rg);
}

void zero_params(ParamStore& ps) {
    for (auto& t : ps.tensors()) {
        Tensor h = t;
        for (auto& v : h.data()) v = 0.0;
    }
}

}  // namespace

TEST_CASE("perceptual distance is zero iff inputs match and is symmetric") {
    FeatureExtractor fe;
    Tensor a = rand01({2, 8, 8, 3}, 1);
    Tensor b = rand01({2, 8, 8, 3}, 2);
    CHECK(fe.perceptual(a, a).item() == 0.0);
    double ab = fe.perceptual(a, b).item();
    CHECK(ab > 0.0);
    CHECK(fe.perceptual(b, a).item() == doctest::Approx(ab).epsilon(1e-12));
    // fixed network: two instances agree bit-exactly
    FeatureExtractor fe2;
    CHECK(fe2.perceptual(a, b).item() == ab);
    CHECK_THROWS_AS(fe.perceptual(a, rand01({2, 4, 4, 3}, 3)), ShapeError);
}

TEST_CASE("perceptual features never receive parameter gradients") {
    FeatureExtractor fe;
    Tensor a = rand01({1, 8, 8, 3}, 4, true);
    Tensor b = rand01({1, 8, 8, 3}, 5);
    a.zero_grad();
    backward(fe.perceptual(a, b));
    bool any = false;
    for (double g : a.grad()) any |= g != 0.0;
    CHECK(any);  // input gradient flows; the extractor itself stays frozen
}

TEST_CASE("stage-1 loss vanishes term by term on a perfect reconstruction") {
    Discriminator disc(7);
    FeatureExtractor fe;
    LossWeights w;
    Tensor x = rand01({2, 8, 8, 3}, 6);
    Tensor z = randn({10, 4}, 7);
    LossReport r = stage1_loss(x, x, z, z, disc, fe, w);
    CHECK(r.value("l1") == 0.0);
    CHECK(r.value("per") == 0.0);
    CHECK(r.value("feat") == 0.0);
    // total reduces to the weighted adversarial term
    CHECK(r.total.item() == doctest::Approx(w.lambda_adv * r.value("adv_g")).epsilon(1e-12));
}

TEST_CASE("stage-1 feature term reproduces the worked arithmetic example") {
    Discriminator disc(8);
    FeatureExtractor fe;
    LossWeights w;  // beta = 0.25
    Tensor x = rand01({1, 8, 8, 3}, 8);
    Tensor z_h = Tensor::full({4, 3}, 1.0, true);
    Tensor z_q = Tensor::zeros({4, 3}, true);
    LossReport r = stage1_loss(x, x, z_h, z_q, disc, fe, w);
    CHECK(r.value("feat") == doctest::Approx(1.25).epsilon(1e-12));
    // weighted-sum recomputation of the total
    double want = r.value("l1") + r.value("per") + r.value("feat") +
                  w.lambda_adv * r.value("adv_g");
    CHECK(r.total.item() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("an uninformative discriminator scores 2 log 2 and sends no generator gradient") {
    Discriminator disc(9);
    zero_params(disc.params());  // all logits exactly zero -> p = 1/2
    Tensor x_hq = rand01({2, 8, 8, 3}, 9);
    Tensor x_hat = rand01({2, 8, 8, 3}, 10, true);
    x_hat.zero_grad();
    Tensor d = discriminator_step_loss(x_hq, x_hat, disc);
    CHECK(d.item() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    backward(d);
    for (double g : x_hat.grad()) CHECK(g == 0.0);  // generator outputs were detached
}

TEST_CASE("discriminator step loss gradients match finite differences") {
    Discriminator disc(11);
    Tensor x_hq = rand01({1, 8, 8, 3}, 11);
    Tensor x_hat = rand01({1, 8, 8, 3}, 12);
    Tensor w0 = disc.params().get("disc.c0.w");
    auto loss_fn = [&]() { return discriminator_step_loss(x_hq, x_hat, disc); };
    CHECK(fd_relative_error(loss_fn, w0, 6) <= 1e-4);
}

TEST_CASE("code-prediction loss limits: uniform logits and confident correct logits") {
    int N = 4, K = 16;
    LossWeights w;
    std::vector<int> tgt{0, 3, 7, 15};
    Tensor uniform = Tensor::zeros({N, K});
    Tensor z = randn({2 * N, 3}, 13);
    LossReport r = stage1p_loss(uniform, uniform, tgt, tgt, z, z, w);
    CHECK(r.value("ce_s") / N == doctest::Approx(std::log(double(K))).epsilon(1e-9));
    CHECK(r.value("cf") == 0.0);
    CHECK(r.total.item() ==
          doctest::Approx(w.lambda_ce * (r.value("ce_s") + r.value("ce_t"))).epsilon(1e-12));

    std::vector<double> lv(size_t(N * K), 0.0);
    for (int i = 0; i < N; ++i) lv[size_t(i * K + tgt[size_t(i)])] = 20.0;
    Tensor sharp = Tensor::from_data({N, K}, std::move(lv));
    LossReport r2 = stage1p_loss(sharp, sharp, tgt, tgt, z, z, w);
    CHECK(r2.value("ce_s") / N <= 1e-6);
}

TEST_CASE("latent alignment pulls the encoder but not the code targets") {
    LossWeights w;
    Tensor logits = Tensor::zeros({2, 4});
    std::vector<int> tgt{0, 1};
    Tensor z_l = randn({2, 3}, 14, 1.0, true);
    Tensor z_q = randn({2, 3}, 15, 1.0, true);
    z_l.zero_grad();
    z_q.zero_grad();
    LossReport r = stage1p_loss(logits, logits, tgt, tgt, z_l, z_q, w);
    backward(r.total);
    bool any = false;
    for (double g : z_l.grad()) any |= g != 0.0;
    CHECK(any);
    for (double g : z_q.grad()) CHECK(g == 0.0);
}

TEST_CASE("temporal loss is zero for a static clip under zero flow") {
    Tensor frame = rand01({1, 8, 8, 3}, 16);
    Tensor x = concat0({frame, frame, frame, frame});
    FlowFieldSequence flows = FlowFieldSequence::zeros(3, 8, 8);
    CHECK(temporal_loss(x, flows).item() == 0.0);
}

TEST_CASE("temporal loss is zero when restoration matches exact rigid motion") {
    MotionSpec spec;
    spec.kind = MotionKind::translate;
    spec.vx = 1.0;
    auto [clip, flows] = make_toy_clip(spec, 4, 16, 16, 17);
    Tensor x = Tensor::from_data({clip.T, clip.H, clip.W, clip.C}, clip.data);
    CHECK(temporal_loss(x, flows).item() <= 1e-9);
}

TEST_CASE("temporal loss matches a hand-computed constant-offset case") {
    // frames: f0 = c, f1 = c + delta, f2 = c; zero flow, full masks
    Tensor base = rand01({1, 8, 8, 3}, 18);
    Tensor mid = add_scalar(base, 0.125);
    Tensor x = concat0({base, mid, base});
    FlowFieldSequence flows = FlowFieldSequence::zeros(2, 8, 8);
    // middle frame compared against both neighbors: 2 * mean|delta|
    CHECK(temporal_loss(x, flows).item() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("temporal loss validates its geometry") {
    Tensor two = rand01({2, 8, 8, 3}, 19);
    FlowFieldSequence f1 = FlowFieldSequence::zeros(1, 8, 8);
    CHECK_THROWS_AS(temporal_loss(two, f1), ShapeError);
    Tensor three = rand01({3, 8, 8, 3}, 20);
    FlowFieldSequence bad = FlowFieldSequence::zeros(2, 4, 8);
    CHECK_THROWS_AS(temporal_loss(three, bad), ShapeError);
}

TEST_CASE("stage-2 loss components and weighted total") {
    FeatureExtractor fe;
    LossWeights w;
    // static clip: a perfect restoration also has zero temporal penalty
    Tensor frame = rand01({1, 8, 8, 3}, 21);
    Tensor x = concat0({frame, frame, frame});
    Tensor z = randn({3, 2, 2, 4}, 22);
    FlowFieldSequence flows = FlowFieldSequence::zeros(2, 8, 8);
    LossReport r0 = stage2_loss(z, z, x, x, flows, fe, w);
    CHECK(r0.total.item() == 0.0);
    // constant latent offset of 0.1 -> rec_latent = 0.01 exactly
    Tensor z_off = add_scalar(z, 0.1);
    LossReport r1 = stage2_loss(z_off, z, x, x, flows, fe, w);
    CHECK(r1.value("rec_latent") == doctest::Approx(0.01).epsilon(1e-12));
    // generic values: total is the documented weighted sum
    Tensor x2 = rand01({3, 8, 8, 3}, 23);
    LossReport r2 = stage2_loss(z_off, z, x2, x, flows, fe, w);
    double want = r2.value("rec_latent") + r2.value("rec_pixel") + r2.value("per") +
                  w.lambda_temp * r2.value("temp");
    CHECK(r2.total.item() == doctest::Approx(want).epsilon(1e-12));
}
