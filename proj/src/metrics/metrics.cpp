#include "metrics/metrics.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dvface {

namespace {

void check_shapes(const VideoClip& a, const VideoClip& b) {
    if (a.T != b.T || a.H != b.H || a.W != b.W || a.C != b.C)
        throw std::invalid_argument("metric: clip shapes differ");
}

}  // namespace

double psnr(const VideoClip& a, const VideoClip& b) {
    check_shapes(a, b);
    const double cap = 100.0;
    double acc = 0.0;
    for (int t = 0; t < a.T; ++t) {
        const double* fa = a.frame(t);
        const double* fb = b.frame(t);
        double mse = 0.0;
        for (int64_t i = 0; i < a.frame_size(); ++i) {
            double d = fa[i] - fb[i];
            mse += d * d;
        }
        mse /= double(a.frame_size());
        double db = mse <= 0.0 ? cap : std::min(cap, 10.0 * std::log10(1.0 / mse));
        acc += db;
    }
    return acc / a.T;
}

double ssim(const VideoClip& a, const VideoClip& b) {
    check_shapes(a, b);
    const int win = 11, half = 5;
    const double sigma = 1.5;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double g[win];
    double gsum = 0.0;
    for (int i = 0; i < win; ++i) {
        double d = i - half;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        gsum += g[i];
    }
    for (int i = 0; i < win; ++i) g[i] /= gsum;

    const int H = a.H, W = a.W, C = a.C;
    // clamp window taps at the border (window renormalized implicitly by
    // using replicated coordinates keeps weights summing to 1)
    auto px = [&](const double* f, int y, int x, int c) {
        y = std::min(std::max(y, 0), H - 1);
        x = std::min(std::max(x, 0), W - 1);
        return f[(int64_t(y) * W + x) * C + c];
    };

    double total = 0.0;
    int64_t count = 0;
    for (int t = 0; t < a.T; ++t) {
        const double* fa = a.frame(t);
        const double* fb = b.frame(t);
        for (int c = 0; c < C; ++c) {
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                    for (int dy = -half; dy <= half; ++dy) {
                        for (int dx = -half; dx <= half; ++dx) {
                            double wgt = g[dy + half] * g[dx + half];
                            double va = px(fa, y + dy, x + dx, c);
                            double vb = px(fb, y + dy, x + dx, c);
                            mu_a += wgt * va;
                            mu_b += wgt * vb;
                            aa += wgt * va * va;
                            bb += wgt * vb * vb;
                            ab += wgt * va * vb;
                        }
                    }
                    double var_a = aa - mu_a * mu_a;
                    double var_b = bb - mu_b * mu_b;
                    double cov = ab - mu_a * mu_b;
                    double s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                    total += s;
                    ++count;
                }
            }
        }
    }
    return total / double(count);
}

double warping_error(const VideoClip& clip, const FlowFieldSequence& flows) {
    if (clip.T < 2) throw std::invalid_argument("warping_error: needs T >= 2");
    if (flows.pairs != clip.T - 1 || flows.H != clip.H || flows.W != clip.W)
        throw std::invalid_argument("warping_error: flow/clip geometry mismatch");
    const int H = clip.H, W = clip.W, C = clip.C;
    std::vector<double> warped(size_t(H) * W * C), mask(size_t(H) * W);
    double total = 0.0;
    for (int i = 0; i < clip.T - 1; ++i) {
        warp_frame(clip.frame(i), H, W, C, flows.fw(i), warped.data(), mask.data());
        const double* next = clip.frame(i + 1);
        double err = 0.0;
        double count = 0.0;
        for (int64_t p = 0; p < int64_t(H) * W; ++p) {
            if (mask[size_t(p)] == 0.0) continue;
            for (int c = 0; c < C; ++c) {
                double d = warped[size_t(p * C + c)] - next[p * C + c];
                err += d * d;
            }
            count += C;
        }
        total += count > 0 ? err / count : 0.0;
    }
    return total / (clip.T - 1) * 1e3;
}

void EvalReport::finalize() {
    aggregate = ClipMetrics{};
    aggregate.name = "mean";
    if (clips.empty()) return;
    for (const auto& c : clips) {
        aggregate.psnr += c.psnr;
        aggregate.ssim += c.ssim;
        aggregate.ewarp += c.ewarp;
    }
    aggregate.psnr /= clips.size();
    aggregate.ssim /= clips.size();
    aggregate.ewarp /= clips.size();
}

namespace {

nlohmann::json to_json(const ClipMetrics& c) {
    return {{"name", c.name}, {"psnr", c.psnr}, {"ssim", c.ssim}, {"ewarp", c.ewarp}};
}

ClipMetrics from_json(const nlohmann::json& j) {
    ClipMetrics c;
    c.name = j.at("name").get<std::string>();
    c.psnr = j.at("psnr").get<double>();
    c.ssim = j.at("ssim").get<double>();
    c.ewarp = j.at("ewarp").get<double>();
    return c;
}

}  // namespace

void EvalReport::write_jsonl(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    for (const auto& c : clips) os << to_json(c).dump() << "\n";
    os << to_json(aggregate).dump() << "\n";
}

void EvalReport::write_summary(const std::string& path) const {
    nlohmann::json j;
    j["aggregate"] = to_json(aggregate);
    j["clips"] = nlohmann::json::array();
    for (const auto& c : clips) j["clips"].push_back(to_json(c));
    j["meta"] = meta;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << j.dump(2) << "\n";
}

EvalReport EvalReport::read_summary(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    is >> j;
    EvalReport r;
    r.aggregate = from_json(j.at("aggregate"));
    for (const auto& c : j.at("clips")) r.clips.push_back(from_json(c));
    if (j.contains("meta"))
        for (auto& [k, v] : j.at("meta").items()) r.meta[k] = v.get<std::string>();
    return r;
}

}  // namespace dvface
