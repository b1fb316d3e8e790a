#include "videodata/video.hpp"

#include "core/rng.hpp"
#include "core/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace dvface {

namespace fs = std::filesystem;
using nlohmann::json;

VideoClip VideoClip::zeros(int T, int H, int W, int C) {
    VideoClip v;
    v.T = T;
    v.H = H;
    v.W = W;
    v.C = C;
    v.data.assign(static_cast<size_t>(int64_t(T) * H * W * C), 0.0);
    return v;
}

void VideoClip::validate() const {
    if (T < 2) throw ConfigError("clip must have at least 2 frames");
    if (static_cast<int64_t>(data.size()) != int64_t(T) * H * W * C)
        throw ConfigError("clip data size does not match T x H x W x C");
    for (double v : data)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("clip values must lie in [0,1]");
}

void DegradeConfig::validate(int H, int W) const {
    if (blur_sigma_lo > blur_sigma_hi || blur_sigma_lo < 0)
        throw ConfigError("invalid blur sigma range");
    if (noise_sigma_lo > noise_sigma_hi || noise_sigma_lo < 0)
        throw ConfigError("invalid noise sigma range");
    if (quality_lo > quality_hi || quality_lo < 1 || quality_hi > 100)
        throw ConfigError("invalid quality range");
    if (downscale_factors.empty()) throw ConfigError("empty downscale factor set");
    for (int f : downscale_factors)
        if (f < 1 || H % f != 0 || W % f != 0)
            throw ConfigError("downscale factor " + std::to_string(f) + " must divide H and W");
}

// ---- toy scene ----

namespace {

struct Scene {
    int H, W;
    double bg_fx[3], bg_fy[3], bg_phase[3];

    explicit Scene(int H_, int W_, uint64_t seed) : H(H_), W(W_) {
        CounterRng rng = make_stream(seed, "scene-bg");
        for (int c = 0; c < 3; ++c) {
            bg_fx[c] = rng.next_uniform(0.04, 0.12);
            bg_fy[c] = rng.next_uniform(0.04, 0.12);
            bg_phase[c] = rng.next_uniform(0.0, 6.283185307179586);
        }
    }

    // Smooth "face-like" composite over a textured background, evaluated in
    // continuous scene coordinates so rigid motion has an exact analytic flow.
    void eval(double qx, double qy, double rgb[3]) const {
        for (int c = 0; c < 3; ++c)
            rgb[c] = 0.35 + 0.15 * std::sin(6.283185307179586 *
                                                (qx * bg_fx[c] + qy * bg_fy[c]) +
                                            bg_phase[c]);
        double cx = 0.5 * (W - 1), cy = 0.5 * (H - 1);
        double ax = 0.30 * W, ay = 0.38 * H;
        double e = ((qx - cx) / ax) * ((qx - cx) / ax) + ((qy - cy) / ay) * ((qy - cy) / ay);
        double head = 1.0 / (1.0 + std::exp((e - 1.0) * 12.0));  // soft ellipse edge
        double skin[3] = {0.85, 0.70, 0.58};
        for (int c = 0; c < 3; ++c) rgb[c] = rgb[c] * (1.0 - head) + skin[c] * head;
        // eyes: two dark gaussian dots
        double ex[2] = {cx - 0.12 * W, cx + 0.12 * W};
        double ey = cy - 0.10 * H;
        double er = 0.05 * std::min(H, W);
        for (int i = 0; i < 2; ++i) {
            double d2 = (qx - ex[i]) * (qx - ex[i]) + (qy - ey) * (qy - ey);
            double dot = std::exp(-d2 / (2.0 * er * er));
            for (int c = 0; c < 3; ++c) rgb[c] *= 1.0 - 0.85 * dot;
        }
        // mouth: dark arc below center
        double mr = 0.14 * std::min(H, W);
        double md = std::sqrt((qx - cx) * (qx - cx) + (qy - (cy + 0.08 * H)) * (qy - (cy + 0.08 * H)));
        double band = std::exp(-(md - mr) * (md - mr) / (2.0 * (0.02 * std::min(H, W) + 0.5)));
        if (qy > cy + 0.08 * H)
            for (int c = 0; c < 3; ++c) rgb[c] *= 1.0 - 0.6 * band;
        for (int c = 0; c < 3; ++c) rgb[c] = std::min(std::max(rgb[c], 0.0), 1.0);
    }
};

// Per-frame pixel-to-scene transform for rigid motion about the center.
struct RigidXform {
    double cx, cy;
    double cosw, sinw;  // rotation iw
    double s;           // scale
    double tx, ty;      // translation iv

    // forward: scene coords of pixel p in frame i
    void apply(double px, double py, double& qx, double& qy) const {
        double rx = px - cx, ry = py - cy;
        double xx = cosw * rx - sinw * ry;
        double yy = sinw * rx + cosw * ry;
        qx = s * xx + cx + tx;
        qy = s * yy + cy + ty;
    }
    // inverse: pixel position in frame i whose scene coords are q
    void invert(double qx, double qy, double& px, double& py) const {
        double rx = (qx - cx - tx) / s;
        double ry = (qy - cy - ty) / s;
        px = cosw * rx + sinw * ry + cx;
        py = -sinw * rx + cosw * ry + cy;
    }
};

RigidXform frame_xform(const MotionSpec& spec, int i, int H, int W) {
    RigidXform x;
    x.cx = 0.5 * (W - 1);
    x.cy = 0.5 * (H - 1);
    double w = 0.0, s = 1.0, tx = 0.0, ty = 0.0;
    switch (spec.kind) {
        case MotionKind::translate:
            tx = spec.vx * i;
            ty = spec.vy * i;
            break;
        case MotionKind::rotate:
            w = spec.omega * i;
            break;
        case MotionKind::scale:
            s = std::pow(1.0 + spec.scale_rate, i);
            break;
        case MotionKind::composite:
            w = spec.omega * i;
            s = std::pow(1.0 + spec.scale_rate, i);
            tx = spec.vx * i;
            ty = spec.vy * i;
            break;
    }
    x.cosw = std::cos(w);
    x.sinw = std::sin(w);
    x.s = s;
    x.tx = tx;
    x.ty = ty;
    return x;
}

}  // namespace

std::pair<VideoClip, FlowFieldSequence> make_toy_clip(const MotionSpec& spec, int T, int H, int W,
                                                      uint64_t seed) {
    if (T < 3) throw ConfigError("make_toy_clip: T must be >= 3");
    if (H < 16 || W < 16) throw ConfigError("make_toy_clip: H, W must be >= 16");

    Scene scene(H, W, seed ^ spec.background_seed);
    VideoClip clip = VideoClip::zeros(T, H, W);
    std::vector<RigidXform> xf;
    for (int i = 0; i < T; ++i) xf.push_back(frame_xform(spec, i, H, W));

    for (int i = 0; i < T; ++i)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double qx, qy, rgb[3];
                xf[static_cast<size_t>(i)].apply(x, y, qx, qy);
                scene.eval(qx, qy, rgb);
                for (int c = 0; c < 3; ++c) clip.at(i, y, x, c) = rgb[c];
            }

    // flow: fw_i(p) = T_i^{-1}(T_{i+1}(p)) - p, bw_i(p) = T_{i+1}^{-1}(T_i(p)) - p
    FlowFieldSequence flow = FlowFieldSequence::zeros(T - 1, H, W);
    double max_disp = 0.0;
    for (int i = 0; i + 1 < T; ++i) {
        double* fw = flow.fw(i);
        double* bw = flow.bw(i);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                int64_t pi = int64_t(y) * W + x;
                double qx, qy, px, py;
                xf[static_cast<size_t>(i + 1)].apply(x, y, qx, qy);
                xf[static_cast<size_t>(i)].invert(qx, qy, px, py);
                fw[pi * 2 + 0] = px - x;
                fw[pi * 2 + 1] = py - y;
                max_disp = std::max(max_disp, std::hypot(px - x, py - y));
                xf[static_cast<size_t>(i)].apply(x, y, qx, qy);
                xf[static_cast<size_t>(i + 1)].invert(qx, qy, px, py);
                bw[pi * 2 + 0] = px - x;
                bw[pi * 2 + 1] = py - y;
            }
    }
    if (max_disp > H / 4.0)
        throw ConfigError("motion spec displacement exceeds H/4 per frame");
    return {std::move(clip), std::move(flow)};
}

// ---- degradation ----

namespace {

void gaussian_blur(VideoClip& clip, double sigma) {
    if (sigma <= 0.0) return;
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * radius + 1));
    double s = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[static_cast<size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        s += k[static_cast<size_t>(i + radius)];
    }
    for (auto& v : k) v /= s;
    int H = clip.H, W = clip.W, C = clip.C;
    std::vector<double> tmp(static_cast<size_t>(int64_t(H) * W * C));
    for (int t = 0; t < clip.T; ++t) {
        double* f = clip.frame(t);
        // horizontal
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i) {
                        int xx = std::min(std::max(x + i, 0), W - 1);
                        acc += k[static_cast<size_t>(i + radius)] * f[(int64_t(y) * W + xx) * C + c];
                    }
                    tmp[static_cast<size_t>((int64_t(y) * W + x) * C + c)] = acc;
                }
        // vertical
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i) {
                        int yy = std::min(std::max(y + i, 0), H - 1);
                        acc += k[static_cast<size_t>(i + radius)] *
                               tmp[static_cast<size_t>((int64_t(yy) * W + x) * C + c)];
                    }
                    f[(int64_t(y) * W + x) * C + c] = acc;
                }
    }
}

VideoClip downscale_area(const VideoClip& clip, int factor) {
    if (factor == 1) return clip;
    VideoClip out = VideoClip::zeros(clip.T, clip.H / factor, clip.W / factor, clip.C);
    double inv = 1.0 / (factor * factor);
    for (int t = 0; t < clip.T; ++t)
        for (int y = 0; y < out.H; ++y)
            for (int x = 0; x < out.W; ++x)
                for (int c = 0; c < clip.C; ++c) {
                    double acc = 0.0;
                    for (int dy = 0; dy < factor; ++dy)
                        for (int dx = 0; dx < factor; ++dx)
                            acc += clip.at(t, y * factor + dy, x * factor + dx, c);
                    out.at(t, y, x, c) = acc * inv;
                }
    out.name = clip.name;
    return out;
}

VideoClip upscale_bilinear(const VideoClip& clip, int H, int W) {
    if (clip.H == H && clip.W == W) return clip;
    VideoClip out = VideoClip::zeros(clip.T, H, W, clip.C);
    double sy = static_cast<double>(clip.H) / H;
    double sx = static_cast<double>(clip.W) / W;
    for (int t = 0; t < clip.T; ++t)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double cy = (y + 0.5) * sy - 0.5;
                double cx = (x + 0.5) * sx - 0.5;
                cy = std::min(std::max(cy, 0.0), double(clip.H - 1));
                cx = std::min(std::max(cx, 0.0), double(clip.W - 1));
                int y0 = static_cast<int>(std::floor(cy));
                int x0 = static_cast<int>(std::floor(cx));
                int y1 = std::min(y0 + 1, clip.H - 1);
                int x1 = std::min(x0 + 1, clip.W - 1);
                double fy = cy - y0, fx = cx - x0;
                for (int c = 0; c < clip.C; ++c)
                    out.at(t, y, x, c) =
                        (1 - fy) * ((1 - fx) * clip.at(t, y0, x0, c) + fx * clip.at(t, y0, x1, c)) +
                        fy * ((1 - fx) * clip.at(t, y1, x0, c) + fx * clip.at(t, y1, x1, c));
            }
    out.name = clip.name;
    return out;
}

// Standard luminance quantization table, used for all channels.
const int kQuantTable[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr double kPi = 3.14159265358979323846;

// N-point DCT-II / inverse (orthonormal); N <= 8 at tile edges.
void dct2(const double* in, double* out, int N) {
    for (int k = 0; k < N; ++k) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n)
            acc += in[n] * std::cos(kPi / N * (n + 0.5) * k);
        out[k] = acc * std::sqrt(2.0 / N) * (k == 0 ? std::sqrt(0.5) : 1.0);
    }
}

void idct2(const double* in, double* out, int N) {
    for (int n = 0; n < N; ++n) {
        double acc = 0.0;
        for (int k = 0; k < N; ++k)
            acc += in[k] * std::sqrt(2.0 / N) * (k == 0 ? std::sqrt(0.5) : 1.0) *
                   std::cos(kPi / N * (n + 0.5) * k);
        out[n] = acc;
    }
}

// Block-DCT quantization surrogate for JPEG-like compression. quality = 100
// is a strict no-op.
void compress_surrogate(VideoClip& clip, int quality) {
    if (quality >= 100) return;
    double qs = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    int H = clip.H, W = clip.W, C = clip.C;
    std::vector<double> tile(64), tmp(64);
    for (int t = 0; t < clip.T; ++t) {
        double* f = clip.frame(t);
        for (int c = 0; c < C; ++c)
            for (int by = 0; by < H; by += 8)
                for (int bx = 0; bx < W; bx += 8) {
                    int bh = std::min(8, H - by), bw = std::min(8, W - bx);
                    for (int y = 0; y < bh; ++y)
                        for (int x = 0; x < bw; ++x)
                            tile[static_cast<size_t>(y * bw + x)] =
                                f[(int64_t(by + y) * W + bx + x) * C + c] * 255.0 - 128.0;
                    // separable 2D DCT
                    for (int y = 0; y < bh; ++y) dct2(&tile[static_cast<size_t>(y * bw)], &tmp[static_cast<size_t>(y * bw)], bw);
                    std::vector<double> colin(static_cast<size_t>(bh)), colout(static_cast<size_t>(bh));
                    for (int x = 0; x < bw; ++x) {
                        for (int y = 0; y < bh; ++y) colin[static_cast<size_t>(y)] = tmp[static_cast<size_t>(y * bw + x)];
                        dct2(colin.data(), colout.data(), bh);
                        for (int y = 0; y < bh; ++y) tmp[static_cast<size_t>(y * bw + x)] = colout[static_cast<size_t>(y)];
                    }
                    // quantize
                    for (int y = 0; y < bh; ++y)
                        for (int x = 0; x < bw; ++x) {
                            double q = std::max(1.0, std::floor((kQuantTable[y * 8 + x] * qs + 50.0) / 100.0));
                            double& v = tmp[static_cast<size_t>(y * bw + x)];
                            v = std::round(v / q) * q;
                        }
                    // inverse
                    for (int x = 0; x < bw; ++x) {
                        for (int y = 0; y < bh; ++y) colin[static_cast<size_t>(y)] = tmp[static_cast<size_t>(y * bw + x)];
                        idct2(colin.data(), colout.data(), bh);
                        for (int y = 0; y < bh; ++y) tmp[static_cast<size_t>(y * bw + x)] = colout[static_cast<size_t>(y)];
                    }
                    for (int y = 0; y < bh; ++y) idct2(&tmp[static_cast<size_t>(y * bw)], &tile[static_cast<size_t>(y * bw)], bw);
                    for (int y = 0; y < bh; ++y)
                        for (int x = 0; x < bw; ++x)
                            f[(int64_t(by + y) * W + bx + x) * C + c] =
                                std::min(std::max((tile[static_cast<size_t>(y * bw + x)] + 128.0) / 255.0, 0.0), 1.0);
                }
    }
}

}  // namespace

VideoClip degrade(const VideoClip& clip, const DegradeConfig& cfg, DegradeLog* log) {
    clip.validate();
    cfg.validate(clip.H, clip.W);
    uint64_t key = CounterRng::hash_key(cfg.seed);
    key = CounterRng::combine(key, "degrade");
    key = CounterRng::combine(key, clip.name);
    CounterRng rng(key);

    DegradeLog lg;
    lg.blur_sigma = rng.next_uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi);
    lg.noise_sigma = rng.next_uniform(cfg.noise_sigma_lo, cfg.noise_sigma_hi);
    lg.downscale_factor = cfg.downscale_factors[static_cast<size_t>(
        rng.next_int(0, static_cast<int64_t>(cfg.downscale_factors.size()) - 1))];
    lg.quality = static_cast<int>(rng.next_int(cfg.quality_lo, cfg.quality_hi));

    VideoClip out = clip;
    gaussian_blur(out, lg.blur_sigma);
    out = downscale_area(out, lg.downscale_factor);
    if (lg.noise_sigma > 0.0) {
        CounterRng nrng(CounterRng::combine(key, "noise"));
        for (auto& v : out.data) v += lg.noise_sigma * nrng.next_gaussian();
    }
    compress_surrogate(out, lg.quality);
    out = upscale_bilinear(out, clip.H, clip.W);
    for (auto& v : out.data) v = std::min(std::max(v, 0.0), 1.0);
    out.name = clip.name;
    if (log) *log = lg;
    return out;
}

Dataset generate_toy_dataset(const DatasetParams& p) {
    Dataset ds;
    ds.seed = p.seed;
    for (int i = 0; i < p.n_clips; ++i) {
        CounterRng rng = make_stream(p.seed, "motion", static_cast<uint64_t>(i));
        MotionSpec spec;
        switch (i % 4) {
            case 0:
                spec.kind = MotionKind::translate;
                spec.vx = static_cast<double>(rng.next_int(-1, 1));
                spec.vy = static_cast<double>(rng.next_int(-1, 1));
                break;
            case 1:
                spec.kind = MotionKind::rotate;
                spec.omega = rng.next_uniform(-0.05, 0.05);
                break;
            case 2:
                spec.kind = MotionKind::scale;
                spec.scale_rate = rng.next_uniform(-0.02, 0.02);
                break;
            default:
                spec.kind = MotionKind::composite;
                spec.vx = rng.next_uniform(-0.8, 0.8);
                spec.vy = rng.next_uniform(-0.8, 0.8);
                spec.omega = rng.next_uniform(-0.03, 0.03);
                break;
        }
        spec.background_seed = static_cast<uint64_t>(i) * 1000003ULL;
        auto [clip, flow] = make_toy_clip(spec, p.T, p.H, p.W, p.seed + static_cast<uint64_t>(i));
        clip.name = "clip" + std::to_string(i);
        DegradeLog log;
        VideoClip lq = degrade(clip, p.degrade, &log);
        ds.hq.push_back(std::move(clip));
        ds.lq.push_back(std::move(lq));
        ds.flows.push_back(std::move(flow));
        ds.logs.push_back(log);
    }
    return ds;
}

// ---- persistence ----

namespace {

void save_clip_file(const std::string& path, const VideoClip& c) {
    save_array_file(path, {c.T, c.H, c.W, c.C}, c.data);
}

VideoClip load_clip_file(const std::string& path) {
    Shape s;
    std::vector<double> data;
    load_array_file(path, s, data);
    if (s.size() != 4) throw IoError("clip file has wrong rank: " + path);
    VideoClip c;
    c.T = s[0];
    c.H = s[1];
    c.W = s[2];
    c.C = s[3];
    c.data = std::move(data);
    return c;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "dvface-dataset-v1";
    manifest["seed"] = ds.seed;
    json clips = json::array();
    char hex[32];
    for (size_t i = 0; i < ds.size(); ++i) {
        const auto& hq = ds.hq[i];
        std::string base = hq.name.empty() ? ("clip" + std::to_string(i)) : hq.name;
        std::string hq_f = base + "_hq.dvar", lq_f = base + "_lq.dvar";
        std::string fw_f = base + "_fw.dvar", bw_f = base + "_bw.dvar";
        save_clip_file(dir + "/" + hq_f, hq);
        save_clip_file(dir + "/" + lq_f, ds.lq[i]);
        const auto& fl = ds.flows[i];
        save_array_file(dir + "/" + fw_f, {fl.pairs, fl.H, fl.W, 2}, fl.forward);
        save_array_file(dir + "/" + bw_f, {fl.pairs, fl.H, fl.W, 2}, fl.backward);
        json entry;
        entry["name"] = base;
        entry["shape"] = {hq.T, hq.H, hq.W, hq.C};
        entry["files"] = {hq_f, lq_f, fw_f, bw_f};
        json sums = json::array();
        for (const std::string& f : {hq_f, lq_f, fw_f, bw_f}) {
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(dir + "/" + f)));
            sums.push_back(std::string(hex));
        }
        entry["checksums"] = sums;
        entry["degrade"] = {{"blur_sigma", ds.logs[i].blur_sigma},
                            {"noise_sigma", ds.logs[i].noise_sigma},
                            {"downscale_factor", ds.logs[i].downscale_factor},
                            {"quality", ds.logs[i].quality}};
        clips.push_back(entry);
    }
    manifest["clips"] = clips;
    std::ofstream os(dir + "/manifest.json");
    if (!os) throw IoError("cannot write manifest in " + dir);
    os << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw IoError("dataset manifest not found: " + dir + "/manifest.json");
    json manifest = json::parse(is);
    if (manifest.value("format", "") != "dvface-dataset-v1")
        throw IoError("unrecognized dataset format in " + dir);
    Dataset ds;
    ds.seed = manifest.value("seed", 0ULL);
    char hex[32];
    for (const auto& entry : manifest["clips"]) {
        auto files = entry["files"].get<std::vector<std::string>>();
        auto sums = entry["checksums"].get<std::vector<std::string>>();
        for (size_t i = 0; i < files.size(); ++i) {
            std::string path = dir + "/" + files[i];
            if (!fs::exists(path)) throw IoError("dataset file missing: " + path);
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(path)));
            if (sums[i] != hex)
                throw IoError("checksum mismatch for " + path + " (dataset corrupt)");
        }
        VideoClip hq = load_clip_file(dir + "/" + files[0]);
        VideoClip lq = load_clip_file(dir + "/" + files[1]);
        hq.name = lq.name = entry["name"].get<std::string>();
        Shape fs_, bs_;
        std::vector<double> fwd, bwd;
        load_array_file(dir + "/" + files[2], fs_, fwd);
        load_array_file(dir + "/" + files[3], bs_, bwd);
        FlowFieldSequence fl;
        fl.pairs = fs_[0];
        fl.H = fs_[1];
        fl.W = fs_[2];
        fl.forward = std::move(fwd);
        fl.backward = std::move(bwd);
        DegradeLog log;
        log.blur_sigma = entry["degrade"]["blur_sigma"].get<double>();
        log.noise_sigma = entry["degrade"]["noise_sigma"].get<double>();
        log.downscale_factor = entry["degrade"]["downscale_factor"].get<int>();
        log.quality = entry["degrade"]["quality"].get<int>();
        ds.hq.push_back(std::move(hq));
        ds.lq.push_back(std::move(lq));
        ds.flows.push_back(std::move(fl));
        ds.logs.push_back(log);
    }
    return ds;
}

}  // namespace dvface
