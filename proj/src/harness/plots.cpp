#include "harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dvface {

void Image::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    size_t i = (size_t(y) * w + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

void Image::line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void Image::fill_rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    for (int y = std::max(0, y0); y <= std::min(h - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(w - 1, x1); ++x) set(x, y, r, g, b);
}

namespace {

uint32_t crc32_table(uint32_t i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
    return c;
}

uint32_t crc32(const uint8_t* data, size_t n, uint32_t crc = 0xffffffffu) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t i = 0; i < 256; ++i) table[i] = crc32_table(i);
        init = true;
    }
    for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return crc;
}

void put_u32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

void write_chunk(std::ofstream& os, const char type[4], const std::vector<uint8_t>& data) {
    std::vector<uint8_t> hdr;
    put_u32(hdr, uint32_t(data.size()));
    os.write(reinterpret_cast<const char*>(hdr.data()), 4);
    std::vector<uint8_t> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    os.write(reinterpret_cast<const char*>(body.data()), std::streamsize(body.size()));
    uint32_t crc = crc32(body.data(), body.size()) ^ 0xffffffffu;
    std::vector<uint8_t> tail;
    put_u32(tail, crc);
    os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

// zlib stream made of stored (uncompressed) deflate blocks
std::vector<uint8_t> zlib_store(const std::vector<uint8_t>& raw) {
    std::vector<uint8_t> out;
    out.push_back(0x78);
    out.push_back(0x01);
    size_t pos = 0;
    while (pos < raw.size() || raw.empty()) {
        size_t n = std::min<size_t>(raw.size() - pos, 65535);
        bool last = pos + n == raw.size();
        out.push_back(last ? 1 : 0);
        out.push_back(uint8_t(n & 0xff));
        out.push_back(uint8_t(n >> 8));
        out.push_back(uint8_t(~n & 0xff));
        out.push_back(uint8_t((~n >> 8) & 0xff));
        out.insert(out.end(), raw.begin() + std::ptrdiff_t(pos), raw.begin() + std::ptrdiff_t(pos + n));
        pos += n;
        if (last) break;
    }
    // adler32
    uint32_t a = 1, b = 0;
    for (uint8_t byte : raw) {
        a = (a + byte) % 65521;
        b = (b + a) % 65521;
    }
    put_u32(out, (b << 16) | a);
    return out;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<uint8_t> ihdr;
    put_u32(ihdr, uint32_t(img.w));
    put_u32(ihdr, uint32_t(img.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(os, "IHDR", ihdr);

    std::vector<uint8_t> raw;
    raw.reserve(size_t(img.h) * (size_t(img.w) * 3 + 1));
    for (int y = 0; y < img.h; ++y) {
        raw.push_back(0);  // filter: none
        const uint8_t* row = img.rgb.data() + size_t(y) * img.w * 3;
        raw.insert(raw.end(), row, row + size_t(img.w) * 3);
    }
    write_chunk(os, "IDAT", zlib_store(raw));
    write_chunk(os, "IEND", {});
}

void plot_loss_curves(const std::string& path,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const int W = 640, H = 360, pad = 24;
    Image img(W, H);
    img.fill_rect(pad, pad, W - pad, H - pad, 245, 245, 245);
    double lo = 1e300, hi = -1e300;
    size_t n = 0;
    for (const auto& [name, vals] : series) {
        for (double v : vals) {
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        n = std::max(n, vals.size());
    }
    if (n < 2 || hi <= lo) hi = lo + 1;
    const uint8_t palette[6][3] = {{200, 40, 40}, {40, 90, 200}, {30, 150, 60},
                                   {180, 120, 20}, {130, 40, 170}, {20, 140, 150}};
    int ci = 0;
    for (const auto& [name, vals] : series) {
        const uint8_t* col = palette[ci++ % 6];
        for (size_t i = 1; i < vals.size(); ++i) {
            auto map = [&](size_t idx, double v) {
                int x = pad + int(double(idx) / double(n - 1) * (W - 2 * pad));
                int y = H - pad - int((v - lo) / (hi - lo) * (H - 2 * pad));
                return std::pair<int, int>(x, y);
            };
            auto [x0, y0] = map(i - 1, vals[i - 1]);
            auto [x1, y1] = map(i, vals[i]);
            img.line(x0, y0, x1, y1, col[0], col[1], col[2]);
        }
    }
    img.line(pad, H - pad, W - pad, H - pad, 0, 0, 0);
    img.line(pad, pad, pad, H - pad, 0, 0, 0);
    write_png(path, img);
}

void plot_metric_bars(const std::string& path, const std::vector<double>& values, double lo,
                      double hi) {
    const int W = 480, H = 280, pad = 24;
    Image img(W, H);
    if (hi <= lo) hi = lo + 1;
    int n = int(values.size());
    if (n == 0) {
        write_png(path, img);
        return;
    }
    int bw = std::max(2, (W - 2 * pad) / n - 4);
    for (int i = 0; i < n; ++i) {
        double f = std::clamp((values[size_t(i)] - lo) / (hi - lo), 0.0, 1.0);
        int x0 = pad + i * ((W - 2 * pad) / n) + 2;
        int y1 = H - pad;
        int y0 = y1 - int(f * (H - 2 * pad));
        img.fill_rect(x0, y0, x0 + bw, y1, 60, 110, 200);
    }
    img.line(pad, H - pad, W - pad, H - pad, 0, 0, 0);
    write_png(path, img);
}

void plot_temporal_strip(const std::string& path, const VideoClip& clip) {
    const int band = 8;
    Image img(clip.W, clip.T * band);
    int row = clip.H / 2;
    for (int t = 0; t < clip.T; ++t) {
        for (int x = 0; x < clip.W; ++x) {
            uint8_t r = uint8_t(std::clamp(clip.at(t, row, x, 0), 0.0, 1.0) * 255);
            uint8_t g = uint8_t(std::clamp(clip.at(t, row, x, 1 % clip.C), 0.0, 1.0) * 255);
            uint8_t b = uint8_t(std::clamp(clip.at(t, row, x, 2 % clip.C), 0.0, 1.0) * 255);
            for (int y = 0; y < band; ++y) img.set(x, t * band + y, r, g, b);
        }
    }
    write_png(path, img);
}

}  // namespace dvface
