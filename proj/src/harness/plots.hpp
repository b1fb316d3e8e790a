#pragma once

#include "videodata/video.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dvface {

// Minimal RGB8 raster + PNG writer (stored deflate blocks; no external
// compressor needed).
struct Image {
    int w = 0, h = 0;
    std::vector<uint8_t> rgb;  // w*h*3

    Image(int w_, int h_) : w(w_), h(h_), rgb(size_t(w_) * h_ * 3, 255) {}
    void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
    void line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
    void fill_rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
};

void write_png(const std::string& path, const Image& img);

// Log-ish loss curve: one polyline per named series over iterations.
void plot_loss_curves(const std::string& path,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series);

// One bar per clip per metric value.
void plot_metric_bars(const std::string& path, const std::vector<double>& values, double lo,
                      double hi);

// Temporal slice strip: the clip's center row, one band per frame stacked
// vertically (a fixed-line-over-time visualization).
void plot_temporal_strip(const std::string& path, const VideoClip& clip);

}  // namespace dvface
