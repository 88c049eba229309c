#pragma once
// Row-major grayscale images: linear (double) and 8-bit quantized.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "eclipse/error.hpp"
#include "eclipse/geometry.hpp"

namespace eclipse {

struct ImageF {
    int width = 0, height = 0;
    std::vector<double> px;

    ImageF() = default;
    ImageF(int w, int h, double fill = 0.0) : width(w), height(h), px(size_t(w) * h, fill) {}

    double& at(int x, int y) { return px[size_t(y) * width + x]; }
    double at(int x, int y) const { return px[size_t(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    size_t size() const { return px.size(); }

    // Bilinear sample at a continuous pixel coordinate (pixel centers at
    // integer+0.5). Out-of-image reads return `fill`.
    double sample_bilinear(double u, double v, double fill = 0.0) const {
        double fx = u - 0.5, fy = v - 0.5;
        int x0 = (int)std::floor(fx), y0 = (int)std::floor(fy);
        double ax = fx - x0, ay = fy - y0;
        auto tap = [&](int x, int y) { return in_bounds(x, y) ? at(x, y) : fill; };
        double top = tap(x0, y0) * (1 - ax) + tap(x0 + 1, y0) * ax;
        double bot = tap(x0, y0 + 1) * (1 - ax) + tap(x0 + 1, y0 + 1) * ax;
        return top * (1 - ay) + bot * ay;
    }
};

struct ImageU8 {
    int width = 0, height = 0;
    std::vector<uint8_t> px;

    ImageU8() = default;
    ImageU8(int w, int h, uint8_t fill = 0) : width(w), height(h), px(size_t(w) * h, fill) {}

    uint8_t& at(int x, int y) { return px[size_t(y) * width + x]; }
    uint8_t at(int x, int y) const { return px[size_t(y) * width + x]; }
    size_t size() const { return px.size(); }
    bool operator==(const ImageU8& o) const {
        return width == o.width && height == o.height && px == o.px;
    }
};

// Order-statistic quantile with linear interpolation between ranks
// (numpy's default). `values` is consumed by nth_element.
double quantile(std::vector<double>& values, double q);

// (p_lo, p_hi) percentiles of an image. Uses an exact histogram fast path
// when all values are small non-negative integers (the 8-bit pipeline case).
std::pair<double, double> percentile_pair(const ImageF& img, double lo, double hi);

}  // namespace eclipse
