#include "eclipse/image.hpp"

#include <cmath>

namespace eclipse {

double quantile(std::vector<double>& values, double q) {
    if (values.empty()) raise(ErrorKind::invalid_argument, "quantile of empty range");
    size_t n = values.size();
    double pos = q * double(n - 1);
    size_t i0 = size_t(pos);
    double frac = pos - double(i0);
    std::nth_element(values.begin(), values.begin() + i0, values.end());
    double v0 = values[i0];
    if (frac <= 0.0 || i0 + 1 >= n) return v0;
    // the (i0+1)-th order statistic is the min of the upper partition
    double v1 = *std::min_element(values.begin() + i0 + 1, values.end());
    return v0 + (v1 - v0) * frac;
}

namespace {

// Exact order-statistic percentiles from a value histogram.
double quantile_from_hist(const std::vector<uint64_t>& hist, uint64_t n, double q) {
    double pos = q * double(n - 1);
    uint64_t i0 = uint64_t(pos);
    double frac = pos - double(i0);

    auto value_at_rank = [&hist](uint64_t rank) {
        uint64_t seen = 0;
        for (size_t v = 0; v < hist.size(); ++v) {
            seen += hist[v];
            if (seen > rank) return double(v);
        }
        return double(hist.size() - 1);
    };
    double v0 = value_at_rank(i0);
    if (frac <= 0.0) return v0;
    double v1 = value_at_rank(i0 + 1);
    return v0 + (v1 - v0) * frac;
}

}  // namespace

std::pair<double, double> percentile_pair(const ImageF& img, double lo, double hi) {
    if (img.px.empty()) raise(ErrorKind::invalid_argument, "percentiles of empty image");

    // Fast path: integral values in [0, 1023] (ambient-subtracted 8-bit data).
    constexpr int kMaxBin = 1024;
    bool integral = true;
    for (double v : img.px) {
        if (v < 0.0 || v >= kMaxBin || v != std::floor(v)) {
            integral = false;
            break;
        }
    }
    if (integral) {
        std::vector<uint64_t> hist(kMaxBin, 0);
        for (double v : img.px) ++hist[size_t(v)];
        uint64_t n = img.px.size();
        return {quantile_from_hist(hist, n, lo), quantile_from_hist(hist, n, hi)};
    }

    std::vector<double> a(img.px);
    double plo = quantile(a, lo);
    a.assign(img.px.begin(), img.px.end());
    double phi = quantile(a, hi);
    return {plo, phi};
}

}  // namespace eclipse
