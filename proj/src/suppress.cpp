#include "eclipse/suppress.hpp"

#include <algorithm>
#include <cmath>

namespace eclipse {

namespace {

constexpr double kDegenerateFloor = 1e-6 * 255.0;

void check_composite(const CompositeFrame& composite) {
    if (composite.subframes.size() != kSequenceSteps)
        raise(ErrorKind::invalid_argument, "composite is missing subframes");
    for (int k = 0; k < kSequenceSteps; ++k)
        if (composite.subframes[k].sequence_step != uint8_t(k))
            raise(ErrorKind::invalid_argument, "composite subframes out of order");
}

ImageF clamped_difference(const ImageU8& bk, const ImageU8& a) {
    ImageF d(bk.width, bk.height);
    for (size_t i = 0; i < d.size(); ++i) {
        int diff = int(bk.px[i]) - int(a.px[i]);
        d.px[i] = diff > 0 ? double(diff) : 0.0;
    }
    return d;
}

}  // namespace

std::vector<ImageF> subtract_ambient(const CompositeFrame& composite,
                                     const std::vector<int>& leds) {
    check_composite(composite);
    std::vector<ImageF> out;
    const ImageU8& a = composite.ambient();
    for (int k : leds) {
        if (k < 1 || k > 4) raise(ErrorKind::invalid_argument, "LED index outside 1..4");
        out.push_back(clamped_difference(composite.led(k), a));
    }
    return out;
}

ImageF normalize(const ImageF& image) {
    auto [p1, p99] = percentile_pair(image, 0.01, 0.99);
    double spread = p99 - p1;
    ImageF out(image.width, image.height);
    if (spread < kDegenerateFloor) return out;  // constant image -> all zeros
    double inv = 1.0 / spread;
    for (size_t i = 0; i < image.size(); ++i)
        out.px[i] = std::clamp((image.px[i] - p1) * inv, 0.0, 1.0);
    return out;
}

SuppressedFrame suppress(const CompositeFrame& composite, const std::vector<int>& leds) {
    SuppressedFrame out;
    out.base_timestamp_us = composite.base_timestamp_us;
    out.frame_index = composite.frame_index;
    out.leds = leds;
    for (ImageF& d : subtract_ambient(composite, leds))
        out.channels.push_back(normalize(d));
    return out;
}

ImageF combine_subframes(const CompositeFrame& composite, const std::vector<int>& leds) {
    check_composite(composite);
    if (leds.empty()) raise(ErrorKind::invalid_argument, "empty LED set");
    const ImageU8& a = composite.ambient();
    ImageF mean(a.width, a.height);
    for (int k : leds) {
        if (k < 1 || k > 4) raise(ErrorKind::invalid_argument, "LED index outside 1..4");
        const ImageU8& b = composite.led(k);
        for (size_t i = 0; i < mean.size(); ++i) mean.px[i] += double(b.px[i]);
    }
    double inv = 1.0 / double(leds.size());
    for (size_t i = 0; i < mean.size(); ++i) {
        double d = mean.px[i] * inv - double(a.px[i]);
        mean.px[i] = d > 0.0 ? d : 0.0;
    }
    return normalize(mean);
}

SuppressedFrame suppress_for_config(const CompositeFrame& composite,
                                    const std::vector<int>& leds, bool single_channel) {
    if (!single_channel || leds.size() == 1) return suppress(composite, leds);
    SuppressedFrame out;
    out.base_timestamp_us = composite.base_timestamp_us;
    out.frame_index = composite.frame_index;
    out.leds = leds;
    out.combined = true;
    out.channels.push_back(combine_subframes(composite, leds));
    return out;
}

}  // namespace eclipse
