#pragma once
// Extraneous-shadow suppression: ambient subtraction and normalization, plus
// subframe averaging for combined-illuminator simulation.

#include <vector>

#include "eclipse/image.hpp"
#include "eclipse/stream.hpp"

namespace eclipse {

struct SuppressedFrame {
    uint64_t base_timestamp_us = 0;
    uint64_t frame_index = 0;
    std::vector<int> leds;        // channel order; a single entry may cover a
                                  // combined (averaged) multi-LED channel
    bool combined = false;
    std::vector<ImageF> channels; // normalized to [0,1], one per entry of leds
};

// Dk = clamp(Bk - A, >=0), in LSB units. One image per requested LED.
std::vector<ImageF> subtract_ambient(const CompositeFrame& composite,
                                     const std::vector<int>& leds);

// Percentile stretch: p1 -> 0, p99 -> 1, clamped. Constant images (spread
// below 1e-6 of the 8-bit range) normalize to all zeros.
ImageF normalize(const ImageF& image);

// Per-LED channels: norm(Bk - A) for each k.
SuppressedFrame suppress(const CompositeFrame& composite, const std::vector<int>& leds);

// Single averaged channel: norm(clamp(mean(Bk) - A, >=0)).
ImageF combine_subframes(const CompositeFrame& composite, const std::vector<int>& leds);

// Convenience: multi-channel or combined single-channel per the flag.
SuppressedFrame suppress_for_config(const CompositeFrame& composite,
                                    const std::vector<int>& leds, bool single_channel);

}  // namespace eclipse
