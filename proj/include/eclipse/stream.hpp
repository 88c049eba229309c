#pragma once
// ECLT raw-stream container, firing-sequence demultiplexer, and synthetic
// stream generation from scene trajectories.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eclipse/image.hpp"
#include "eclipse/scene.hpp"

namespace eclipse {

constexpr int kSequenceSteps = 5;                 // ambient + LED1..4
constexpr uint64_t kSubframeSpacingUs = 2500;     // 2.5 ms per step
constexpr uint64_t kSequencePeriodUs = kSubframeSpacingUs * kSequenceSteps;

struct RawSubframe {
    uint64_t timestamp_us = 0;
    uint8_t sequence_step = 0;                    // 0=ambient, k=LEDk
    ImageU8 image;
};

struct CompositeFrame {
    uint64_t base_timestamp_us = 0;
    uint64_t frame_index = 0;
    std::vector<RawSubframe> subframes;           // exactly 5, steps 0..4 in order

    const ImageU8& ambient() const { return subframes[0].image; }
    const ImageU8& led(int k) const { return subframes[size_t(k)].image; }
};

struct DropReport {
    uint64_t composites_emitted = 0;
    uint64_t dropped_sequences = 0;               // maximal runs of unusable frames
    uint64_t dropped_frames = 0;

    struct Entry {
        uint64_t first_raw_index = 0;
        uint64_t frame_count = 0;
        std::string reason;
    };
    std::vector<Entry> entries;
};

// --- container ---------------------------------------------------------
// Little-endian layout:
//   magic "ECLT" (4B) | version u16 | width u16 | height u16 | reserved u32
//   per frame: timestamp_us u64 | sequence_step u8 | payload w*h bytes

constexpr uint16_t kStreamVersion = 1;

uint64_t encode_stream(const std::vector<RawSubframe>& frames, std::ostream& sink);
uint64_t encode_stream_file(const std::vector<RawSubframe>& frames, const std::string& path);
std::vector<RawSubframe> decode_stream(std::istream& source);
std::vector<RawSubframe> decode_stream_file(const std::string& path);

// --- demux -------------------------------------------------------------
// Groups runs step0..step4 into composites; any broken run is dropped whole
// and alignment resumes at the next step-0 frame. A composite whose
// timestamps span more than 4 spacings + jitter budget is also dropped.
struct DemuxOptions {
    uint64_t jitter_budget_us = 2500;
};

std::vector<CompositeFrame> demux(const std::vector<RawSubframe>& raw, DropReport& report,
                                  const DemuxOptions& opts = {});

// --- synthesis ---------------------------------------------------------
struct TrajectoryStep {
    std::vector<Scene::FingerPose> fingers;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
};

// Renders one firing sequence per trajectory step; 5N subframes, spaced
// 2.5 ms, deterministic under `seed`.
std::vector<RawSubframe> synthesize_raw_stream(const Scene& scene, const Trajectory& traj,
                                               uint64_t seed,
                                               std::vector<GroundTruth>* truths = nullptr);

}  // namespace eclipse
