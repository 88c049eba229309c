#include "eclipse/stream.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "eclipse/render.hpp"
#include "eclipse/rng.hpp"

namespace eclipse {

namespace {

constexpr char kMagic[4] = {'E', 'C', 'L', 'T'};

template <typename T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (unsigned char)((uint64_t(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool get_le(std::istream& is, T& v) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    uint64_t acc = 0;
    for (size_t i = 0; i < sizeof(T); ++i) acc |= uint64_t(buf[i]) << (8 * i);
    v = T(acc);
    return true;
}

}  // namespace

uint64_t encode_stream(const std::vector<RawSubframe>& frames, std::ostream& sink) {
    int width = frames.empty() ? 640 : frames.front().image.width;
    int height = frames.empty() ? 480 : frames.front().image.height;

    sink.write(kMagic, 4);
    put_le<uint16_t>(sink, kStreamVersion);
    put_le<uint16_t>(sink, uint16_t(width));
    put_le<uint16_t>(sink, uint16_t(height));
    put_le<uint32_t>(sink, 0);  // reserved
    uint64_t bytes = 4 + 2 + 2 + 2 + 4;

    for (const auto& f : frames) {
        if (f.image.width != width || f.image.height != height)
            raise(ErrorKind::invalid_argument, "mixed frame sizes in one stream");
        put_le<uint64_t>(sink, f.timestamp_us);
        put_le<uint8_t>(sink, f.sequence_step);
        sink.write(reinterpret_cast<const char*>(f.image.px.data()),
                   std::streamsize(f.image.px.size()));
        bytes += 8 + 1 + f.image.px.size();
    }
    if (!sink) raise(ErrorKind::io, "stream write failed");
    return bytes;
}

uint64_t encode_stream_file(const std::vector<RawSubframe>& frames, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorKind::io, "cannot open for write: " + path);
    return encode_stream(frames, os);
}

std::vector<RawSubframe> decode_stream(std::istream& source) {
    char magic[4];
    if (!source.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        raise(ErrorKind::bad_magic, "not an ECLT stream (bad magic)");

    uint16_t version = 0, width = 0, height = 0;
    uint32_t reserved = 0;
    if (!get_le(source, version) || !get_le(source, width) || !get_le(source, height) ||
        !get_le(source, reserved))
        raise(ErrorKind::truncated, "truncated stream header");
    if (version != kStreamVersion)
        raise(ErrorKind::version_mismatch,
              "unsupported stream version " + std::to_string(version));

    std::vector<RawSubframe> frames;
    size_t payload = size_t(width) * height;
    for (uint64_t index = 0;; ++index) {
        RawSubframe f;
        if (!get_le(source, f.timestamp_us)) {
            if (source.eof()) break;
            raise(ErrorKind::io, "stream read failed");
        }
        if (!get_le(source, f.sequence_step))
            raise(ErrorKind::truncated, "truncated frame " + std::to_string(index));
        f.image = ImageU8(width, height);
        if (!source.read(reinterpret_cast<char*>(f.image.px.data()), std::streamsize(payload)))
            raise(ErrorKind::truncated, "truncated payload in frame " + std::to_string(index));
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<RawSubframe> decode_stream_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorKind::io, "cannot open for read: " + path);
    return decode_stream(is);
}

std::vector<CompositeFrame> demux(const std::vector<RawSubframe>& raw, DropReport& report,
                                  const DemuxOptions& opts) {
    std::vector<CompositeFrame> out;
    report = DropReport{};

    uint64_t pending_first = 0, pending_count = 0;
    std::string pending_reason;
    auto flush_pending = [&]() {
        if (pending_count == 0) return;
        report.dropped_sequences += 1;
        report.dropped_frames += pending_count;
        report.entries.push_back({pending_first, pending_count, pending_reason});
        pending_count = 0;
        pending_reason.clear();
    };
    auto drop = [&](uint64_t index, const std::string& reason) {
        if (pending_count == 0) pending_first = index;
        if (pending_reason.empty()) pending_reason = reason;
        ++pending_count;
    };

    size_t i = 0;
    uint64_t max_span = uint64_t(kSequenceSteps - 1) * kSubframeSpacingUs + opts.jitter_budget_us;
    while (i < raw.size()) {
        bool usable = raw[i].sequence_step == 0 && i + kSequenceSteps <= raw.size();
        if (usable) {
            for (int k = 1; k < kSequenceSteps; ++k)
                if (raw[i + k].sequence_step != uint8_t(k)) usable = false;
            if (usable) {
                uint64_t span = raw[i + kSequenceSteps - 1].timestamp_us - raw[i].timestamp_us;
                if (raw[i + kSequenceSteps - 1].timestamp_us < raw[i].timestamp_us ||
                    span > max_span)
                    usable = false;
            }
        }
        if (!usable) {
            drop(i, raw[i].sequence_step == 0 ? "incomplete firing sequence"
                                              : "unaligned subframe");
            ++i;
            continue;
        }
        flush_pending();
        CompositeFrame frame;
        frame.base_timestamp_us = raw[i].timestamp_us;
        frame.frame_index = out.size();
        frame.subframes.assign(raw.begin() + i, raw.begin() + i + kSequenceSteps);
        out.push_back(std::move(frame));
        i += kSequenceSteps;
    }
    flush_pending();
    report.composites_emitted = out.size();
    return out;
}

std::vector<RawSubframe> synthesize_raw_stream(const Scene& scene, const Trajectory& traj,
                                               uint64_t seed,
                                               std::vector<GroundTruth>* truths) {
    std::vector<RawSubframe> out;
    if (truths) truths->clear();
    for (size_t step = 0; step < traj.steps.size(); ++step) {
        Scene posed = scene.with_finger_poses(traj.steps[step].fingers);
        posed.validate();
        uint64_t base = uint64_t(step) * kSequencePeriodUs;
        CompositeFrame frame = render_sequence(posed, step, base, seed);
        for (auto& sub : frame.subframes) out.push_back(std::move(sub));
        if (truths) truths->push_back(ground_truth(posed));
    }
    return out;
}

}  // namespace eclipse
