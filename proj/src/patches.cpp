#include "eclipse/patches.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "eclipse/rng.hpp"

namespace eclipse {

HandKeypoints keypoints_from_scene(const Scene& scene, const PinholeCamera& camera,
                                   const JitterConfig& jitter, uint64_t seed) {
    HandKeypoints out;
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, jitter.sigma_px > 0 ? jitter.sigma_px : 1.0);
    auto jittered = [&](const Vec2& p) {
        if (jitter.sigma_px <= 0.0) return p;
        return Vec2{p.x + noise(rng), p.y + noise(rng)};
    };

    bool wrist_done = false;
    for (const auto& f : scene.fingers) {
        FingerKeypoints2 kp;
        try {
            kp.tip = camera.project(f.keypoints.tip);
            kp.pip = camera.project(f.keypoints.pip);
            kp.mcp = camera.project(f.keypoints.mcp);
            Vec2 wrist = camera.project(f.keypoints.wrist);
            if (!wrist_done) {
                out.wrist = jittered(wrist);
                out.wrist_in_view = camera.contains(wrist);
                wrist_done = true;
            }
        } catch (const Error&) {
            kp.in_view = false;
            out.fingers[f.finger_id] = kp;
            continue;
        }
        kp.in_view = camera.contains(kp.tip) && camera.contains(kp.pip) &&
                     camera.contains(kp.mcp);
        kp.tip = jittered(kp.tip);
        kp.pip = jittered(kp.pip);
        kp.mcp = jittered(kp.mcp);
        out.fingers[f.finger_id] = kp;
    }
    if (!wrist_done) out.wrist_in_view = false;
    return out;
}

Similarity2 patch_transform(const HandKeypoints& kp, int finger_id, const PatchConfig& cfg) {
    auto it = kp.fingers.find(finger_id);
    if (it == kp.fingers.end())
        raise(ErrorKind::invalid_argument, "no keypoints for finger " + std::to_string(finger_id));
    const FingerKeypoints2& f = it->second;

    Vec2 hand = kp.wrist - f.mcp;
    double hand_len = hand.norm();
    if (hand_len < 1e-6)
        raise(ErrorKind::degenerate_geometry, "wrist and MCP keypoints coincide");
    double scale = cfg.reference_hand_px / hand_len;

    Vec2 dir = f.pip - f.mcp;  // points tip-ward along the finger
    if (dir.norm() < 1e-6)
        raise(ErrorKind::degenerate_geometry, "MCP and PIP keypoints coincide");
    // Rotate so dir maps to "up" in the patch (negative v).
    double theta = std::atan2(dir.y, dir.x);
    double rot = -M_PI / 2.0 - theta;

    Similarity2 t;
    t.scale = scale;
    t.cos_a = std::cos(rot);
    t.sin_a = std::sin(rot);
    Vec2 tip_mapped = t.apply(f.tip);  // translation still zero here
    double c = cfg.size / 2.0;
    t.translation = Vec2{c, c} - tip_mapped;
    return t;
}

FingerPatch extract_patch(const SuppressedFrame& suppressed, const Similarity2& transform,
                          int finger_id, const PatchConfig& cfg) {
    if (suppressed.channels.empty())
        raise(ErrorKind::invalid_argument, "suppressed frame has no channels");

    FingerPatch patch;
    patch.size = cfg.size;
    patch.channels = int(suppressed.channels.size());
    patch.finger_id = finger_id;
    patch.frame_index = suppressed.frame_index;
    patch.pixels.resize(size_t(patch.channels) * cfg.size * cfg.size);

    int ss = std::max(1, cfg.supersample);
    double w = 1.0 / double(ss * ss);
    for (int c = 0; c < patch.channels; ++c) {
        const ImageF& img = suppressed.channels[size_t(c)];
        for (int y = 0; y < cfg.size; ++y) {
            for (int x = 0; x < cfg.size; ++x) {
                double acc = 0.0;
                for (int sy = 0; sy < ss; ++sy) {
                    for (int sx = 0; sx < ss; ++sx) {
                        Vec2 q{x + (sx + 0.5) / ss, y + (sy + 0.5) / ss};
                        Vec2 p = transform.apply_inverse(q);
                        acc += img.sample_bilinear(p.x, p.y, 0.0);
                    }
                }
                patch.pixels[(size_t(c) * cfg.size + y) * cfg.size + x] = float(acc * w);
            }
        }
    }
    return patch;
}

uint16_t led_mask_of(const std::vector<int>& leds) {
    uint16_t mask = 0;
    for (int k : leds) mask |= uint16_t(1u << k);
    return mask;
}

// --- dataset io -----------------------------------------------------------

namespace {

constexpr char kDatasetMagic[4] = {'E', 'C', 'L', 'D'};
constexpr uint16_t kDatasetVersion = 1;

template <typename T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (unsigned char)((uint64_t(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
void get_le(std::istream& is, T& v, const char* what) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
        raise(ErrorKind::truncated, std::string("truncated dataset: ") + what);
    uint64_t acc = 0;
    for (size_t i = 0; i < sizeof(T); ++i) acc |= uint64_t(buf[i]) << (8 * i);
    v = T(acc);
}

void put_f32(std::ostream& os, float f) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    put_le<uint32_t>(os, u);
}

float get_f32(std::istream& is, const char* what) {
    uint32_t u;
    get_le(is, u, what);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

void PatchDataset::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorKind::io, "cannot open for write: " + path);
    os.write(kDatasetMagic, 4);
    put_le<uint16_t>(os, kDatasetVersion);
    put_le<uint16_t>(os, uint16_t(patch));
    put_le<uint16_t>(os, uint16_t(channels));
    put_le<uint16_t>(os, led_mask);
    put_le<uint8_t>(os, single_channel ? 1 : 0);
    for (int i = 0; i < 7; ++i) put_le<uint8_t>(os, 0);
    put_le<uint64_t>(os, records.size());

    size_t npx = size_t(patch) * patch * channels;
    for (const auto& r : records) {
        if (r.pixels.size() != npx)
            raise(ErrorKind::invalid_argument, "record pixel count mismatch");
        put_le<uint32_t>(os, r.frame_index);
        put_le<uint32_t>(os, r.scene_id);
        put_le<uint8_t>(os, r.finger_id);
        put_le<uint8_t>(os, r.touch ? 1 : 0);
        put_le<uint16_t>(os, 0);
        put_f32(os, r.hover_mm);
        for (float f : r.pixels) put_f32(os, f);
    }
    if (!os) raise(ErrorKind::io, "dataset write failed");
}

PatchDataset PatchDataset::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorKind::io, "cannot open for read: " + path);

    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kDatasetMagic, 4) != 0)
        raise(ErrorKind::bad_magic, "not an ECLD dataset (bad magic)");
    uint16_t version;
    get_le(is, version, "version");
    if (version != kDatasetVersion)
        raise(ErrorKind::version_mismatch, "unsupported dataset version");

    PatchDataset ds;
    uint16_t patch16, channels16;
    get_le(is, patch16, "patch");
    get_le(is, channels16, "channels");
    get_le(is, ds.led_mask, "led mask");
    uint8_t single;
    get_le(is, single, "single-channel flag");
    ds.single_channel = single != 0;
    for (int i = 0; i < 7; ++i) {
        uint8_t pad;
        get_le(is, pad, "reserved");
    }
    uint64_t count;
    get_le(is, count, "record count");
    ds.patch = patch16;
    ds.channels = channels16;

    size_t npx = size_t(ds.patch) * ds.patch * ds.channels;
    for (uint64_t i = 0; i < count; ++i) {
        PatchRecord r;
        get_le(is, r.frame_index, "frame index");
        get_le(is, r.scene_id, "scene id");
        get_le(is, r.finger_id, "finger id");
        uint8_t touch;
        get_le(is, touch, "touch flag");
        r.touch = touch != 0;
        uint16_t pad;
        get_le(is, pad, "pad");
        r.hover_mm = get_f32(is, "hover");
        r.pixels.resize(npx);
        for (size_t p = 0; p < npx; ++p) r.pixels[p] = get_f32(is, "pixels");
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace eclipse
