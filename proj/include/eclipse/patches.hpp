#pragma once
// Fingertip patch extraction: keypoint-driven scale/rotation normalization of
// 64x64 windows over the suppressed LED channels.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eclipse/scene.hpp"
#include "eclipse/suppress.hpp"

namespace eclipse {

struct FingerKeypoints2 {
    Vec2 tip, pip, mcp;
    bool in_view = true;
};

struct HandKeypoints {
    Vec2 wrist;
    bool wrist_in_view = true;
    std::map<int, FingerKeypoints2> fingers;

    bool finger_usable(int finger_id) const {
        auto it = fingers.find(finger_id);
        return it != fingers.end() && it->second.in_view && wrist_in_view;
    }
};

struct JitterConfig {
    double sigma_px = 1.5;  // isotropic Gaussian tracker noise; 0 = exact
};

// Projects the scene's ground-truth keypoints and adds optional pixel jitter
// (a stand-in for an off-the-shelf hand tracker).
HandKeypoints keypoints_from_scene(const Scene& scene, const PinholeCamera& camera,
                                   const JitterConfig& jitter, uint64_t seed);

// 2-D similarity: patch_px = scale * R(angle) * (img_px) + translation.
struct Similarity2 {
    double scale = 1.0;
    double cos_a = 1.0, sin_a = 0.0;
    Vec2 translation;

    Vec2 apply(const Vec2& p) const {
        return {scale * (cos_a * p.x - sin_a * p.y) + translation.x,
                scale * (sin_a * p.x + cos_a * p.y) + translation.y};
    }
    Vec2 apply_inverse(const Vec2& q) const {
        double u = (q.x - translation.x) / scale;
        double v = (q.y - translation.y) / scale;
        return {cos_a * u + sin_a * v, -sin_a * u + cos_a * v};
    }
};

struct PatchConfig {
    int size = 64;
    // |wrist - MCP| maps to this many patch pixels; sized so a finger about
    // 400 mm from the default camera spans most of the window while the
    // far-hover shadow gap still lands inside it.
    double reference_hand_px = 56.0;
    int supersample = 2;  // NxN bilinear taps per patch pixel (minification)
};

// Scale from wrist->MCP, rotation so MCP->PIP points up, TIP at the center.
// Throws degenerate_geometry on coincident keypoints.
Similarity2 patch_transform(const HandKeypoints& kp, int finger_id,
                            const PatchConfig& cfg = {});

struct FingerPatch {
    int size = 64;
    int channels = 0;
    int finger_id = 0;
    uint64_t frame_index = 0;
    std::vector<float> pixels;  // channel-major, row-major within a channel

    float at(int c, int x, int y) const {
        return pixels[(size_t(c) * size + y) * size + x];
    }
};

FingerPatch extract_patch(const SuppressedFrame& suppressed, const Similarity2& transform,
                          int finger_id, const PatchConfig& cfg = {});

// --- dataset container ---------------------------------------------------
// ECLD file: magic "ECLD" | version u16 | patch u16 | channels u16 |
// led_mask u16 | single_channel u8 | reserved 7B | record_count u64;
// per record: frame_index u32 | scene_id u32 | finger_id u8 | touch u8 |
// pad u16 | hover_mm f32 | pixels f32[patch*patch*channels] (little-endian).

struct PatchRecord {
    uint32_t frame_index = 0;
    uint32_t scene_id = 0;
    uint8_t finger_id = 0;
    bool touch = false;
    float hover_mm = 0.0f;
    std::vector<float> pixels;
};

struct PatchDataset {
    int patch = 64;
    int channels = 0;
    uint16_t led_mask = 0;       // bit k set when LED k contributes
    bool single_channel = false;
    std::vector<PatchRecord> records;

    void save(const std::string& path) const;
    static PatchDataset load(const std::string& path);
};

uint16_t led_mask_of(const std::vector<int>& leds);

}  // namespace eclipse
