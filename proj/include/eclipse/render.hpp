#pragma once
// Ray-cast renderer for the synthetic scene plus the closed-form shadow
// geometry it is verified against.

#include <set>

#include "eclipse/image.hpp"
#include "eclipse/scene.hpp"
#include "eclipse/stream.hpp"

namespace eclipse {

// Which emitters are on. `ambient` covers the extraneous point lights AND the
// uniform ambient floor; LED-only selections therefore isolate exactly one
// illuminator's contribution (what ambient subtraction recovers).
struct LightSelection {
    bool ambient = false;
    std::set<int> leds;

    static LightSelection ambient_only() { return {true, {}}; }
    static LightSelection ambient_plus(int k) { return {true, {k}}; }
    static LightSelection led_only(int k) { return {false, {k}}; }
    static LightSelection none() { return {false, {}}; }
};

// Per-pixel: camera ray, first hit among plane/fingers, Lambertian shading
// summed over the selected lights with 0/1 occlusion against the fingers.
ImageF render_subframe(const Scene& scene, const LightSelection& sel);

// Quantization: q = clamp(round(gain255 * linear + noise), 0, 255).
ImageU8 quantize(const ImageF& linear, double gain255, const NoiseConfig& noise, uint64_t seed);

// One full firing sequence (ambient, ambient+LED1, .., ambient+LED4) with
// timestamps spaced 2.5 ms from base_timestamp_us.
CompositeFrame render_sequence(const Scene& scene, uint64_t frame_index,
                               uint64_t base_timestamp_us, uint64_t seed);

// Exact hover/keypoint/shadow-tip labels for the current scene.
GroundTruth ground_truth(const Scene& scene);

// Apex of the fingertip's cast shadow: the light ray through the fingertip
// extended to the plane. Throws degenerate_geometry if the light is not
// strictly above the fingertip.
Vec3 shadow_tip_on_plane(const Vec3& light, const Vec3& fingertip, const Plane& plane);

// On-plane distance between the shadow tip and the fingertip's orthogonal
// projection: d = h * |L_par - F_par| / (Lz - h).
double shadow_gap_mm(const Vec3& light, const Vec3& fingertip, const Plane& plane);

// Closed-form inverse of shadow_gap_mm: h = d * Lz / (d + |L_par - F_par|).
// `fingertip_on_plane` is the fingertip's orthogonal projection.
double hover_from_gap(double gap_mm, const Vec3& light, const Vec3& fingertip_on_plane,
                      const Plane& plane);

// Gain that puts the brightest subframe of the current scene near
// headroom*255. Evaluated on a subsampled grid; deterministic.
double suggest_exposure_gain(const Scene& scene, double headroom = 0.92);

}  // namespace eclipse
