#pragma once
// World model: planar surface, capsule fingers, pinhole camera, lights.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eclipse/error.hpp"
#include "eclipse/geometry.hpp"

namespace eclipse {

enum class Falloff { none, inverse_square };

struct PointLight {
    Vec3 position;
    double intensity = 1.0;          // radiant intensity, arbitrary linear units
    Falloff falloff = Falloff::inverse_square;
};

struct PlaneTexture {
    enum class Kind { none, checker, stripes };
    Kind kind = Kind::none;
    double secondary_albedo = 0.3;
    double cell_mm = 40.0;
};

struct SurfacePlane {
    Plane plane;
    double albedo = 0.6;             // reflectance in the sensing band
    PlaneTexture texture;

    double albedo_at(const Vec3& world) const;
};

struct FingerKeypoints3 {
    Vec3 wrist, mcp, pip, tip;
};

// Single capsule per finger: tip is the fingertip surface point, axis points
// tip -> knuckle. Keypoints sit on the axis at fixed fractions by default.
struct CapsuleFinger {
    Vec3 tip;
    Vec3 axis{0, -1, 0};             // unit, tip -> knuckle
    double length = 50.0;
    double radius = 8.0;
    int finger_id = 2;               // thumb=1 .. pinky=5
    FingerKeypoints3 keypoints;

    Capsule capsule() const { return {tip + axis * radius, tip + axis * length, radius}; }

    static CapsuleFinger make(int id, const Vec3& tip, const Vec3& axis_dir,
                              double length = 50.0, double radius = 8.0);
};

struct PinholeCamera {
    Pose pose;                       // world -> camera
    double fx = 580.0, fy = 580.0;
    double cx = 320.0, cy = 240.0;
    int width = 640, height = 480;

    Vec3 center() const { return pose.center(); }
    Vec2 project(const Vec3& world) const;                       // throws behind_camera
    Ray pixel_ray(const Vec2& px) const;
    Vec3 back_project_to_plane(const Vec2& px, const Plane& plane) const;
    bool contains(const Vec2& px) const {
        return px.x >= 0 && px.x < width && px.y >= 0 && px.y < height;
    }

    static PinholeCamera look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                                 double fx = 580.0, double fy = 580.0,
                                 int width = 640, int height = 480);
};

struct NoiseConfig {
    bool enabled = false;
    double read_sigma_lsb = 1.0;     // Gaussian read noise, in 8-bit LSB
    bool shot = false;               // Poisson shot noise
    double shot_electrons_per_lsb = 40.0;
};

struct RenderConfig {
    double exposure_gain = 1.0;      // linear value 1.0 maps to 255 at gain 1
    double exposure_ms = 2.4;        // metadata; scales effective gain vs the 2.4 ms reference
    NoiseConfig noise;
    int threads = 0;                 // 0 = hardware_concurrency

    double effective_gain255() const { return 255.0 * exposure_gain * (exposure_ms / 2.4); }
};

struct HeadsetLed {
    int index = 1;                   // 1..4, firing-sequence slot
    PointLight light;
};

struct Scene {
    SurfacePlane surface;
    std::vector<CapsuleFinger> fingers;
    PinholeCamera camera;
    std::vector<HeadsetLed> headset_leds;     // >=1, unique indices in 1..4
    std::vector<PointLight> ambient_lights;   // extraneous sources (sun, bulbs, ...)
    double ambient_floor = 0.0;               // uniform skylight irradiance
    double skin_reflectance = 0.85;           // fingers are bright in infrared
    double contact_epsilon_mm = 0.5;          // ground-truth touch threshold
    RenderConfig render;

    const HeadsetLed* find_led(int index) const;
    void validate() const;                    // throws on invariant violations

    // Replaces poses of the listed fingers (matched by id); keypoints are
    // re-derived. Unknown ids are appended.
    struct FingerPose {
        int finger_id = 2;
        Vec3 tip;
        Vec3 axis;
        std::optional<double> length, radius;
    };
    Scene with_finger_poses(const std::vector<FingerPose>& poses) const;
};

struct FingerTruth {
    int finger_id = 0;
    double hover_mm = 0.0;
    bool touch = false;
    bool in_view = true;
    double length_mm = 50.0, radius_mm = 8.0;
    Vec2 tip_px, pip_px, mcp_px, wrist_px;
    std::map<int, Vec2> shadow_tip_px;        // per LED; absent if degenerate/behind
    std::map<int, Vec3> shadow_tip_world;
};

struct GroundTruth {
    std::vector<FingerTruth> fingers;
};

// The documented default rig: camera 450 mm above the surface looking straight
// down, LED1 inline above the camera, LED2/3/4 at increasing baselines on a
// 160x100 mm rectangle (a configurable guess, not measured hardware).
Scene make_default_scene();

}  // namespace eclipse
