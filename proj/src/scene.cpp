#include "eclipse/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace eclipse {

double SurfacePlane::albedo_at(const Vec3& world) const {
    if (texture.kind == PlaneTexture::Kind::none) return albedo;

    // Deterministic in-plane chart.
    Vec3 n = plane.normal;
    Vec3 seed = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 e1 = seed.cross(n).normalized();
    Vec3 e2 = n.cross(e1);
    Vec3 rel = world - plane.origin;
    double u = rel.dot(e1) / texture.cell_mm;
    double v = rel.dot(e2) / texture.cell_mm;

    bool alt = false;
    if (texture.kind == PlaneTexture::Kind::checker) {
        alt = (int(std::floor(u)) + int(std::floor(v))) % 2 != 0;
    } else {
        alt = int(std::floor(u)) % 2 != 0;
    }
    return alt ? texture.secondary_albedo : albedo;
}

CapsuleFinger CapsuleFinger::make(int id, const Vec3& tip, const Vec3& axis_dir,
                                  double length, double radius) {
    CapsuleFinger f;
    f.finger_id = id;
    f.tip = tip;
    f.axis = axis_dir.normalized();
    f.length = length;
    f.radius = radius;
    f.keypoints.tip = tip;
    f.keypoints.pip = tip + f.axis * (0.45 * length);
    f.keypoints.mcp = tip + f.axis * (0.95 * length);
    f.keypoints.wrist = tip + f.axis * (2.20 * length);
    return f;
}

Vec2 PinholeCamera::project(const Vec3& world) const {
    Vec3 c = pose.apply(world);
    if (c.z <= 1e-6) raise(ErrorKind::behind_camera, "point not in front of camera");
    return {cx + fx * c.x / c.z, cy + fy * c.y / c.z};
}

Ray PinholeCamera::pixel_ray(const Vec2& px) const {
    Vec3 dir_cam{(px.x - cx) / fx, (px.y - cy) / fy, 1.0};
    Vec3 dir_world = pose.r.transposed() * dir_cam;
    return {center(), dir_world.normalized()};
}

Vec3 PinholeCamera::back_project_to_plane(const Vec2& px, const Plane& plane) const {
    Ray ray = pixel_ray(px);
    auto t = intersect_ray_plane(ray, plane);
    if (!t) raise(ErrorKind::degenerate_geometry, "pixel ray does not reach the surface plane");
    return ray.at(*t);
}

PinholeCamera PinholeCamera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                                     double fx, double fy, int width, int height) {
    PinholeCamera cam;
    cam.pose.r = look_at_rotation(eye, target, up_hint);
    cam.pose.t = -(cam.pose.r * eye);
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    return cam;
}

const HeadsetLed* Scene::find_led(int index) const {
    for (const auto& led : headset_leds)
        if (led.index == index) return &led;
    return nullptr;
}

void Scene::validate() const {
    if (headset_leds.empty())
        raise(ErrorKind::format, "scene needs at least one headset LED");
    std::set<int> seen;
    for (const auto& led : headset_leds) {
        if (led.index < 1 || led.index > 4)
            raise(ErrorKind::format, "LED index out of range 1..4");
        if (!seen.insert(led.index).second)
            raise(ErrorKind::format, "duplicate LED index");
        if (led.light.intensity < 0)
            raise(ErrorKind::format, "negative LED intensity");
    }
    for (const auto& l : ambient_lights)
        if (l.intensity < 0) raise(ErrorKind::format, "negative ambient intensity");

    if (surface.albedo < 0.0 || surface.albedo > 1.0)
        raise(ErrorKind::format, "albedo outside [0,1]");
    if (surface.plane.height_of(camera.center()) <= 0.0)
        raise(ErrorKind::format, "camera must sit above the surface");

    for (const auto& f : fingers) {
        if (f.radius <= 0.0) raise(ErrorKind::format, "finger radius must be positive");
        if (f.finger_id < 1 || f.finger_id > 5)
            raise(ErrorKind::format, "finger id outside 1..5");
        if (surface.plane.height_of(f.keypoints.tip) < -1e-6)
            raise(ErrorKind::format, "fingertip below the surface plane");
        // keypoints must lie near the capsule axis
        Vec3 a = f.tip, d = f.axis;
        for (const Vec3& p : {f.keypoints.tip, f.keypoints.pip, f.keypoints.mcp, f.keypoints.wrist}) {
            Vec3 rel = p - a;
            double off = (rel - d * rel.dot(d)).norm();
            if (off > 1.0)
                raise(ErrorKind::format, "finger keypoint off the capsule axis");
        }
    }
}

Scene Scene::with_finger_poses(const std::vector<FingerPose>& poses) const {
    Scene out = *this;
    for (const auto& p : poses) {
        auto it = std::find_if(out.fingers.begin(), out.fingers.end(),
                               [&](const CapsuleFinger& f) { return f.finger_id == p.finger_id; });
        double length = p.length.value_or(it != out.fingers.end() ? it->length : 50.0);
        double radius = p.radius.value_or(it != out.fingers.end() ? it->radius : 8.0);
        CapsuleFinger f = CapsuleFinger::make(p.finger_id, p.tip, p.axis, length, radius);
        if (it != out.fingers.end())
            *it = f;
        else
            out.fingers.push_back(f);
    }
    return out;
}

Scene make_default_scene() {
    Scene s;
    s.surface.plane = Plane{{0, 0, 0}, {0, 0, 1}};
    s.surface.albedo = 0.6;
    s.camera = PinholeCamera::look_at({0, 0, 450}, {0, 0, 0}, {0, 1, 0});

    // Headset rig, camera at one rectangle corner. Negative y is the wearer's
    // side; fingers in default trajectories point toward +y.
    Vec3 cam = {0, 0, 450};
    auto led = [&](int idx, const Vec3& offset, double intensity) {
        return HeadsetLed{idx, PointLight{cam + offset, intensity, Falloff::inverse_square}};
    };
    double base_intensity = 1.35e5;  // mid-range exposure on the plane at gain 1
    s.headset_leds = {
        led(1, {0, 0, 15}, base_intensity),        // inline, directly above the camera
        led(2, {0, -100, 0}, base_intensity),
        led(3, {160, -100, 0}, base_intensity),
        led(4, {160, 0, 0}, base_intensity),
    };
    s.ambient_floor = 0.02;
    s.fingers = {CapsuleFinger::make(2, {0, 120, 0}, Vec3{0, -0.766, 0.643})};
    return s;
}

}  // namespace eclipse
