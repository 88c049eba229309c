#pragma once
// Shared test oracles, independent of the library's estimator path.

#include <cmath>
#include <optional>
#include <vector>

#include "eclipse/render.hpp"

namespace eclipse::testsupport {

// Expected rendered umbra tip of the fingertip cap sphere: the extremal image
// point of the sphere's tangent-cone shadow along `dir_px`. Pure geometry
// (cone parametrization + scalar maximization), no rendering involved.
inline Vec2 cone_umbra_tip(const Vec3& light, const Vec3& sphere_center, double radius,
                           const Plane& plane, const PinholeCamera& camera, const Vec2& dir_px) {
    Vec3 w = (sphere_center - light);
    double dist = w.norm();
    w = w / dist;
    double sin_a = radius / dist;
    double cos_a = std::sqrt(std::max(0.0, 1.0 - sin_a * sin_a));

    Vec3 seed = std::abs(w.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 e1 = seed.cross(w).normalized();
    Vec3 e2 = w.cross(e1);

    auto image_point = [&](double theta) {
        Vec3 d = w * cos_a + (e1 * std::cos(theta) + e2 * std::sin(theta)) * sin_a;
        Ray ray{light, d};
        auto t = intersect_ray_plane(ray, plane);
        if (!t) return Vec2{-1e9, -1e9};
        return camera.project(ray.at(*t));
    };
    auto score = [&](double theta) { return image_point(theta).dot(dir_px); };

    double best_theta = 0.0, best = -1e30;
    constexpr int kCoarse = 720;
    for (int i = 0; i < kCoarse; ++i) {
        double theta = 2.0 * M_PI * i / kCoarse;
        double s = score(theta);
        if (s > best) {
            best = s;
            best_theta = theta;
        }
    }
    double lo = best_theta - 2.0 * M_PI / kCoarse;
    double hi = best_theta + 2.0 * M_PI / kCoarse;
    for (int it = 0; it < 60; ++it) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (score(m1) < score(m2))
            lo = m1;
        else
            hi = m2;
    }
    return image_point((lo + hi) / 2.0);
}

// Rendered umbra locator: plane mask from a floor-only render, flood fill of
// the zero-irradiance region of an LED-only render, extremal point along dir.
struct UmbraOracle {
    int regions = 0;
    Vec2 tip_px;
    bool found = false;
};

inline UmbraOracle locate_umbra(const Scene& scene, int led_index, const Vec2& origin_px,
                                const Vec2& dir) {
    ImageF led = render_subframe(scene, LightSelection::led_only(led_index));

    Scene floor_scene = scene;
    floor_scene.ambient_lights.clear();
    floor_scene.ambient_floor = 0.02;
    floor_scene.surface.texture.kind = PlaneTexture::Kind::none;
    ImageF floor_img = render_subframe(floor_scene, LightSelection::ambient_only());
    double plane_level = floor_scene.surface.albedo * floor_scene.ambient_floor;

    int w = led.width, h = led.height;
    std::vector<uint8_t> dark(size_t(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool on_plane = std::abs(floor_img.at(x, y) - plane_level) < 1e-9;
            if (on_plane && led.at(x, y) < 1e-12) dark[size_t(y) * w + x] = 1;
        }

    UmbraOracle out;
    std::vector<int> label(size_t(w) * h, -1);
    std::vector<std::pair<int, int>> stack;
    double best_proj = -1e30;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!dark[size_t(y) * w + x] || label[size_t(y) * w + x] >= 0) continue;
            int id = out.regions++;
            size_t count = 0;
            stack.assign(1, {x, y});
            label[size_t(y) * w + x] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                ++count;
                Vec2 center{cx + 0.5, cy + 0.5};
                double proj = (center - origin_px).dot(dir);
                if (proj > best_proj) {
                    best_proj = proj;
                    out.tip_px = center;
                    out.found = true;
                }
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        if (!dark[size_t(ny) * w + nx] || label[size_t(ny) * w + nx] >= 0)
                            continue;
                        label[size_t(ny) * w + nx] = id;
                        stack.push_back({nx, ny});
                    }
            }
            if (count < 3) --out.regions;  // ignore speck-size artifacts
        }
    }
    return out;
}

// Signed along-strip offset (in pixels) between the rendered umbra boundary
// and an expected tip: walks the line expected + t*dir through the LED-only
// render and interpolates the dark->lit crossing. Returns nullopt when the
// line shows no crossing within the probe range.
inline std::optional<double> umbra_crossing_offset(const ImageF& led_image, const Vec2& expected,
                                                   const Vec2& dir) {
    double lit_ref = led_image.sample_bilinear(expected.x + dir.x * 6.0, expected.y + dir.y * 6.0);
    if (lit_ref <= 0.0) return std::nullopt;
    double thr = 0.5 * lit_ref;

    // last dark sample along the probe (samples before it may sit on the
    // bright finger image, which is fine)
    constexpr double kStep = 0.05;
    double last_dark = -1e9, prev_v = 0.0;
    bool have_dark = false;
    for (double t = -6.0; t <= 6.0; t += kStep) {
        double v = led_image.sample_bilinear(expected.x + dir.x * t, expected.y + dir.y * t);
        if (v < thr) {
            last_dark = t;
            prev_v = v;
            have_dark = true;
        }
    }
    if (!have_dark || last_dark > 6.0 - kStep) return std::nullopt;
    double next_v = led_image.sample_bilinear(expected.x + dir.x * (last_dark + kStep),
                                              expected.y + dir.y * (last_dark + kStep));
    double f = (thr - prev_v) / std::max(next_v - prev_v, 1e-12);
    return last_dark + kStep * f;
}

// Shadow-strip direction in image space: from the PIP joint's point shadow
// toward the fingertip's point shadow.
inline Vec2 strip_direction_px(const Scene& scene, const CapsuleFinger& finger, int led_index) {
    const HeadsetLed* led = scene.find_led(led_index);
    Vec3 s_tip =
        shadow_tip_on_plane(led->light.position, finger.keypoints.tip, scene.surface.plane);
    Vec3 s_pip =
        shadow_tip_on_plane(led->light.position, finger.keypoints.pip, scene.surface.plane);
    return (scene.camera.project(s_tip) - scene.camera.project(s_pip)).normalized();
}

}  // namespace eclipse::testsupport
