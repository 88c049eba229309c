#include "eclipse/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "eclipse/rng.hpp"

namespace eclipse {

namespace {

constexpr double kRayEps = 1e-2;  // mm offset for occlusion rays

struct ScreenBound {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    bool full = false;

    bool contains(int x, int y) const {
        return full || (x >= x0 && x <= x1 && y >= y0 && y <= y1);
    }
};

// Conservative pixel-space bound of a capsule.
ScreenBound capsule_screen_bound(const PinholeCamera& cam, const Capsule& cap) {
    ScreenBound b;
    double lo_x = 1e30, lo_y = 1e30, hi_x = -1e30, hi_y = -1e30;
    for (const Vec3& c : {cap.a, cap.b}) {
        Vec3 pc = cam.pose.apply(c);
        if (pc.z <= cap.radius) {
            b.full = true;
            return b;
        }
        double margin = cap.radius / (pc.z - cap.radius);
        double rx = cam.fx * margin * 1.3 + 2.0;
        double ry = cam.fy * margin * 1.3 + 2.0;
        double u = cam.cx + cam.fx * pc.x / pc.z;
        double v = cam.cy + cam.fy * pc.y / pc.z;
        lo_x = std::min(lo_x, u - rx);
        hi_x = std::max(hi_x, u + rx);
        lo_y = std::min(lo_y, v - ry);
        hi_y = std::max(hi_y, v + ry);
    }
    b.x0 = std::max(0, int(std::floor(lo_x)));
    b.y0 = std::max(0, int(std::floor(lo_y)));
    b.x1 = std::min(cam.width - 1, int(std::ceil(hi_x)));
    b.y1 = std::min(cam.height - 1, int(std::ceil(hi_y)));
    return b;
}

// Conservative on-plane bound of the shadow a capsule casts from one light:
// a fattened segment between the projected endpoints.
struct ShadowBound {
    bool always = false;  // no usable bound; run the exact test
    Vec3 a, b;            // both on the plane
    double radius = 0;

    bool may_shadow(const Vec3& p) const {
        if (always) return true;
        Vec3 ab = b - a;
        double len2 = ab.norm2();
        double u = len2 > 1e-12 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        return (p - (a + ab * u)).norm2() <= radius * radius;
    }
};

ShadowBound capsule_shadow_bound(const Plane& plane, const PointLight& light, const Capsule& cap) {
    ShadowBound sb;
    double hl = plane.height_of(light.position);
    double rad = 0;
    Vec3 pts[2];
    for (int i = 0; i < 2; ++i) {
        const Vec3& c = i == 0 ? cap.a : cap.b;
        double hc = plane.height_of(c);
        if (hl - hc < cap.radius * 1.5 || hc < -cap.radius) {
            sb.always = true;
            return sb;
        }
        double t = hl / (hl - hc);
        pts[i] = light.position + (c - light.position) * t;
        Vec3 dir = (pts[i] - light.position).normalized();
        double cos_inc = std::abs(plane.normal.dot(dir));
        double r = cap.radius * t / std::max(cos_inc, 0.25);
        rad = std::max(rad, r);
    }
    sb.a = pts[0];
    sb.b = pts[1];
    sb.radius = rad + 2.0;
    return sb;
}

struct ResolvedLight {
    const PointLight* light = nullptr;
    std::vector<ShadowBound> bounds;  // one per finger
};

struct RenderContext {
    const Scene* scene = nullptr;
    std::vector<Capsule> capsules;
    std::vector<ScreenBound> screen_bounds;
    std::vector<ResolvedLight> lights;  // ambient first, then LEDs by index
    bool ambient_floor_on = false;
};

RenderContext prepare(const Scene& scene, const LightSelection& sel) {
    RenderContext ctx;
    ctx.scene = &scene;
    ctx.ambient_floor_on = sel.ambient;
    for (const auto& f : scene.fingers) {
        ctx.capsules.push_back(f.capsule());
        ctx.screen_bounds.push_back(capsule_screen_bound(scene.camera, ctx.capsules.back()));
    }
    auto add_light = [&ctx, &scene](const PointLight& l) {
        ResolvedLight rl;
        rl.light = &l;
        for (const auto& cap : ctx.capsules)
            rl.bounds.push_back(capsule_shadow_bound(scene.surface.plane, l, cap));
        ctx.lights.push_back(std::move(rl));
    };
    if (sel.ambient)
        for (const auto& l : scene.ambient_lights) add_light(l);
    for (int k : sel.leds)
        if (const HeadsetLed* led = scene.find_led(k)) add_light(led->light);
    return ctx;
}

double light_contribution(const RenderContext& ctx, const ResolvedLight& rl, const Vec3& p,
                          const Vec3& normal, double reflectance, int skip_finger) {
    const PointLight& l = *rl.light;
    Vec3 to_light = l.position - p;
    double dist = to_light.norm();
    if (dist < kGeomEps) return 0.0;
    Vec3 dir = to_light / dist;
    double cosine = normal.dot(dir);
    if (cosine <= 0.0) return 0.0;

    // occlusion against the fingers (hard shadows)
    for (size_t i = 0; i < ctx.capsules.size(); ++i) {
        if (int(i) == skip_finger) continue;
        if (skip_finger < 0 && !rl.bounds[i].may_shadow(p)) continue;
        Ray shadow_ray{p + dir * kRayEps, dir};
        auto t = intersect_ray_capsule(shadow_ray, ctx.capsules[i]);
        if (t && *t < dist - 2.0 * kRayEps) return 0.0;
    }
    double falloff = l.falloff == Falloff::inverse_square ? 1.0 / (dist * dist) : 1.0;
    return reflectance * l.intensity * falloff * cosine;
}

double shade_pixel(const RenderContext& ctx, int x, int y) {
    const Scene& scene = *ctx.scene;
    Ray ray = scene.camera.pixel_ray({x + 0.5, y + 0.5});

    auto plane_t = intersect_ray_plane(ray, scene.surface.plane);
    double best_t = plane_t ? *plane_t : 1e30;
    int hit_finger = -1;
    for (size_t i = 0; i < ctx.capsules.size(); ++i) {
        if (!ctx.screen_bounds[i].contains(x, y)) continue;
        auto t = intersect_ray_capsule(ray, ctx.capsules[i]);
        if (t && *t < best_t) {
            best_t = *t;
            hit_finger = int(i);
        }
    }
    if (best_t >= 1e30) return 0.0;  // ray parallel to plane, nothing hit

    Vec3 p = ray.at(best_t);
    Vec3 normal;
    double reflectance;
    if (hit_finger >= 0) {
        normal = capsule_normal(ctx.capsules[hit_finger], p);
        reflectance = scene.skin_reflectance;
    } else {
        normal = scene.surface.plane.normal;
        if (normal.dot(ray.dir) > 0) normal = -normal;
        reflectance = scene.surface.albedo_at(p);
    }

    // Reflectance is folded into every term so that light sets sum exactly.
    double v = 0.0;
    if (ctx.ambient_floor_on) v += reflectance * scene.ambient_floor;
    for (const auto& rl : ctx.lights)
        v += light_contribution(ctx, rl, p, normal, reflectance, hit_finger);
    return v;
}

void for_each_row(int height, int threads, const std::function<void(int)>& body) {
    int n = threads > 0 ? threads : int(std::thread::hardware_concurrency());
    n = std::clamp(n, 1, 16);
    if (n == 1) {
        for (int y = 0; y < height; ++y) body(y);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int i = 0; i < n; ++i) {
        pool.emplace_back([&]() {
            for (int y = next.fetch_add(1); y < height; y = next.fetch_add(1)) body(y);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

ImageF render_subframe(const Scene& scene, const LightSelection& sel) {
    RenderContext ctx = prepare(scene, sel);
    ImageF out(scene.camera.width, scene.camera.height);
    for_each_row(out.height, scene.render.threads, [&](int y) {
        for (int x = 0; x < out.width; ++x) out.at(x, y) = shade_pixel(ctx, x, y);
    });
    return out;
}

ImageU8 quantize(const ImageF& linear, double gain255, const NoiseConfig& noise, uint64_t seed) {
    ImageU8 out(linear.width, linear.height);
    if (!noise.enabled) {
        for (size_t i = 0; i < linear.size(); ++i) {
            double v = std::round(linear.px[i] * gain255);
            out.px[i] = uint8_t(std::clamp(v, 0.0, 255.0));
        }
        return out;
    }
    auto rng = make_rng(seed);
    std::normal_distribution<double> read(0.0, std::max(noise.read_sigma_lsb, 0.0));
    for (size_t i = 0; i < linear.size(); ++i) {
        double v = linear.px[i] * gain255;
        if (noise.shot && v > 0.0) {
            double k = noise.shot_electrons_per_lsb;
            std::poisson_distribution<long> shot(v * k);
            v = double(shot(rng)) / k;
        }
        if (noise.read_sigma_lsb > 0.0) v += read(rng);
        out.px[i] = uint8_t(std::clamp(std::round(v), 0.0, 255.0));
    }
    return out;
}

CompositeFrame render_sequence(const Scene& scene, uint64_t frame_index,
                               uint64_t base_timestamp_us, uint64_t seed) {
    CompositeFrame frame;
    frame.frame_index = frame_index;
    frame.base_timestamp_us = base_timestamp_us;

    // Ambient once, plus one LED-only pass per emitter; sums are exact in
    // linear space, so ambient + LEDk equals the combined render bit for bit.
    ImageF ambient = render_subframe(scene, LightSelection::ambient_only());
    double gain = scene.render.effective_gain255();

    for (int step = 0; step < kSequenceSteps; ++step) {
        ImageF linear = ambient;
        if (step > 0 && scene.find_led(step)) {
            ImageF led = render_subframe(scene, LightSelection::led_only(step));
            for (size_t i = 0; i < linear.size(); ++i) linear.px[i] += led.px[i];
        }
        RawSubframe sub;
        sub.timestamp_us = base_timestamp_us + uint64_t(step) * kSubframeSpacingUs;
        sub.sequence_step = uint8_t(step);
        sub.image = quantize(linear, gain, scene.render.noise, derive_seed(seed, frame_index, step));
        frame.subframes.push_back(std::move(sub));
    }
    return frame;
}

Vec3 shadow_tip_on_plane(const Vec3& light, const Vec3& fingertip, const Plane& plane) {
    double hl = plane.height_of(light);
    double hf = plane.height_of(fingertip);
    if (hf < -1e-9)
        raise(ErrorKind::degenerate_geometry, "fingertip below the surface plane");
    if (hl <= hf + 1e-9)
        raise(ErrorKind::degenerate_geometry, "light not strictly above the fingertip");
    double t = hl / (hl - hf);
    return light + (fingertip - light) * t;
}

double shadow_gap_mm(const Vec3& light, const Vec3& fingertip, const Plane& plane) {
    Vec3 s = shadow_tip_on_plane(light, fingertip, plane);
    return (s - plane.project(fingertip)).norm();
}

double hover_from_gap(double gap_mm, const Vec3& light, const Vec3& fingertip_on_plane,
                      const Plane& plane) {
    if (gap_mm < 0.0) raise(ErrorKind::invalid_argument, "negative shadow gap");
    double lz = plane.height_of(light);
    if (lz <= 1e-9) raise(ErrorKind::degenerate_geometry, "light not above the plane");
    double base = (plane.project(light) - plane.project(fingertip_on_plane)).norm();
    double denom = gap_mm + base;
    if (denom < 1e-12)
        raise(ErrorKind::degenerate_geometry, "light directly above the fingertip");
    return gap_mm * lz / denom;
}

GroundTruth ground_truth(const Scene& scene) {
    GroundTruth gt;
    for (const auto& f : scene.fingers) {
        FingerTruth ft;
        ft.finger_id = f.finger_id;
        ft.length_mm = f.length;
        ft.radius_mm = f.radius;
        ft.hover_mm = std::max(0.0, scene.surface.plane.height_of(f.keypoints.tip));
        ft.touch = ft.hover_mm <= scene.contact_epsilon_mm;
        ft.in_view = true;
        auto proj = [&](const Vec3& p, Vec2& out) {
            try {
                out = scene.camera.project(p);
            } catch (const Error&) {
                ft.in_view = false;
                return;
            }
            if (!scene.camera.contains(out)) ft.in_view = false;
        };
        proj(f.keypoints.tip, ft.tip_px);
        proj(f.keypoints.pip, ft.pip_px);
        proj(f.keypoints.mcp, ft.mcp_px);
        proj(f.keypoints.wrist, ft.wrist_px);

        for (const auto& led : scene.headset_leds) {
            try {
                Vec3 s = shadow_tip_on_plane(led.light.position, f.keypoints.tip,
                                             scene.surface.plane);
                ft.shadow_tip_world[led.index] = s;
                ft.shadow_tip_px[led.index] = scene.camera.project(s);
            } catch (const Error&) {
                // degenerate or behind camera: no analytic tip for this LED
            }
        }
        gt.fingers.push_back(std::move(ft));
    }
    return gt;
}

double suggest_exposure_gain(const Scene& scene, double headroom) {
    Scene coarse = scene;
    int k = 4;
    coarse.camera.fx /= k;
    coarse.camera.fy /= k;
    coarse.camera.cx /= k;
    coarse.camera.cy /= k;
    coarse.camera.width /= k;
    coarse.camera.height /= k;

    double peak = 0.0;
    ImageF ambient = render_subframe(coarse, LightSelection::ambient_only());
    for (const auto& led : scene.headset_leds) {
        ImageF li = render_subframe(coarse, LightSelection::led_only(led.index));
        for (size_t i = 0; i < li.size(); ++i)
            peak = std::max(peak, ambient.px[i] + li.px[i]);
    }
    for (double v : ambient.px) peak = std::max(peak, v);
    if (peak <= 0.0) return 1.0;
    return headroom / (peak * (scene.render.exposure_ms / 2.4));
}

}  // namespace eclipse
