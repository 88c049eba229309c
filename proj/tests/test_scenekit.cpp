#include <doctest.h>

#include <random>
#include <vector>

#include "eclipse/render.hpp"
#include "test_support.hpp"

using namespace eclipse;
using namespace eclipse::testsupport;

namespace {

Scene posed_default(double hover, double x = 0, double y = 120) {
    Scene s = make_default_scene();
    return s.with_finger_poses({{2, Vec3{x, y, hover}, Vec3{0, -0.766, 0.643}, 50.0, 8.0}});
}

}  // namespace

TEST_CASE("shadow tip: contact collapses the gap") {
    Plane ground{{0, 0, 0}, {0, 0, 1}};
    for (const Vec3& light : {Vec3{0, 0, 500}, Vec3{150, -80, 430}, Vec3{-90, 40, 600}}) {
        Vec3 fingertip{10, 120, 0};
        Vec3 s = shadow_tip_on_plane(light, fingertip, ground);
        CHECK((s - fingertip).norm() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(shadow_gap_mm(light, fingertip, ground) == doctest::Approx(0.0));
    }
}

TEST_CASE("shadow tip: worked example and doubling") {
    Plane ground{{0, 0, 0}, {0, 0, 1}};
    Vec3 light{0, 0, 500};

    Vec3 s = shadow_tip_on_plane(light, {0, 100, 10}, ground);
    CHECK(s.x == doctest::Approx(0.0));
    CHECK(s.y == doctest::Approx(102.0408).epsilon(1e-4));
    CHECK(s.z == doctest::Approx(0.0));
    CHECK(shadow_gap_mm(light, {0, 100, 10}, ground) == doctest::Approx(2.0408).epsilon(1e-4));

    double d20 = shadow_gap_mm(light, {0, 100, 20}, ground);
    CHECK(d20 == doctest::Approx(4.1667).epsilon(1e-4));
    CHECK(d20 > 2.0 * 2.0408);  // superlinear growth
}

TEST_CASE("shadow tip: degenerate light positions") {
    Plane ground{{0, 0, 0}, {0, 0, 1}};
    CHECK_THROWS_AS(shadow_tip_on_plane({0, 0, 5}, {0, 100, 10}, ground), Error);
    CHECK_THROWS_AS(shadow_tip_on_plane({0, 0, 10}, {0, 100, 10}, ground), Error);
}

TEST_CASE("shadow gap monotone in hover height") {
    Plane ground{{0, 0, 0}, {0, 0, 1}};
    Vec3 light{80, -50, 500};
    Vec3 base{0, 120, 0};
    double prev = -1.0;
    for (double h = 0.0; h <= 100.0; h += 5.0) {
        double d = shadow_gap_mm(light, base + Vec3{0, 0, h}, ground);
        CHECK(d > prev);
        prev = d;
    }
}

TEST_CASE("hover_from_gap inverts the worked example") {
    Plane ground{{0, 0, 0}, {0, 0, 1}};
    Vec3 light{0, 0, 500};
    double gap = shadow_gap_mm(light, {0, 100, 10}, ground);
    double h = hover_from_gap(gap, light, {0, 100, 0}, ground);
    CHECK(h == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(hover_from_gap(0.0, light, {0, 100, 0}, ground) == doctest::Approx(0.0));
}

TEST_CASE("continuous round-trip h -> gap -> h is exact") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Plane ground{{0, 0, 0}, {0, 0, 1}};
        double lz = 200.0 + u01(rng) * 600.0;
        double ang = u01(rng) * 2.0 * M_PI;
        double rad = 20.0 + u01(rng) * 280.0;
        Vec3 light{std::cos(ang) * rad, std::sin(ang) * rad, lz};
        Vec3 foot{u01(rng) * 200.0 - 100.0, u01(rng) * 200.0 - 100.0, 0.0};
        double h = u01(rng) * lz * 0.8;
        double gap = shadow_gap_mm(light, foot + Vec3{0, 0, h}, ground);
        double back = hover_from_gap(gap, light, foot, ground);
        CHECK(std::abs(back - h) <= 1e-9);
    }
}

TEST_CASE("projection: optical axis and pinhole arithmetic") {
    PinholeCamera cam = PinholeCamera::look_at({0, 0, 450}, {0, 0, 0}, {0, 1, 0}, 500, 500);
    Vec2 center = cam.project({0, 0, 0});
    CHECK(center.x == doctest::Approx(cam.cx));
    CHECK(center.y == doctest::Approx(cam.cy));

    // 100 mm to the right at 500 mm depth with fx=500 -> cx+100
    Vec2 right = cam.project({100, 0, -50});
    CHECK(right.x == doctest::Approx(cam.cx + 100.0));
    CHECK(right.y == doctest::Approx(cam.cy));

    CHECK_THROWS_AS(cam.project({0, 0, 500}), Error);  // behind the camera
}

TEST_CASE("project/back-project round-trip on the plane") {
    Scene s = make_default_scene();
    Plane ground = s.surface.plane;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-150.0, 150.0);
    for (int i = 0; i < 50; ++i) {
        Vec3 p{u(rng), u(rng), 0.0};
        Vec2 px = s.camera.project(p);
        Vec3 back = s.camera.back_project_to_plane(px, ground);
        CHECK((back - p).norm() <= 1e-6);
    }
}

TEST_CASE("render: no fingers gives a smooth shadow-free image") {
    Scene s = make_default_scene();
    s.fingers.clear();
    ImageF img = render_subframe(s, LightSelection::led_only(3));
    double lo = 1e30, hi = -1e30;
    for (double v : img.px) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo > 0.0);
    // neighboring pixels change by well under a percent
    for (int y = 100; y < 380; y += 7)
        for (int x = 1; x < img.width; x += 11) {
            double a = img.at(x - 1, y), b = img.at(x, y);
            CHECK(std::abs(a - b) <= 0.01 * std::max(a, b));
        }
    CHECK(hi / lo < 5.0);  // cosine/falloff gradient across the FOV, no shadows
}

TEST_CASE("render: additivity over disjoint light sets is exact") {
    Scene s = posed_default(12.0);
    s.ambient_lights.push_back({{-400, 300, 800}, 4e5, Falloff::inverse_square});
    s.ambient_floor = 0.03;

    ImageF both = render_subframe(s, LightSelection::ambient_plus(3));
    ImageF amb = render_subframe(s, LightSelection::ambient_only());
    ImageF led = render_subframe(s, LightSelection::led_only(3));
    REQUIRE(both.size() == amb.size());
    for (size_t i = 0; i < both.size(); ++i) CHECK(both.px[i] == amb.px[i] + led.px[i]);

    ImageF led12 = render_subframe(s, LightSelection{false, {1, 2}});
    ImageF led1 = render_subframe(s, LightSelection::led_only(1));
    ImageF led2 = render_subframe(s, LightSelection::led_only(2));
    for (size_t i = 0; i < led12.size(); ++i) CHECK(led12.px[i] == led1.px[i] + led2.px[i]);
}

TEST_CASE("render: empty selection is the floor-only image") {
    Scene s = posed_default(10.0);
    s.ambient_lights.clear();
    s.ambient_floor = 0.04;
    ImageF img = render_subframe(s, LightSelection::ambient_only());
    // every pixel is reflectance * floor: two distinct levels (plane, skin)
    for (double v : img.px) {
        bool plane_level = std::abs(v - 0.6 * 0.04) < 1e-12;
        bool skin_level = std::abs(v - 0.85 * 0.04) < 1e-12;
        CHECK((plane_level || skin_level));
    }
    ImageF none = render_subframe(s, LightSelection::none());
    for (double v : none.px) CHECK(v == 0.0);
}

TEST_CASE("render: umbra tip matches the analytic tangent-cone tip within 1 px") {
    // The umbra apex is cast by the fingertip cap sphere's silhouette; the
    // analytic expectation comes from its tangent cone (see test_support).
    for (double h : {5.0, 10.0, 20.0, 40.0, 70.0, 100.0}) {
        // higher hovers displace the shadow further; keep it in frame
        Scene s = posed_default(h, 0, 120.0 - 0.9 * h);
        const CapsuleFinger& finger = s.fingers[0];
        GroundTruth gt = ground_truth(s);
        const FingerTruth& ft = gt.fingers[0];

        Vec2 dir = strip_direction_px(s, finger, 3);
        const HeadsetLed* led = s.find_led(3);
        Vec3 cap_center = finger.tip + finger.axis * finger.radius;
        Vec2 analytic = cone_umbra_tip(led->light.position, cap_center, finger.radius,
                                       s.surface.plane, s.camera, dir);

        UmbraOracle oracle = locate_umbra(s, 3, ft.tip_px, dir);
        REQUIRE(oracle.found);
        CHECK(oracle.regions == 1);

        // agreement measured along the strip (the gap axis): the rendered
        // boundary crossing must sit within 1 px of the analytic apex
        ImageF led_img = render_subframe(s, LightSelection::led_only(3));
        auto offset = umbra_crossing_offset(led_img, analytic, dir);
        REQUIRE(offset.has_value());
        INFO("h=", h, " along-strip offset=", *offset);
        CHECK(std::abs(*offset) <= 1.0);

        // the point-caster formula marks the gap origin: it must sit inside
        // the umbra, short of the tangent-cone apex along the strip
        REQUIRE(ft.shadow_tip_px.count(3) == 1);
        Vec2 point_formula = ft.shadow_tip_px.at(3);
        CHECK((analytic - point_formula).dot(dir) >= -1.0);
    }
}

TEST_CASE("render_sequence: timing, determinism, dark scene") {
    Scene s = posed_default(8.0);
    s.render.noise.enabled = false;

    CompositeFrame a = render_sequence(s, 0, 0, 99);
    REQUIRE(a.subframes.size() == 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(a.subframes[size_t(k)].sequence_step == k);
        CHECK(a.subframes[size_t(k)].timestamp_us == uint64_t(k) * 2500);
    }
    // full firing sequence spans 5 * 2.5 ms = 12.5 ms
    CHECK(a.subframes[4].timestamp_us - a.subframes[0].timestamp_us + kSubframeSpacingUs ==
          12500);

    CompositeFrame b = render_sequence(s, 0, 0, 99);
    for (int k = 0; k < 5; ++k) CHECK(a.subframes[size_t(k)].image == b.subframes[size_t(k)].image);

    // noise on, same seed -> identical; different seed -> different
    s.render.noise.enabled = true;
    CompositeFrame n1 = render_sequence(s, 0, 0, 7);
    CompositeFrame n2 = render_sequence(s, 0, 0, 7);
    CompositeFrame n3 = render_sequence(s, 0, 0, 8);
    CHECK(n1.subframes[2].image == n2.subframes[2].image);
    CHECK_FALSE(n1.subframes[2].image == n3.subframes[2].image);

    // zero ambient lights + zero floor -> ambient subframe all zeros
    Scene dark = posed_default(8.0);
    dark.ambient_lights.clear();
    dark.ambient_floor = 0.0;
    dark.render.noise.enabled = false;
    CompositeFrame d = render_sequence(dark, 0, 0, 1);
    for (uint8_t v : d.subframes[0].image.px) CHECK(v == 0);
}

TEST_CASE("ground truth: touch flag respects the contact epsilon") {
    Scene touching = posed_default(0.0);
    GroundTruth gt0 = ground_truth(touching);
    CHECK(gt0.fingers[0].touch);
    CHECK(gt0.fingers[0].hover_mm == doctest::Approx(0.0));

    Scene nearby = posed_default(0.6);
    GroundTruth gt6 = ground_truth(nearby);
    CHECK_FALSE(gt6.fingers[0].touch);  // epsilon is 0.5 mm
    CHECK(gt6.fingers[0].hover_mm == doctest::Approx(0.6));
}

TEST_CASE("scene validation rejects bad configurations") {
    Scene s = make_default_scene();
    s.headset_leds.clear();
    CHECK_THROWS_AS(s.validate(), Error);

    Scene dup = make_default_scene();
    dup.headset_leds.push_back(dup.headset_leds[0]);
    CHECK_THROWS_AS(dup.validate(), Error);

    Scene bad_finger = make_default_scene();
    bad_finger.fingers[0].radius = 0.0;
    CHECK_THROWS_AS(bad_finger.validate(), Error);
}
