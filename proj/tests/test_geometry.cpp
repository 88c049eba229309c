#include <doctest.h>

#include <random>

#include "eclipse/geometry.hpp"

using namespace eclipse;

TEST_CASE("ray/plane intersection") {
    Plane ground{{0, 0, 0}, {0, 0, 1}};
    Ray down{{10, 5, 100}, {0, 0, -1}};
    auto t = intersect_ray_plane(down, ground);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(100.0));

    Ray parallel{{0, 0, 10}, {1, 0, 0}};
    CHECK_FALSE(intersect_ray_plane(parallel, ground).has_value());
}

TEST_CASE("ray/capsule: sphere cap, cylinder wall, miss") {
    Capsule cap{{0, 0, 0}, {0, 10, 0}, 2.0};

    // head-on into the a-cap
    Ray r1{{0, -10, 0}, {0, 1, 0}};
    auto t1 = intersect_ray_capsule(r1, cap);
    REQUIRE(t1.has_value());
    CHECK(*t1 == doctest::Approx(8.0));

    // perpendicular into the cylinder wall
    Ray r2{{-10, 5, 0}, {1, 0, 0}};
    auto t2 = intersect_ray_capsule(r2, cap);
    REQUIRE(t2.has_value());
    CHECK(*t2 == doctest::Approx(8.0));

    // near miss just outside the radius
    Ray r3{{-10, 5, 2.01}, {1, 0, 0}};
    CHECK_FALSE(intersect_ray_capsule(r3, cap).has_value());

    // grazing offset within the radius
    Ray r4{{-10, 5, 1.0}, {1, 0, 0}};
    REQUIRE(intersect_ray_capsule(r4, cap).has_value());
}

TEST_CASE("capsule normal points outward") {
    Capsule cap{{0, 0, 0}, {0, 10, 0}, 2.0};
    Vec3 n = capsule_normal(cap, {2, 5, 0});
    CHECK(n.x == doctest::Approx(1.0));
    CHECK(n.y == doctest::Approx(0.0));
    Vec3 tipn = capsule_normal(cap, {0, -2, 0});
    CHECK(tipn.y == doctest::Approx(-1.0));
}

TEST_CASE("look_at rotation maps forward to +z") {
    Vec3 eye{0, 0, 450};
    Mat3 r = look_at_rotation(eye, {0, 0, 0}, {0, 1, 0});
    Vec3 fwd = r * Vec3{0, 0, -1};  // world down
    CHECK(fwd.z == doctest::Approx(1.0));
    // world +y appears "up" in the image (negative camera y)
    Vec3 up = r * Vec3{0, 1, 0};
    CHECK(up.y == doctest::Approx(-1.0));
}

TEST_CASE("closest points between skew lines") {
    Ray a{{0, 0, 0}, {1, 0, 0}};
    Ray b{{5, 3, 4}, {0, 1, 0}};
    LineClosest lc = closest_points_between_lines(a, b);
    CHECK_FALSE(lc.parallel);
    CHECK(lc.t1 == doctest::Approx(5.0));
    CHECK(lc.t2 == doctest::Approx(-3.0));
    CHECK(lc.distance == doctest::Approx(4.0));

    // intersecting lines triangulate exactly
    Ray c{{0, 0, 0}, Vec3{1, 1, 1}.normalized()};
    Ray d{{2, 0, 0}, Vec3{-1, 1, 1}.normalized()};
    LineClosest lc2 = closest_points_between_lines(c, d);
    CHECK(lc2.distance == doctest::Approx(0.0).epsilon(1e-12));
    Vec3 p = c.at(lc2.t1);
    CHECK(p.x == doctest::Approx(1.0));
    CHECK(p.y == doctest::Approx(1.0));
}

TEST_CASE("parallel lines are flagged") {
    Ray a{{0, 0, 0}, {1, 0, 0}};
    Ray b{{0, 1, 0}, {1, 0, 0}};
    CHECK(closest_points_between_lines(a, b).parallel);
}

TEST_CASE("pose round-trip") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-100, 100);
    Mat3 r = look_at_rotation({u(rng), u(rng), 300}, {u(rng), u(rng), 0}, {0, 1, 0});
    Pose pose{r, {u(rng), u(rng), u(rng)}};
    for (int i = 0; i < 20; ++i) {
        Vec3 p{u(rng), u(rng), u(rng)};
        Vec3 q = pose.apply_inverse(pose.apply(p));
        CHECK((q - p).norm() == doctest::Approx(0.0).epsilon(1e-9));
    }
}
