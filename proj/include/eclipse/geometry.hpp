#pragma once
// Minimal 3-D math kit: vectors, rotations, rays, plane/capsule intersections.
// Units are millimeters throughout unless a name says otherwise.

#include <array>
#include <cmath>
#include <optional>

namespace eclipse {

constexpr double kGeomEps = 1e-9;

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    Vec2 normalized() const {
        double n = norm();
        return n > kGeomEps ? Vec2{x / n, y / n} : Vec2{};
    }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        return n > kGeomEps ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Row-major 3x3 rotation matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        return {{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
    }
    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 transposed() const {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }
};

// Rigid transform world -> local: x_local = r * x_world + t.
struct Pose {
    Mat3 r;
    Vec3 t;

    Vec3 apply(const Vec3& world) const { return r * world + t; }
    Vec3 apply_inverse(const Vec3& local) const { return r.transposed() * (local - t); }
    Vec3 center() const { return r.transposed() * (-t); }
};

struct Plane {
    Vec3 origin;                 // any point on the plane
    Vec3 normal{0, 0, 1};        // unit

    // Signed height of a point above the plane.
    double height_of(const Vec3& p) const { return normal.dot(p - origin); }
    // Orthogonal projection onto the plane.
    Vec3 project(const Vec3& p) const { return p - normal * height_of(p); }
};

struct Ray {
    Vec3 origin;
    Vec3 dir;                    // unit

    Vec3 at(double t) const { return origin + dir * t; }
};

// Hemisphere-capped cylinder between segment endpoints a..b.
struct Capsule {
    Vec3 a, b;
    double radius = 8.0;
};

inline std::optional<double> intersect_ray_plane(const Ray& ray, const Plane& plane) {
    double denom = plane.normal.dot(ray.dir);
    if (std::abs(denom) < kGeomEps) return std::nullopt;
    double t = plane.normal.dot(plane.origin - ray.origin) / denom;
    if (t <= kGeomEps) return std::nullopt;
    return t;
}

namespace detail {

inline std::optional<double> intersect_ray_sphere(const Ray& ray, const Vec3& c, double r) {
    Vec3 oc = ray.origin - c;
    double b = oc.dot(ray.dir);
    double disc = b * b - (oc.norm2() - r * r);
    if (disc < 0.0) return std::nullopt;
    double s = std::sqrt(disc);
    double t = -b - s;
    if (t > kGeomEps) return t;
    t = -b + s;
    if (t > kGeomEps) return t;
    return std::nullopt;
}

}  // namespace detail

// Nearest positive intersection of a ray with a capsule.
inline std::optional<double> intersect_ray_capsule(const Ray& ray, const Capsule& cap) {
    Vec3 axis = cap.b - cap.a;
    double axis2 = axis.norm2();
    std::optional<double> best;

    auto consider = [&best](std::optional<double> t) {
        if (t && (!best || *t < *best)) best = t;
    };

    if (axis2 < kGeomEps) {
        return detail::intersect_ray_sphere(ray, cap.a, cap.radius);
    }

    // Infinite cylinder around the axis, clipped to the segment span.
    Vec3 m = ray.origin - cap.a;
    double dv = ray.dir.dot(axis);
    double mv = m.dot(axis);
    Vec3 dPerp = ray.dir - axis * (dv / axis2);
    Vec3 mPerp = m - axis * (mv / axis2);
    double A = dPerp.norm2();
    double B = 2.0 * mPerp.dot(dPerp);
    double C = mPerp.norm2() - cap.radius * cap.radius;
    if (A > kGeomEps) {
        double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            double s = std::sqrt(disc);
            for (double t : {(-B - s) / (2.0 * A), (-B + s) / (2.0 * A)}) {
                if (t <= kGeomEps) continue;
                double u = (mv + t * dv) / axis2;
                if (u >= 0.0 && u <= 1.0) consider(t);
            }
        }
    }
    consider(detail::intersect_ray_sphere(ray, cap.a, cap.radius));
    consider(detail::intersect_ray_sphere(ray, cap.b, cap.radius));
    return best;
}

// Outward surface normal of a capsule at a point on (or near) its surface.
inline Vec3 capsule_normal(const Capsule& cap, const Vec3& p) {
    Vec3 axis = cap.b - cap.a;
    double axis2 = axis.norm2();
    double u = axis2 > kGeomEps ? (p - cap.a).dot(axis) / axis2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    Vec3 closest = cap.a + axis * u;
    return (p - closest).normalized();
}

// Camera-style look-at rotation (x right, y down, z forward).
inline Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up_hint) {
    Vec3 fwd = (target - eye).normalized();
    Vec3 right = fwd.cross(up_hint);
    if (right.norm() < 1e-6) right = fwd.cross(Vec3{1, 0, 0});
    right = right.normalized();
    // rows map world axes into camera x (right), y (down), z (forward)
    Vec3 ycam = right.cross(fwd) * -1.0;
    return Mat3::from_rows(right, ycam, fwd);
}

// Closest points between two lines; returns params (t1, t2) and separation.
struct LineClosest {
    double t1 = 0, t2 = 0;
    double distance = 0;
    bool parallel = false;
};

inline LineClosest closest_points_between_lines(const Ray& r1, const Ray& r2) {
    Vec3 w0 = r1.origin - r2.origin;
    double a = r1.dir.dot(r1.dir);
    double b = r1.dir.dot(r2.dir);
    double c = r2.dir.dot(r2.dir);
    double d = r1.dir.dot(w0);
    double e = r2.dir.dot(w0);
    double denom = a * c - b * b;
    LineClosest out;
    if (denom < 1e-12 * a * c || denom < 1e-300) {
        out.parallel = true;
        out.t1 = 0;
        out.t2 = c > kGeomEps ? e / c : 0;
    } else {
        out.t1 = (b * e - c * d) / denom;
        out.t2 = (a * e - b * d) / denom;
    }
    out.distance = (r1.at(out.t1) - r2.at(out.t2)).norm();
    return out;
}

}  // namespace eclipse
