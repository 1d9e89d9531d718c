#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace ctxrace {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
    constexpr Vec2 operator/(double k) const { return {x / k, y / k}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double k, Vec2 v) { return v * k; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
/// Left-hand perpendicular (rotation by +90 degrees).
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 unit(Vec2 v) {
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec2{};
}
inline Vec2 from_angle(double a) { return {std::cos(a), std::sin(a)}; }
inline Vec2 rotate(Vec2 v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

struct Segment {
    Vec2 a;
    Vec2 b;
};

struct ClosestPoint {
    Vec2 point;
    double t = 0.0;  // parameter along the segment in [0, 1]
    double distance = 0.0;
};

ClosestPoint closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b);

/// Distance along the ray `origin + t * dir` (dir unit length) to the first
/// intersection with segment `s`, or nullopt if the ray misses it.
std::optional<double> ray_segment_intersection(Vec2 origin, Vec2 dir, const Segment& s);

/// Closed-set test: touching endpoints and collinear overlap count.
bool segments_intersect(const Segment& s, const Segment& t);

/// Even-odd rule point-in-polygon. The polygon is implicitly closed.
bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);

/// Oriented rectangle used both as the collision body and the lidar target of
/// a vehicle.
struct OrientedBox {
    Vec2 center;
    double yaw = 0.0;
    double length = 0.0;
    double width = 0.0;

    /// Corners in counter-clockwise order starting front-left.
    std::array<Vec2, 4> corners() const;
    std::array<Segment, 4> edges() const;
};

/// Separating-axis overlap test. Boxes that touch exactly count as overlapping.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// Signed curvature of the circle through three points (positive for a left
/// turn). Returns 0 for collinear or coincident points.
double menger_curvature(Vec2 a, Vec2 b, Vec2 c);

}  // namespace ctxrace
