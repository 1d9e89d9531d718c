#include "ctxrace/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ctxrace {

ClosestPoint closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double len2 = dot(e, e);
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(dot(p - a, e) / len2, 0.0, 1.0);
    const Vec2 q = a + e * t;
    return {q, t, distance(p, q)};
}

std::optional<double> ray_segment_intersection(Vec2 origin, Vec2 dir, const Segment& s) {
    const Vec2 e = s.b - s.a;
    const Vec2 w = s.a - origin;
    const double denom = cross(dir, e);
    const double scale = norm(e) + 1.0;
    if (std::abs(denom) <= 1e-14 * scale) {
        // Parallel. Only a collinear segment can be hit, at its nearest endpoint.
        if (std::abs(cross(w, dir)) > 1e-12 * scale) return std::nullopt;
        const double ta = dot(s.a - origin, dir);
        const double tb = dot(s.b - origin, dir);
        if (ta < 0.0 && tb < 0.0) return std::nullopt;
        if (ta < 0.0 || tb < 0.0) return 0.0;
        return std::min(ta, tb);
    }
    const double t = cross(w, e) / denom;
    const double u = cross(w, dir) / denom;
    if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Segment& s, const Segment& t) {
    const int o1 = orientation(s.a, s.b, t.a);
    const int o2 = orientation(s.a, s.b, t.b);
    const int o3 = orientation(t.a, t.b, s.a);
    const int o4 = orientation(t.a, t.b, s.b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(s.a, s.b, t.a)) return true;
    if (o2 == 0 && on_segment(s.a, s.b, t.b)) return true;
    if (o3 == 0 && on_segment(t.a, t.b, s.a)) return true;
    if (o4 == 0 && on_segment(t.a, t.b, s.b)) return true;
    return false;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = polygon[i];
        const Vec2 b = polygon[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

std::array<Vec2, 4> OrientedBox::corners() const {
    const Vec2 f = from_angle(yaw) * (0.5 * length);
    const Vec2 l = perp(from_angle(yaw)) * (0.5 * width);
    return {center + f + l, center - f + l, center - f - l, center + f - l};
}

std::array<Segment, 4> OrientedBox::edges() const {
    const auto c = corners();
    return {Segment{c[0], c[1]}, Segment{c[1], c[2]}, Segment{c[2], c[3]}, Segment{c[3], c[0]}};
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::array<Vec2, 4> axes = {from_angle(a.yaw), perp(from_angle(a.yaw)), from_angle(b.yaw),
                                      perp(from_angle(b.yaw))};
    for (const Vec2 axis : axes) {
        double min_a = std::numeric_limits<double>::infinity(), max_a = -min_a;
        double min_b = min_a, max_b = max_a;
        for (const Vec2 c : ca) {
            const double p = dot(c, axis);
            min_a = std::min(min_a, p);
            max_a = std::max(max_a, p);
        }
        for (const Vec2 c : cb) {
            const double p = dot(c, axis);
            min_b = std::min(min_b, p);
            max_b = std::max(max_b, p);
        }
        if (max_a < min_b || max_b < min_a) return false;
    }
    return true;
}

double menger_curvature(Vec2 a, Vec2 b, Vec2 c) {
    const double denom = distance(a, b) * distance(b, c) * distance(a, c);
    if (denom <= 0.0) return 0.0;
    return 2.0 * cross(b - a, c - b) / denom;
}

}  // namespace ctxrace
