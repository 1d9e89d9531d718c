#include "ctxrace/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "ctxrace/error.hpp"

namespace ctxrace {

void LidarConfig::validate() const {
    if (beams < 2) throw ConfigError("lidar.beams must be >= 2");
    if (!(fov > 0.0) || fov > 2.0 * std::numbers::pi) throw ConfigError("lidar.fov must be in (0, 2*pi]");
    if (!(max_range > 0.0)) throw ConfigError("lidar.max_range must be > 0");
    if (!(noise_std >= 0.0)) throw ConfigError("lidar.noise_std must be >= 0");
}

double LidarConfig::beam_angle(int k) const { return -0.5 * fov + k * fov / (beams - 1); }

namespace {

double nearest_hit(Vec2 origin, Vec2 dir, std::span<const Segment> segs, double best) {
    for (const Segment& s : segs) {
        if (const auto t = ray_segment_intersection(origin, dir, s); t && *t < best) best = *t;
    }
    return best;
}

double nearest_box_hit(Vec2 origin, Vec2 dir, const std::vector<OrientedBox>& boxes, double best) {
    for (const OrientedBox& b : boxes) {
        const auto edges = b.edges();
        best = nearest_hit(origin, dir, edges, best);
    }
    return best;
}

}  // namespace

double cast_ray(Vec2 origin, double angle, const ObstacleSet& obstacles, double max_range) {
    const Vec2 dir = from_angle(angle);
    double best = nearest_hit(origin, dir, obstacles.walls, max_range);
    best = nearest_box_hit(origin, dir, obstacles.boxes, best);
    return std::min(best, max_range);
}

LidarScan scan(const VehicleState& state, const ObstacleSet& obstacles, const LidarConfig& cfg) {
    const Vec2 origin = state.position();
    // Walls entirely out of range cannot shorten any beam.
    std::vector<Segment> near;
    near.reserve(obstacles.walls.size());
    for (const Segment& s : obstacles.walls) {
        if (closest_point_on_segment(origin, s.a, s.b).distance <= cfg.max_range) near.push_back(s);
    }

    LidarScan out;
    out.beams.resize(static_cast<std::size_t>(cfg.beams));
    for (int k = 0; k < cfg.beams; ++k) {
        const Vec2 dir = from_angle(state.yaw + cfg.beam_angle(k));
        double d = nearest_hit(origin, dir, near, cfg.max_range);
        d = nearest_box_hit(origin, dir, obstacles.boxes, d);
        out.beams[static_cast<std::size_t>(k)] = std::clamp(d / cfg.max_range, 0.0, 1.0);
    }
    return out;
}

LidarScan apply_noise(const LidarScan& clean, Rng& rng, double sigma) {
    LidarScan out = clean;
    std::vector<double> noise(clean.beams.size());
    fill_gaussian(rng, noise, sigma);
    for (std::size_t i = 0; i < out.beams.size(); ++i) out.beams[i] = std::clamp(out.beams[i] + noise[i], 0.0, 1.0);
    return out;
}

}  // namespace ctxrace
