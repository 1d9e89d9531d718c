#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "ctxrace/dynamics.hpp"
#include "ctxrace/geometry.hpp"
#include "ctxrace/rng.hpp"

namespace ctxrace {

struct LidarConfig {
    int beams = 108;
    double fov = std::numbers::pi;  // [rad], centred on the heading
    double max_range = 10.0;        // [m]
    double noise_std = 0.01;        // on the normalised [0, 1] scale

    void validate() const;
    /// Angle of beam k relative to the heading.
    double beam_angle(int k) const;
};

/// Normalised ranges, each in [0, 1].
struct LidarScan {
    std::vector<double> beams;

    bool operator==(const LidarScan&) const = default;
};

/// Everything a ray can hit: static wall segments plus vehicle bodies.
struct ObstacleSet {
    std::span<const Segment> walls;
    std::vector<OrientedBox> boxes;
};

/// Distance from `origin` along `angle` to the nearest obstacle, capped at
/// `max_range`.
double cast_ray(Vec2 origin, double angle, const ObstacleSet& obstacles, double max_range);

/// Noise-free scan from the centre of `state`. The caller leaves the scanning
/// vehicle's own body out of `obstacles`.
LidarScan scan(const VehicleState& state, const ObstacleSet& obstacles, const LidarConfig& cfg);

/// Adds N(0, sigma^2) to every beam and clamps to [0, 1]. Always consumes the
/// same number of engine draws for a given beam count, even when sigma is 0.
LidarScan apply_noise(const LidarScan& clean, Rng& rng, double sigma);

}  // namespace ctxrace
