#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctxrace/geometry.hpp"
#include "ctxrace/track.hpp"

namespace ctxrace {

struct RacelinePoint {
    double s = 0.0;
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double curvature = 0.0;  // signed, positive turning left [1/m]
    double target_speed = 0.0;

    Vec2 position() const { return {x, y}; }
    bool operator==(const RacelinePoint&) const = default;
};

struct RacelineParams {
    double a_lat_max = 6.0;   // [m/s^2]
    double a_long_max = 7.0;  // [m/s^2]
    double v_max = 8.0;       // [m/s]
    double margin = 0.25;     // [m] kept free on both sides
    double spacing = 0.1;     // [m] final resampling step
    int max_iterations = 200;  // projected Newton iterations
    double tolerance = 1e-9;   // [m] largest offset change that ends the solve

    void validate() const;
};

/// Closed path produced by the optimiser with the lateral offset of every
/// point from the resampled centerline (positive to the left).
struct RacelineGeometry {
    std::vector<Vec2> points;
    std::vector<double> offsets;
    int iterations = 0;
};

/// Sum over the closed loop of |p[i-1] - 2 p[i] + p[i+1]|^2.
double curvature_objective(std::span<const Vec2> points);

/// Minimizes curvature_objective over lateral offsets of the centerline
/// resampled at `params.spacing`, each offset boxed by the widths less the
/// margin. The problem is a bound-constrained QP, solved by projected Newton.
/// Throws ConfigError when the track is narrower than twice the margin.
RacelineGeometry optimize_raceline(const Track& track, const RacelineParams& params);

class Raceline;

/// Curvature-limited speed profile over a closed path, made consistent with
/// the longitudinal limit by forward and backward passes until neither
/// changes anything.
Raceline velocity_profile(std::span<const Vec2> geometry, double a_lat_max, double a_long_max, double v_max);

struct LookaheadPoint {
    std::size_t index = 0;
    Vec2 point;
    double target_speed = 0.0;
    double arc_distance = 0.0;  // along the raceline from the projection [m]
};

class Raceline {
  public:
    /// Validates ordering and speeds; throws ValidationError.
    static Raceline from_points(std::vector<RacelinePoint> points, double total_length);

    const std::vector<RacelinePoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double total_length() const { return total_length_; }

    /// Arc length of the closest point on the raceline polyline.
    double project(Vec2 p, ProjectionCache* cache = nullptr) const;
    double cross_track_error(Vec2 p) const;

    /// First raceline point at least `lookahead` metres ahead of the
    /// projection of `p`, wrapping around the loop.
    LookaheadPoint lookahead_point(Vec2 p, double lookahead, ProjectionCache* cache = nullptr) const;

  private:
    Raceline() = default;
    std::vector<RacelinePoint> points_;
    std::vector<double> seg_len_;
    double total_length_ = 0.0;
};

/// Optimised geometry plus velocity profile.
Raceline compute_raceline(const Track& track, const RacelineParams& params);

/// True when every raceline point sits inside the track with `margin` to
/// spare on both sides (up to `tol`).
bool raceline_within_track(const Track& track, const Raceline& raceline, double margin, double tol = 1e-6);

/// Rows of `s, x, y, heading, curvature, target_speed`.
Raceline parse_raceline_csv(std::istream& in);
Raceline load_raceline(const std::filesystem::path& path);
void write_raceline_csv(std::ostream& out, const Raceline& raceline);
void save_raceline(const std::filesystem::path& path, const Raceline& raceline);

/// Cache file name derived from the track content and every parameter.
std::string raceline_cache_key(const Track& track, const RacelineParams& params);

/// Loads `<cache_dir>/<key>.csv` if present, otherwise computes and stores it.
Raceline load_or_compute_raceline(const Track& track, const RacelineParams& params,
                                  const std::filesystem::path& cache_dir);

}  // namespace ctxrace
