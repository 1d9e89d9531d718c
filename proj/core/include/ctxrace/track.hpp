#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxrace/geometry.hpp"

namespace ctxrace {

struct TrackPoint {
    Vec2 p;
    double w_left = 0.0;   // [m] to the left of the direction of travel
    double w_right = 0.0;  // [m]

    bool operator==(const TrackPoint&) const = default;
};

/// Result of projecting a pose onto the centerline.
struct TrackPose {
    double s = 0.0;        // arc length of the nearest centerline point [m]
    double d_c = 0.0;      // unsigned distance to the centerline [m]
    double phi = 0.0;      // heading error w.r.t. the road tangent, (-pi, pi]
    bool inside = false;   // between the two boundaries
    double lateral = 0.0;  // signed offset, positive to the left [m]
    std::size_t segment = 0;
};

/// Per-caller state that speeds up sequential projections of a slowly
/// moving point. Never share one between threads.
struct ProjectionCache {
    std::optional<std::size_t> segment;
    Vec2 last;  // query that produced `segment`
};

/// Closed-loop track: centerline polyline with per-point widths. Immutable
/// once built; every query is const and thread-safe.
class Track {
  public:
    static constexpr std::size_t kMinPoints = 16;

    /// Validates the loop and derives boundaries. Loops with fewer than
    /// kMinPoints vertices are densified by collinear subdivision, which
    /// leaves the geometry unchanged. A trailing point equal to the first is
    /// dropped. Throws ValidationError naming the violated invariant.
    static Track from_points(std::vector<TrackPoint> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<TrackPoint>& points() const { return points_; }
    std::span<const double> cum_s() const { return cum_s_; }
    double total_length() const { return total_length_; }
    std::span<const Vec2> left_boundary() const { return left_; }
    std::span<const Vec2> right_boundary() const { return right_; }
    /// Both boundary polylines as closed segment lists (left first).
    std::span<const Segment> walls() const { return walls_; }

    TrackPose project(Vec2 p, double yaw, ProjectionCache* cache = nullptr) const;
    /// True when `p` lies between the two boundary polygons.
    bool contains(Vec2 p) const;

    Vec2 point_at(double s) const;
    double heading_at(double s) const;
    /// Unit left normal, blended linearly along each segment between the
    /// bisector normals of its end points, so it turns continuously.
    Vec2 normal_at(double s) const;
    /// Linearly interpolated widths at arc length `s`: {left, right}.
    std::pair<double, double> widths_at(double s) const;

    /// Uniformly spaced copy of the centerline (at least kMinPoints points).
    std::vector<TrackPoint> resampled(double spacing) const;

    /// Stable 64-bit content hash (FNV-1a over the raw point data).
    std::uint64_t hash() const;

  private:
    Track() = default;
    std::size_t segment_at(double s) const;

    std::vector<TrackPoint> points_;
    std::vector<double> cum_s_;
    std::vector<double> seg_len_;
    std::vector<double> seg_heading_;
    double total_length_ = 0.0;
    std::vector<Vec2> left_;
    std::vector<Vec2> right_;
    std::vector<Segment> walls_;
};

/// Rows of `x, y, w_left, w_right`; blank lines and `#` comments are skipped.
Track parse_track_csv(std::istream& in);
Track load_track(const std::filesystem::path& path);
void write_track_csv(std::ostream& out, const Track& track);
void save_track(const std::filesystem::path& path, const Track& track);

/// Lap fraction completed since `s_start`, never negative.
double progress_fraction(double total_length, double s_start, double s_now, int laps_signed);

/// Counts signed crossings of the start line from successive arc-length
/// samples. A jump of more than half a lap between two samples is read as a
/// crossing (forward when the shifted coordinate wraps from high to low).
class LapCounter {
  public:
    LapCounter() = default;
    LapCounter(double total_length, double s_start);

    void update(double s);
    int laps() const { return laps_; }
    double s_start() const { return s_start_; }
    /// Distance travelled along the loop since the start line [m].
    double distance() const { return shifted_ + laps_ * total_length_; }
    double progress() const;

  private:
    double total_length_ = 1.0;
    double s_start_ = 0.0;
    double shifted_ = 0.0;
    int laps_ = 0;
};

/// Synthetic layouts. All are counter-clockwise and start at the middle of the
/// bottom straight (or at angle 0 for the circle).
namespace tracks {

Track oval(double straight_length = 12.0, double radius = 6.0, double half_width = 1.2, double spacing = 0.25);
Track circle(double radius = 10.0, double half_width = 1.5, std::size_t n_points = 256);
/// Square corridor, side measured along the centerline, sharp corners.
Track square(double side = 10.0, double half_width = 1.0, std::size_t points_per_side = 8);
/// Rounded rectangle with one tight corner (bottom-right) and three gentle ones.
Track single_corner(double width = 20.0, double height = 14.0, double tight_radius = 1.6, double gentle_radius = 5.0,
                    double half_width = 1.2, double spacing = 0.2);

}  // namespace tracks

}  // namespace ctxrace
