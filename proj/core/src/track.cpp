#include "ctxrace/track.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ctxrace/error.hpp"
#include "loop_search.hpp"

namespace ctxrace {

namespace {

constexpr double kMaxMiter = 4.0;

// Sweep-and-prune over segment bounding boxes; reports the first pair of
// non-adjacent intersecting segments. Adjacent pairs share an endpoint and
// are skipped, as is any pair the caller rejects via `adjacent`.
template <typename Adjacent>
std::optional<std::pair<std::size_t, std::size_t>> find_crossing(std::span<const Segment> segs, Adjacent adjacent) {
    std::vector<std::size_t> order(segs.size());
    std::iota(order.begin(), order.end(), 0);
    const auto min_x = [&](std::size_t i) { return std::min(segs[i].a.x, segs[i].b.x); };
    const auto max_x = [&](std::size_t i) { return std::max(segs[i].a.x, segs[i].b.x); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return min_x(a) < min_x(b); });
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        const double reach = max_x(i);
        for (std::size_t m = k + 1; m < order.size() && min_x(order[m]) <= reach; ++m) {
            const std::size_t j = order[m];
            if (adjacent(i, j)) continue;
            const double iy0 = std::min(segs[i].a.y, segs[i].b.y), iy1 = std::max(segs[i].a.y, segs[i].b.y);
            const double jy0 = std::min(segs[j].a.y, segs[j].b.y), jy1 = std::max(segs[j].a.y, segs[j].b.y);
            if (iy1 < jy0 || jy1 < iy0) continue;
            if (segments_intersect(segs[i], segs[j])) return std::pair{std::min(i, j), std::max(i, j)};
        }
    }
    return std::nullopt;
}

std::vector<Segment> closed_segments(std::span<const Vec2> pts) {
    std::vector<Segment> out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i], pts[(i + 1) % pts.size()]});
    return out;
}

void check_simple(std::span<const Vec2> pts, const char* name) {
    const auto segs = closed_segments(pts);
    const std::size_t n = segs.size();
    const auto adjacent = [n](std::size_t i, std::size_t j) {
        const std::size_t d = i > j ? i - j : j - i;
        return d <= 1 || d == n - 1;
    };
    if (auto hit = find_crossing(segs, adjacent)) {
        throw ValidationError(std::string(name) + " polyline self-intersects (segments " + std::to_string(hit->first) +
                              " and " + std::to_string(hit->second) + ")");
    }
}

std::vector<TrackPoint> densify(const std::vector<TrackPoint>& pts, std::size_t min_points) {
    const std::size_t per_edge = (min_points + pts.size() - 1) / pts.size();
    std::vector<TrackPoint> out;
    out.reserve(pts.size() * per_edge);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const TrackPoint& a = pts[i];
        const TrackPoint& b = pts[(i + 1) % pts.size()];
        for (std::size_t k = 0; k < per_edge; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(per_edge);
            out.push_back({a.p + (b.p - a.p) * t, a.w_left + (b.w_left - a.w_left) * t,
                           a.w_right + (b.w_right - a.w_right) * t});
        }
    }
    return out;
}

}  // namespace

Track Track::from_points(std::vector<TrackPoint> points) {
    for (const TrackPoint& tp : points) {
        if (!std::isfinite(tp.p.x) || !std::isfinite(tp.p.y) || !std::isfinite(tp.w_left) || !std::isfinite(tp.w_right))
            throw ValidationError("track contains non-finite values");
        if (!(tp.w_left > 0.0) || !(tp.w_right > 0.0)) throw ValidationError("track widths must be strictly positive");
    }
    if (points.size() >= 2 && distance(points.front().p, points.back().p) <= 1e-9) points.pop_back();
    if (points.size() < 3) throw ValidationError("track needs at least 3 distinct points");

    std::vector<double> lens(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        lens[i] = distance(points[i].p, points[(i + 1) % points.size()].p);
        if (lens[i] <= 1e-9) throw ValidationError("cum_s must be strictly increasing: repeated point at row " +
                                                   std::to_string(i + 1));
    }
    // A loop is treated as open when the implicit closing edge dwarfs the rest.
    std::vector<double> others(lens.begin(), lens.end() - 1);
    std::nth_element(others.begin(), others.begin() + others.size() / 2, others.end());
    const double median = others[others.size() / 2];
    if (lens.back() > 10.0 * median) {
        throw ValidationError("track loop is not closed: closing edge is " + std::to_string(lens.back()) +
                              " m against a median edge of " + std::to_string(median) + " m");
    }

    if (points.size() < kMinPoints) points = densify(points, kMinPoints);

    Track t;
    t.points_ = std::move(points);
    const std::size_t n = t.points_.size();
    t.cum_s_.resize(n);
    t.seg_len_.resize(n);
    t.seg_heading_.resize(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = t.points_[i].p;
        const Vec2 b = t.points_[(i + 1) % n].p;
        t.cum_s_[i] = s;
        t.seg_len_[i] = distance(a, b);
        t.seg_heading_[i] = std::atan2(b.y - a.y, b.x - a.x);
        s += t.seg_len_[i];
    }
    t.total_length_ = s;

    t.left_.resize(n);
    t.right_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 n0 = perp(from_angle(t.seg_heading_[(i + n - 1) % n]));
        const Vec2 n1 = perp(from_angle(t.seg_heading_[i]));
        const Vec2 sum = n0 + n1;
        if (norm(sum) < 1e-9) throw ValidationError("centerline reverses direction at row " + std::to_string(i + 1));
        const Vec2 bisector = unit(sum);
        const double scale = std::min(kMaxMiter, 1.0 / dot(bisector, n1));
        t.left_[i] = t.points_[i].p + bisector * (scale * t.points_[i].w_left);
        t.right_[i] = t.points_[i].p - bisector * (scale * t.points_[i].w_right);
    }

    std::vector<Vec2> centre(n);
    for (std::size_t i = 0; i < n; ++i) centre[i] = t.points_[i].p;
    check_simple(centre, "centerline");
    check_simple(t.left_, "left boundary");
    check_simple(t.right_, "right boundary");

    t.walls_ = closed_segments(t.left_);
    const auto right_walls = closed_segments(t.right_);
    t.walls_.insert(t.walls_.end(), right_walls.begin(), right_walls.end());
    const auto no_adjacent = [n](std::size_t i, std::size_t j) { return (i < n) == (j < n); };
    if (find_crossing(t.walls_, no_adjacent)) throw ValidationError("left and right boundaries intersect");
    return t;
}

TrackPose Track::project(Vec2 p, double yaw, ProjectionCache* cache) const {
    const std::size_t n = points_.size();
    const std::size_t seg =
        detail::nearest_loop_segment(n, [this](std::size_t i) { return points_[i].p; }, p, cache);

    const Vec2 a = points_[seg].p;
    const Vec2 b = points_[(seg + 1) % n].p;
    const ClosestPoint cp = closest_point_on_segment(p, a, b);
    TrackPose pose;
    pose.segment = seg;
    pose.s = cum_s_[seg] + cp.t * seg_len_[seg];
    if (pose.s >= total_length_) pose.s -= total_length_;
    pose.d_c = cp.distance;
    pose.phi = wrap_angle(yaw - seg_heading_[seg]);
    const double side = cross(b - a, p - cp.point);
    pose.lateral = side >= 0.0 ? cp.distance : -cp.distance;
    pose.inside = contains(p);
    return pose;
}

bool Track::contains(Vec2 p) const { return point_in_polygon(p, left_) != point_in_polygon(p, right_); }

std::size_t Track::segment_at(double s) const {
    s = std::fmod(s, total_length_);
    if (s < 0.0) s += total_length_;
    const auto it = std::upper_bound(cum_s_.begin(), cum_s_.end(), s);
    return static_cast<std::size_t>(std::distance(cum_s_.begin(), it)) - 1;
}

Vec2 Track::point_at(double s) const {
    const std::size_t i = segment_at(s);
    double local = std::fmod(s, total_length_);
    if (local < 0.0) local += total_length_;
    const double t = std::clamp((local - cum_s_[i]) / seg_len_[i], 0.0, 1.0);
    const Vec2 a = points_[i].p;
    const Vec2 b = points_[(i + 1) % points_.size()].p;
    return a + (b - a) * t;
}

double Track::heading_at(double s) const { return seg_heading_[segment_at(s)]; }

Vec2 Track::normal_at(double s) const {
    const std::size_t n = points_.size();
    const std::size_t i = segment_at(s);
    double local = std::fmod(s, total_length_);
    if (local < 0.0) local += total_length_;
    const double t = std::clamp((local - cum_s_[i]) / seg_len_[i], 0.0, 1.0);
    const auto bisector = [&](std::size_t k) {
        return perp(unit(points_[(k + 1) % n].p - points_[(k + n - 1) % n].p));
    };
    return unit(bisector(i) * (1.0 - t) + bisector((i + 1) % n) * t);
}

std::pair<double, double> Track::widths_at(double s) const {
    const std::size_t i = segment_at(s);
    double local = std::fmod(s, total_length_);
    if (local < 0.0) local += total_length_;
    const double t = std::clamp((local - cum_s_[i]) / seg_len_[i], 0.0, 1.0);
    const TrackPoint& a = points_[i];
    const TrackPoint& b = points_[(i + 1) % points_.size()];
    return {a.w_left + (b.w_left - a.w_left) * t, a.w_right + (b.w_right - a.w_right) * t};
}

std::vector<TrackPoint> Track::resampled(double spacing) const {
    if (!(spacing > 0.0)) throw ConfigError("resampling spacing must be > 0");
    const auto count = std::max<std::size_t>(kMinPoints, static_cast<std::size_t>(std::llround(total_length_ / spacing)));
    std::vector<TrackPoint> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double s = total_length_ * static_cast<double>(k) / static_cast<double>(count);
        const auto [wl, wr] = widths_at(s);
        out.push_back({point_at(s), wl, wr});
    }
    return out;
}

std::uint64_t Track::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto feed = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (const TrackPoint& tp : points_) {
        feed(tp.p.x);
        feed(tp.p.y);
        feed(tp.w_left);
        feed(tp.w_right);
    }
    return h;
}

Track parse_track_csv(std::istream& in) {
    std::vector<TrackPoint> pts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        double vals[4];
        std::size_t field = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            std::string_view tok(line.data() + pos, (comma == std::string::npos ? line.size() : comma) - pos);
            while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
            while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
            if (field >= 4) throw ParseError("expected 4 fields (x, y, w_left, w_right)", line_no);
            double v = 0.0;
            const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (tok.empty() || ec != std::errc() || end != tok.data() + tok.size())
                throw ParseError("invalid number '" + std::string(tok) + "'", line_no);
            vals[field++] = v;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (field != 4) throw ParseError("expected 4 fields (x, y, w_left, w_right)", line_no);
        pts.push_back({{vals[0], vals[1]}, vals[2], vals[3]});
    }
    return Track::from_points(std::move(pts));
}

Track load_track(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open track file " + path.string());
    return parse_track_csv(in);
}

void write_track_csv(std::ostream& out, const Track& track) {
    out << "# x, y, w_left, w_right\n";
    char buf[128];
    for (const TrackPoint& tp : track.points()) {
        std::snprintf(buf, sizeof buf, "%.17g, %.17g, %.17g, %.17g\n", tp.p.x, tp.p.y, tp.w_left, tp.w_right);
        out << buf;
    }
}

void save_track(const std::filesystem::path& path, const Track& track) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write track file " + path.string());
    write_track_csv(out, track);
}

double progress_fraction(double total_length, double s_start, double s_now, int laps_signed) {
    double shifted = std::fmod(s_now - s_start, total_length);
    if (shifted < 0.0) shifted += total_length;
    return std::max(0.0, (shifted + laps_signed * total_length) / total_length);
}

LapCounter::LapCounter(double total_length, double s_start) : total_length_(total_length), s_start_(s_start) {}

void LapCounter::update(double s) {
    double shifted = std::fmod(s - s_start_, total_length_);
    if (shifted < 0.0) shifted += total_length_;
    const double jump = shifted - shifted_;
    if (jump < -0.5 * total_length_) ++laps_;
    else if (jump > 0.5 * total_length_) --laps_;
    shifted_ = shifted;
}

double LapCounter::progress() const { return std::max(0.0, distance() / total_length_); }

namespace tracks {

namespace {

void append_line(std::vector<TrackPoint>& out, Vec2 a, Vec2 b, double w, double spacing) {
    const auto n = std::max<long long>(1, static_cast<long long>(std::ceil(distance(a, b) / spacing - 1e-9)));
    for (long long k = 0; k < n; ++k) out.push_back({a + (b - a) * (static_cast<double>(k) / n), w, w});
}

void append_arc(std::vector<TrackPoint>& out, Vec2 centre, double radius, double a0, double sweep, double w,
                double spacing) {
    const auto n = std::max<long long>(1, static_cast<long long>(std::ceil(radius * std::abs(sweep) / spacing - 1e-9)));
    for (long long k = 0; k < n; ++k) {
        const double a = a0 + sweep * (static_cast<double>(k) / n);
        out.push_back({centre + from_angle(a) * radius, w, w});
    }
}

}  // namespace

Track oval(double straight_length, double radius, double half_width, double spacing) {
    using std::numbers::pi;
    const double h = straight_length / 2;
    std::vector<TrackPoint> pts;
    append_line(pts, {0, -radius}, {h, -radius}, half_width, spacing);
    append_arc(pts, {h, 0}, radius, -pi / 2, pi, half_width, spacing);
    append_line(pts, {h, radius}, {-h, radius}, half_width, spacing);
    append_arc(pts, {-h, 0}, radius, pi / 2, pi, half_width, spacing);
    append_line(pts, {-h, -radius}, {0, -radius}, half_width, spacing);
    return Track::from_points(std::move(pts));
}

Track circle(double radius, double half_width, std::size_t n_points) {
    std::vector<TrackPoint> pts;
    for (std::size_t k = 0; k < n_points; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_points);
        pts.push_back({from_angle(a) * radius, half_width, half_width});
    }
    return Track::from_points(std::move(pts));
}

Track square(double side, double half_width, std::size_t points_per_side) {
    const double h = side / 2;
    const Vec2 corners[4] = {{h, -h}, {h, h}, {-h, h}, {-h, -h}};
    std::vector<TrackPoint> pts;
    const double spacing = side / static_cast<double>(std::max<std::size_t>(1, points_per_side));
    append_line(pts, {0, -h}, corners[0], half_width, spacing);
    for (int i = 0; i < 3; ++i) append_line(pts, corners[i], corners[i + 1], half_width, spacing);
    append_line(pts, corners[3], {0, -h}, half_width, spacing);
    return Track::from_points(std::move(pts));
}

Track single_corner(double width, double height, double tight_radius, double gentle_radius, double half_width,
                    double spacing) {
    using std::numbers::pi;
    const double hx = width / 2, hy = height / 2;
    const double r[4] = {tight_radius, gentle_radius, gentle_radius, gentle_radius};  // BR, TR, TL, BL
    std::vector<TrackPoint> pts;
    append_line(pts, {0, -hy}, {hx - r[0], -hy}, half_width, spacing);
    append_arc(pts, {hx - r[0], -hy + r[0]}, r[0], -pi / 2, pi / 2, half_width, spacing);
    append_line(pts, {hx, -hy + r[0]}, {hx, hy - r[1]}, half_width, spacing);
    append_arc(pts, {hx - r[1], hy - r[1]}, r[1], 0, pi / 2, half_width, spacing);
    append_line(pts, {hx - r[1], hy}, {-hx + r[2], hy}, half_width, spacing);
    append_arc(pts, {-hx + r[2], hy - r[2]}, r[2], pi / 2, pi / 2, half_width, spacing);
    append_line(pts, {-hx, hy - r[2]}, {-hx, -hy + r[3]}, half_width, spacing);
    append_arc(pts, {-hx + r[3], -hy + r[3]}, r[3], pi, pi / 2, half_width, spacing);
    append_line(pts, {-hx + r[3], -hy}, {0, -hy}, half_width, spacing);
    return Track::from_points(std::move(pts));
}

}  // namespace tracks

}  // namespace ctxrace
