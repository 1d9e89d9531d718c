#include "ctxrace/raceline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "ctxrace/error.hpp"
#include "loop_search.hpp"

namespace ctxrace {

void RacelineParams::validate() const {
    if (!(a_lat_max > 0.0)) throw ConfigError("raceline.a_lat_max must be > 0");
    if (!(a_long_max > 0.0)) throw ConfigError("raceline.a_long_max must be > 0");
    if (!(v_max > 0.0)) throw ConfigError("raceline.v_max must be > 0");
    if (!(margin >= 0.0)) throw ConfigError("raceline.margin must be >= 0");
    if (!(spacing > 0.0)) throw ConfigError("raceline.spacing must be > 0");
    if (max_iterations < 1) throw ConfigError("raceline.max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("raceline.tolerance must be > 0");
}

double curvature_objective(std::span<const Vec2> points) {
    const std::size_t n = points.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 d = points[(i + n - 1) % n] - points[i] * 2.0 + points[(i + 1) % n];
        sum += dot(d, d);
    }
    return sum;
}

namespace {

struct Level {
    std::vector<Vec2> centre;
    std::vector<Vec2> normal;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> s;
    double total = 0.0;
};

Level make_level(const Track& track, double spacing, double margin) {
    Level lv;
    const auto pts = track.resampled(spacing);
    const std::size_t n = pts.size();
    lv.total = track.total_length();
    for (std::size_t i = 0; i < n; ++i) {
        lv.centre.push_back(pts[i].p);
        lv.lo.push_back(-(pts[i].w_right - margin));
        lv.hi.push_back(pts[i].w_left - margin);
        lv.s.push_back(lv.total * static_cast<double>(i) / static_cast<double>(n));
        if (lv.lo.back() > lv.hi.back()) {
            throw ConfigError("track too narrow for raceline margin " + std::to_string(margin) + " m near s = " +
                              std::to_string(lv.s.back()));
        }
    }
    for (std::size_t i = 0; i < n; ++i) lv.normal.push_back(track.normal_at(lv.s[i]));
    return lv;
}

std::vector<Vec2> place(const Level& lv, const std::vector<double>& alpha) {
    std::vector<Vec2> out(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = lv.centre[i] + lv.normal[i] * alpha[i];
    return out;
}

// f(alpha) = sum_i |r_i|^2 with r = D (c + N alpha) per coordinate, D the
// cyclic second difference. Gradient H alpha + b with H = 2 sum_k N_k D'D N_k.
struct Quadratic {
    Eigen::SparseMatrix<double> h;
    Eigen::VectorXd b;
};

Quadratic build_quadratic(const Level& lv) {
    const auto n = static_cast<Eigen::Index>(lv.centre.size());
    Eigen::SparseMatrix<double> d(n, n);
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(i, (i + n - 1) % n, 1.0);
        trip.emplace_back(i, i, -2.0);
        trip.emplace_back(i, (i + 1) % n, 1.0);
    }
    d.setFromTriplets(trip.begin(), trip.end());
    const Eigen::SparseMatrix<double> dtd = Eigen::SparseMatrix<double>(d.transpose()) * d;

    Quadratic q;
    q.h.resize(n, n);
    q.b = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd nk(n), ck(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            nk[i] = k == 0 ? lv.normal[u].x : lv.normal[u].y;
            ck[i] = k == 0 ? lv.centre[u].x : lv.centre[u].y;
        }
        Eigen::SparseMatrix<double> term = nk.asDiagonal() * dtd;
        term = term * nk.asDiagonal();
        q.h += 2.0 * term;
        q.b += 2.0 * nk.cwiseProduct(dtd * ck);
    }
    q.h.makeCompressed();
    return q;
}

// Projected Newton for min f subject to lo <= alpha <= hi. Variables sitting
// on a bound with the gradient pushing outward are held fixed; the Newton
// step on the rest is projected back into the box with backtracking.
int solve_box_qp(const Level& lv, std::vector<double>& alpha, const RacelineParams& params) {
    const Quadratic q = build_quadratic(lv);
    const auto n = static_cast<Eigen::Index>(alpha.size());
    Eigen::Map<Eigen::VectorXd> x(alpha.data(), n);
    const Eigen::Map<const Eigen::VectorXd> lo(lv.lo.data(), n), hi(lv.hi.data(), n);
    const auto objective = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(q.h * v) + q.b.dot(v); };
    constexpr double kOnBound = 1e-12;

    int it = 0;
    while (it < params.max_iterations) {
        ++it;
        const Eigen::VectorXd g = q.h * x + q.b;
        std::vector<Eigen::Index> free_idx;
        std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool held = (x[i] <= lo[i] + kOnBound && g[i] > 0.0) || (x[i] >= hi[i] - kOnBound && g[i] < 0.0);
            if (held) continue;
            slot[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(free_idx.size());
            free_idx.push_back(i);
        }
        if (free_idx.empty()) break;

        const auto m = static_cast<Eigen::Index>(free_idx.size());
        std::vector<Eigen::Triplet<double>> trip;
        for (Eigen::Index col = 0; col < q.h.outerSize(); ++col) {
            const Eigen::Index c = slot[static_cast<std::size_t>(col)];
            if (c < 0) continue;
            for (Eigen::SparseMatrix<double>::InnerIterator e(q.h, col); e; ++e) {
                const Eigen::Index r = slot[static_cast<std::size_t>(e.row())];
                if (r >= 0) trip.emplace_back(r, c, e.value());
            }
        }
        for (Eigen::Index k = 0; k < m; ++k) trip.emplace_back(k, k, 1e-12);  // the loop's rigid modes
        Eigen::SparseMatrix<double> hff(m, m);
        hff.setFromTriplets(trip.begin(), trip.end());
        Eigen::VectorXd gf(m);
        for (Eigen::Index k = 0; k < m; ++k) gf[k] = g[free_idx[static_cast<std::size_t>(k)]];
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hff);
        if (ldlt.info() != Eigen::Success) throw Error("raceline optimisation: factorisation failed");
        const Eigen::VectorXd step = ldlt.solve(-gf);

        const double f0 = objective(x);
        Eigen::VectorXd trial = x;
        double t = 1.0, moved = 0.0;
        bool accepted = false;
        for (int k = 0; k < 40 && !accepted; ++k, t *= 0.5) {
            trial = x;
            for (Eigen::Index j = 0; j < m; ++j) {
                const Eigen::Index i = free_idx[static_cast<std::size_t>(j)];
                trial[i] = std::clamp(x[i] + t * step[j], lo[i], hi[i]);
            }
            accepted = objective(trial) <= f0;
        }
        if (!accepted) break;
        moved = (trial - x).lpNorm<Eigen::Infinity>();
        x = trial;
        if (moved < params.tolerance) break;
    }
    return it;
}

}  // namespace

RacelineGeometry optimize_raceline(const Track& track, const RacelineParams& params) {
    params.validate();
    const Level lv = make_level(track, params.spacing, params.margin);
    RacelineGeometry out;
    out.offsets.assign(lv.centre.size(), 0.0);
    out.iterations = solve_box_qp(lv, out.offsets, params);
    out.points = place(lv, out.offsets);
    return out;
}

Raceline velocity_profile(std::span<const Vec2> geometry, double a_lat_max, double a_long_max, double v_max) {
    const std::size_t n = geometry.size();
    if (n < 3) throw ValidationError("raceline geometry needs at least 3 points");
    std::vector<RacelinePoint> pts(n);
    std::vector<double> ds(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 prev = geometry[(i + n - 1) % n], cur = geometry[i], next = geometry[(i + 1) % n];
        pts[i].s = s;
        pts[i].x = cur.x;
        pts[i].y = cur.y;
        pts[i].heading = std::atan2(next.y - prev.y, next.x - prev.x);
        pts[i].curvature = menger_curvature(prev, cur, next);
        ds[i] = distance(cur, next);
        s += ds[i];
    }

    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = std::abs(pts[i].curvature);
        v[i] = k > 0.0 ? std::min(v_max, std::sqrt(a_lat_max / k)) : v_max;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = k, j = (k + 1) % n;
            const double reach = std::sqrt(v[i] * v[i] + 2.0 * a_long_max * ds[i]);
            if (reach < v[j]) {
                v[j] = reach;
                changed = true;
            }
        }
        for (std::size_t k = n; k-- > 0;) {
            const std::size_t i = k, j = (k + 1) % n;
            const double reach = std::sqrt(v[j] * v[j] + 2.0 * a_long_max * ds[i]);
            if (reach < v[i]) {
                v[i] = reach;
                changed = true;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) pts[i].target_speed = v[i];
    return Raceline::from_points(std::move(pts), s);
}

Raceline Raceline::from_points(std::vector<RacelinePoint> points, double total_length) {
    const std::size_t n = points.size();
    if (n < 3) throw ValidationError("raceline needs at least 3 points");
    Raceline r;
    r.seg_len_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const RacelinePoint& p = points[i];
        if (!std::isfinite(p.s) || !std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading) ||
            !std::isfinite(p.curvature) || !std::isfinite(p.target_speed))
            throw ValidationError("raceline contains non-finite values");
        if (!(p.target_speed > 0.0)) throw ValidationError("raceline target_speed must be > 0");
        if (i > 0 && !(p.s > points[i - 1].s)) throw ValidationError("raceline s must be strictly increasing");
        r.seg_len_[i] = distance(p.position(), points[(i + 1) % n].position());
    }
    if (!(total_length > points.back().s)) throw ValidationError("raceline total length must exceed the last s");
    r.points_ = std::move(points);
    r.total_length_ = total_length;
    return r;
}

double Raceline::project(Vec2 p, ProjectionCache* cache) const {
    const std::size_t n = points_.size();
    const std::size_t seg =
        detail::nearest_loop_segment(n, [this](std::size_t i) { return points_[i].position(); }, p, cache);
    const ClosestPoint cp = closest_point_on_segment(p, points_[seg].position(), points_[(seg + 1) % n].position());
    double s = points_[seg].s + cp.t * seg_len_[seg];
    if (s >= total_length_) s -= total_length_;
    return s;
}

double Raceline::cross_track_error(Vec2 p) const {
    const std::size_t n = points_.size();
    const std::size_t seg =
        detail::nearest_loop_segment(n, [this](std::size_t i) { return points_[i].position(); }, p, nullptr);
    return closest_point_on_segment(p, points_[seg].position(), points_[(seg + 1) % n].position()).distance;
}

LookaheadPoint Raceline::lookahead_point(Vec2 p, double lookahead, ProjectionCache* cache) const {
    const std::size_t n = points_.size();
    ProjectionCache local;
    ProjectionCache* c = cache != nullptr ? cache : &local;
    const double s0 = project(p, c);
    const std::size_t start = (*c->segment + 1) % n;
    std::size_t best = start;
    double best_d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        best = (start + k) % n;
        best_d = points_[best].s - s0;
        if (best_d < 0.0) best_d += total_length_;
        if (best_d >= lookahead) break;
    }
    return {best, points_[best].position(), points_[best].target_speed, best_d};
}

Raceline compute_raceline(const Track& track, const RacelineParams& params) {
    const RacelineGeometry geom = optimize_raceline(track, params);
    return velocity_profile(geom.points, params.a_lat_max, params.a_long_max, params.v_max);
}

bool raceline_within_track(const Track& track, const Raceline& raceline, double margin, double tol) {
    ProjectionCache cache;
    for (const RacelinePoint& rp : raceline.points()) {
        const TrackPose pose = track.project(rp.position(), 0.0, &cache);
        if (!pose.inside) return false;
        const auto [wl, wr] = track.widths_at(pose.s);
        if (pose.lateral > wl - margin + tol || pose.lateral < -(wr - margin) - tol) return false;
    }
    return true;
}

namespace {

double parse_field(std::string_view tok, std::size_t line_no) {
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || end != tok.data() + tok.size())
        throw ParseError("invalid number '" + std::string(tok) + "'", line_no);
    return v;
}

}  // namespace

Raceline parse_raceline_csv(std::istream& in) {
    std::vector<RacelinePoint> pts;
    std::string line;
    std::size_t line_no = 0;
    std::optional<double> total;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            // "# total_length = <value>" records the closing arc length.
            constexpr std::string_view key = "total_length";
            if (const auto at = line.find(key); at != std::string::npos) {
                const auto eq = line.find('=', at);
                if (eq == std::string::npos) throw ParseError("malformed total_length comment", line_no);
                total = parse_field(std::string_view(line).substr(eq + 1), line_no);
            }
            continue;
        }
        double vals[6];
        std::size_t field = 0, pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            if (field >= 6) throw ParseError("expected 6 fields (s, x, y, heading, curvature, target_speed)", line_no);
            vals[field++] = parse_field(
                std::string_view(line).substr(pos, (comma == std::string::npos ? line.size() : comma) - pos), line_no);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (field != 6) throw ParseError("expected 6 fields (s, x, y, heading, curvature, target_speed)", line_no);
        pts.push_back({vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]});
    }
    if (pts.size() < 3) throw ValidationError("raceline needs at least 3 points");
    if (!total) total = pts.back().s + distance(pts.back().position(), pts.front().position());
    return Raceline::from_points(std::move(pts), *total);
}

Raceline load_raceline(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open raceline file " + path.string());
    return parse_raceline_csv(in);
}

void write_raceline_csv(std::ostream& out, const Raceline& raceline) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "# total_length = %.17g\n", raceline.total_length());
    out << buf << "# s, x, y, heading, curvature, target_speed\n";
    for (const RacelinePoint& p : raceline.points()) {
        std::snprintf(buf, sizeof buf, "%.17g, %.17g, %.17g, %.17g, %.17g, %.17g\n", p.s, p.x, p.y, p.heading,
                      p.curvature, p.target_speed);
        out << buf;
    }
}

void save_raceline(const std::filesystem::path& path, const Raceline& raceline) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write raceline file " + path.string());
    write_raceline_csv(out, raceline);
}

std::string raceline_cache_key(const Track& track, const RacelineParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto feed = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (double v : {params.a_lat_max, params.a_long_max, params.v_max, params.margin, params.spacing,
                     static_cast<double>(params.max_iterations), params.tolerance})
        feed(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "raceline-%016llx-%016llx", static_cast<unsigned long long>(track.hash()),
                  static_cast<unsigned long long>(h));
    return buf;
}

Raceline load_or_compute_raceline(const Track& track, const RacelineParams& params,
                                  const std::filesystem::path& cache_dir) {
    const auto path = cache_dir / (raceline_cache_key(track, params) + ".csv");
    if (std::filesystem::exists(path)) return load_raceline(path);
    Raceline r = compute_raceline(track, params);
    std::filesystem::create_directories(cache_dir);
    // Write-then-rename so concurrent workers never observe a partial file.
    const auto tmp = path.string() + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&r));
    save_raceline(tmp, r);
    std::filesystem::rename(tmp, path);
    return r;
}

}  // namespace ctxrace
