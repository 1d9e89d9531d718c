#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "ctxrace/error.hpp"
#include "ctxrace/raceline.hpp"

using namespace ctxrace;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec2> circle_points(double r, std::size_t n) {
    std::vector<Vec2> pts;
    for (std::size_t k = 0; k < n; ++k) pts.push_back(from_angle(2 * kPi * k / n) * r);
    return pts;
}

// Closed form of the forward/backward fixed point: every cap propagates along
// the loop in both directions with v^2 growing by 2 a ds.
std::vector<double> profile_oracle(const std::vector<Vec2>& g, double a_lat, double a_long, double v_max) {
    const std::size_t n = g.size();
    std::vector<double> ds(n), cap(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds[i] = distance(g[i], g[(i + 1) % n]);
        const double k = std::abs(menger_curvature(g[(i + n - 1) % n], g[i], g[(i + 1) % n]));
        cap[i] = k > 0 ? std::min(v_max, std::sqrt(a_lat / k)) : v_max;
    }
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = cap[i] * cap[i];
        for (std::size_t j = 0; j < n; ++j) {
            double fwd = 0.0;  // j -> i
            for (std::size_t k = j; k != i; k = (k + 1) % n) fwd += ds[k];
            double bwd = 0.0;  // i -> j
            for (std::size_t k = i; k != j; k = (k + 1) % n) bwd += ds[k];
            best = std::min(best, cap[j] * cap[j] + 2 * a_long * std::min(fwd, bwd));
        }
        v[i] = std::sqrt(best);
    }
    return v;
}

RacelineParams fast_params() {
    RacelineParams p;
    p.spacing = 0.1;
    return p;
}

}  // namespace

TEST(Raceline, CircleHugsInsideBoundary) {
    const Track t = tracks::circle(10.0, 1.5, 256);
    const RacelineParams params = fast_params();
    const RacelineGeometry g = optimize_raceline(t, params);
    const double inner = 10.0 - 1.5 + params.margin;
    for (Vec2 p : g.points) ASSERT_NEAR(norm(p), inner, 0.01);
    for (double a : g.offsets) ASSERT_NEAR(a, 1.5 - params.margin, 1e-3);
}

TEST(Raceline, FirstOrderOptimality) {
    // Finite-difference gradient of the objective along each point's normal:
    // zero where the offset is free, pointing out of the box where it sits on
    // a bound.
    const RacelineParams params = fast_params();
    for (const Track& t : {tracks::oval(), tracks::oval(30.0), tracks::square(), tracks::single_corner()}) {
        const auto centre = t.resampled(params.spacing);
        const std::size_t n = centre.size();
        const RacelineGeometry g = optimize_raceline(t, params);
        std::vector<Vec2> pts = g.points;
        const double h = 1e-4;
        double scale = 0.0;
        std::vector<double> grad(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 nrm = t.normal_at(t.total_length() * static_cast<double>(i) / static_cast<double>(n));
            const Vec2 keep = pts[i];
            pts[i] = keep + nrm * h;
            const double up = curvature_objective(pts);
            pts[i] = keep - nrm * h;
            const double down = curvature_objective(pts);
            pts[i] = keep;
            grad[i] = (up - down) / (2 * h);
            scale = std::max(scale, std::abs(grad[i]));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = centre[i].w_left - params.margin, lo = -(centre[i].w_right - params.margin);
            const double tol = 1e-6 * scale + 1e-12;
            if (g.offsets[i] >= hi - 1e-9) {
                ASSERT_LE(grad[i], tol) << i;
            } else if (g.offsets[i] <= lo + 1e-9) {
                ASSERT_GE(grad[i], -tol) << i;
            } else {
                ASSERT_NEAR(grad[i], 0.0, tol) << i << " of " << n;
            }
        }
    }
}

TEST(Raceline, ObjectiveNotWorseThanCenterline) {
    const RacelineParams params = fast_params();
    for (const Track& t : {tracks::oval(), tracks::square(), tracks::single_corner()}) {
        const auto centre = t.resampled(params.spacing);
        std::vector<Vec2> c;
        for (const TrackPoint& tp : centre) c.push_back(tp.p);
        const RacelineGeometry g = optimize_raceline(t, params);
        ASSERT_EQ(g.points.size(), c.size());
        EXPECT_LE(curvature_objective(g.points), curvature_objective(c));
        for (std::size_t i = 0; i < g.offsets.size(); ++i) {
            ASSERT_LE(g.offsets[i], centre[i].w_left - params.margin + 1e-12);
            ASSERT_GE(g.offsets[i], -(centre[i].w_right - params.margin) - 1e-12);
        }
    }
}

TEST(Raceline, WithinTrackDeterministicAndNarrowTrackRejected) {
    const Track t = tracks::single_corner();
    const RacelineParams params = fast_params();
    const Raceline a = compute_raceline(t, params);
    EXPECT_TRUE(raceline_within_track(t, a, params.margin));
    EXPECT_EQ(a.points(), compute_raceline(t, params).points());
    for (const RacelinePoint& p : a.points()) {
        ASSERT_GT(p.target_speed, 0.0);
        ASSERT_LE(p.target_speed, params.v_max);
    }

    RacelineParams wide = params;
    wide.margin = 1.3;
    EXPECT_THROW(optimize_raceline(t, wide), ConfigError);
}

TEST(VelocityProfile, StraightLimitAndConstantCurvature) {
    const Raceline big = velocity_profile(circle_points(1e6, 400), 6.0, 7.0, 8.0);
    for (const RacelinePoint& p : big.points()) EXPECT_DOUBLE_EQ(p.target_speed, 8.0);

    const Raceline small = velocity_profile(circle_points(2.0, 200), 6.0, 7.0, 8.0);
    const double k = std::abs(small.points()[0].curvature);
    EXPECT_NEAR(k, 0.5, 1e-3);
    for (const RacelinePoint& p : small.points()) {
        EXPECT_NEAR(p.target_speed, std::sqrt(6.0 / k), 1e-9);
        EXPECT_LT(p.target_speed, 8.0);
    }
}

TEST(VelocityProfile, HairpinMatchesOracle) {
    // 20-point teardrop: sharp tip at index 0, round back end.
    std::vector<Vec2> g;
    for (int k = 0; k < 20; ++k) {
        const double t = 2 * kPi * k / 20;
        g.push_back({10 * std::cos(t), 6 * std::sin(t) * std::sin(t / 2)});
    }
    const Raceline r = velocity_profile(g, 6.0, 3.0, 8.0);
    const auto oracle = profile_oracle(g, 6.0, 3.0, 8.0);
    std::size_t k_max = 0, v_min = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(r.points()[i].target_speed, oracle[i], 1e-9) << i;
        if (std::abs(r.points()[i].curvature) > std::abs(r.points()[k_max].curvature)) k_max = i;
        if (r.points()[i].target_speed < r.points()[v_min].target_speed) v_min = i;
    }
    EXPECT_EQ(k_max, 0u);
    EXPECT_EQ(v_min, k_max);
    // Braking into the tip and accelerating out of it.
    for (std::size_t i = 15; i < 19; ++i) EXPECT_GT(r.points()[i].target_speed, r.points()[i + 1].target_speed);
    EXPECT_GT(r.points()[19].target_speed, r.points()[0].target_speed);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(r.points()[i].target_speed, r.points()[i + 1].target_speed);
    // Adjacent speeds respect the longitudinal limit.
    for (std::size_t i = 0; i < 20; ++i) {
        const double v0 = r.points()[i].target_speed, v1 = r.points()[(i + 1) % 20].target_speed;
        EXPECT_LE(std::abs(v1 * v1 - v0 * v0), 2 * 3.0 * distance(g[i], g[(i + 1) % 20]) + 1e-9);
    }
}

TEST(VelocityProfile, RotationInvariant) {
    const Track t = tracks::single_corner();
    const RacelineGeometry g = optimize_raceline(t, fast_params());
    const Raceline a = velocity_profile(g.points, 6.0, 7.0, 8.0);
    std::vector<Vec2> rot(g.points.begin() + 137, g.points.end());
    rot.insert(rot.end(), g.points.begin(), g.points.begin() + 137);
    const Raceline b = velocity_profile(rot, 6.0, 7.0, 8.0);
    const std::size_t n = g.points.size();
    for (std::size_t i = 0; i < n; ++i)
        ASSERT_NEAR(b.points()[i].target_speed, a.points()[(i + 137) % n].target_speed, 1e-9);
}

TEST(Lookahead, ShortLookaheadGivesNextPoint) {
    const Raceline r = velocity_profile(circle_points(10.0, 600), 6.0, 7.0, 8.0);
    const Vec2 between = (r.points()[10].position() + r.points()[11].position()) / 2.0;
    const LookaheadPoint lp = r.lookahead_point(between, 1e-3);
    EXPECT_EQ(lp.index, 11u);
}

TEST(Lookahead, CircleArc) {
    const double R = 10.0;
    const std::size_t n = 600;
    const Raceline r = velocity_profile(circle_points(R, n), 6.0, 7.0, 8.0);
    const double dtheta = 2 * kPi / n;
    for (double L : {0.5, 1.2, 2.0, 3.3}) {
        for (double a0 : {0.3, 2.0, 5.0}) {
            const LookaheadPoint lp = r.lookahead_point(from_angle(a0) * R, L);
            const double central = wrap_angle(std::atan2(lp.point.y, lp.point.x) - a0);
            // The arc is measured along chords, so the angle lands within one spacing of L / R.
            EXPECT_GE(central, L / R - 1e-6);
            EXPECT_LE(central, L / R + dtheta + 1e-6);
        }
    }
}

TEST(Lookahead, WrapsAcrossStart) {
    const Raceline r = velocity_profile(circle_points(10.0, 600), 6.0, 7.0, 8.0);
    const Vec2 near_end = r.points()[598].position();
    const LookaheadPoint lp = r.lookahead_point(near_end, 0.5);
    EXPECT_LT(lp.index, 10u);
    EXPECT_GE(lp.arc_distance, 0.5);
    EXPECT_LT(lp.arc_distance, 0.5 + 0.11);
}

TEST(RacelineCsv, RoundTripAndCache) {
    const Track t = tracks::oval();
    const RacelineParams params = fast_params();
    const Raceline r = compute_raceline(t, params);
    std::stringstream buf;
    write_raceline_csv(buf, r);
    const Raceline back = parse_raceline_csv(buf);
    EXPECT_EQ(back.points(), r.points());
    EXPECT_EQ(back.total_length(), r.total_length());

    const auto dir = std::filesystem::temp_directory_path() / "ctxrace_raceline_cache_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const Raceline first = load_or_compute_raceline(t, params, dir);
    const auto file = dir / (raceline_cache_key(t, params) + ".csv");
    ASSERT_TRUE(std::filesystem::exists(file));
    const Raceline second = load_or_compute_raceline(t, params, dir);
    EXPECT_EQ(first.points(), second.points());
    EXPECT_EQ(first.points(), r.points());

    RacelineParams other = params;
    other.margin = 0.3;
    EXPECT_NE(raceline_cache_key(t, params), raceline_cache_key(t, other));
    std::filesystem::remove_all(dir);
}

TEST(RacelineCsv, Errors) {
    std::istringstream bad("# total_length = 3\n0,0,0,0,0,1\n1,1,0,0,0\n");
    EXPECT_THROW(parse_raceline_csv(bad), ParseError);
    EXPECT_THROW(Raceline::from_points({{0, 0, 0, 0, 0, 1}, {1, 1, 0, 0, 0, 0}, {2, 2, 0, 0, 0, 1}}, 3.0),
                 ValidationError);
}
