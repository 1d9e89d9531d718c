#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ctxrace/adversary.hpp"
#include "ctxrace/env.hpp"
#include "ctxrace/error.hpp"

using namespace ctxrace;

namespace {

constexpr double kPi = std::numbers::pi;

Raceline circle_raceline(double r, std::size_t n) {
    std::vector<Vec2> pts;
    for (std::size_t k = 0; k < n; ++k) pts.push_back(from_angle(2 * kPi * k / n) * r);
    return velocity_profile(pts, 6.0, 7.0, 8.0);
}

VehicleState on_raceline(const Raceline& r, std::size_t i, double speed_factor) {
    VehicleState s;
    s.x = r.points()[i].x;
    s.y = r.points()[i].y;
    s.yaw = r.points()[i].heading;
    s.v = r.points()[i].target_speed * speed_factor;
    return s;
}

}  // namespace

TEST(PurePursuit, StraightAheadAndSides) {
    const VehicleParams p;
    VehicleState s;
    EXPECT_EQ(pure_pursuit_steer(s, {2.0, 0.0}, p), 0.0);
    EXPECT_LT(pure_pursuit_steer(s, {2.0, 0.5}, p), 0.0);  // goal on the left: steer left (negative)
    EXPECT_GT(pure_pursuit_steer(s, {2.0, -0.5}, p), 0.0);
    EXPECT_EQ(pure_pursuit_steer(s, {0.0, 0.0}, p), 0.0);
    EXPECT_LT(pure_pursuit_steer(s, {-1.0, 0.01}, p), 0.0);  // behind and to the left
    EXPECT_EQ(pure_pursuit_steer(s, {0.0, 0.5}, p), -p.steer_max);  // 2 L / 0.5 exceeds the limit
}

TEST(PurePursuit, GoalOnCircleThroughVehicle) {
    // A goal on the circle of radius R tangent to the heading at the vehicle
    // gives steer = atan(L / R), independent of where on the circle it sits.
    const VehicleParams p;
    for (double R : {3.0, 10.0, 25.0}) {
        for (double phi : {0.05, 0.2, 0.6}) {
            for (double yaw : {0.0, 1.1, -2.5}) {
                VehicleState s;
                s.x = 1.0;
                s.y = -2.0;
                s.yaw = yaw;
                const Vec2 local{R * std::sin(phi), R * (1 - std::cos(phi))};
                const Vec2 goal = s.position() + rotate(local, yaw);
                EXPECT_NEAR(pure_pursuit_steer(s, goal, p), -std::atan(p.wheelbase / R), 1e-12);
                const Vec2 mirrored = s.position() + rotate({local.x, -local.y}, yaw);
                EXPECT_NEAR(pure_pursuit_steer(s, mirrored, p), std::atan(p.wheelbase / R), 1e-12);
            }
        }
    }
}

TEST(Adversary, SpeedIsAttenuatedAndContextScaled) {
    const VehicleParams p;
    const AdversaryConfig cfg;
    const Raceline r = compute_raceline(tracks::oval(), RacelineParams{});
    const ContextScales zero = context_scales(cfg, {0.0, 0.0});
    const ContextScales fast = context_scales(cfg, {0.3, 0.0});
    const ContextScales slow = context_scales(cfg, {-0.3, 0.0});
    EXPECT_EQ(fast.speed, 1.3);
    for (std::size_t i = 0; i < r.size(); i += 7) {
        const VehicleState s = on_raceline(r, i, 0.3);
        const AdversaryCommand c0 = adversary_command(s, r, cfg, zero, p);
        const AdversaryCommand cf = adversary_command(s, r, cfg, fast, p);
        const AdversaryCommand cs = adversary_command(s, r, cfg, slow, p);
        ASSERT_DOUBLE_EQ(c0.speed_unclamped, 0.3 * c0.goal.target_speed);
        ASSERT_DOUBLE_EQ(cf.speed_unclamped, 1.3 * c0.speed_unclamped);
        ASSERT_DOUBLE_EQ(cs.speed_unclamped, 0.7 * c0.speed_unclamped);
        ASSERT_GE(cf.speed, c0.speed);
        ASSERT_GE(c0.speed, cs.speed);
        ASSERT_EQ(cf.steer, c0.steer);  // c_v leaves steering alone
    }
}

TEST(Adversary, SpeedClampedToVehicleLimit) {
    VehicleParams p;
    AdversaryConfig cfg;
    cfg.speed_attenuation = 1.0;
    cfg.lambda_v = 5.0;
    const Raceline r = circle_raceline(1e4, 64);  // straight enough for v_max everywhere
    const AdversaryCommand c = adversary_command(on_raceline(r, 0, 1.0), r, cfg, context_scales(cfg, {0.3, 0}), p);
    EXPECT_DOUBLE_EQ(c.speed_unclamped, 8.0 * 2.5);
    EXPECT_EQ(c.speed, p.v_max);
    EXPECT_EQ(c.action.speed_cmd, 1.0);
}

TEST(Adversary, LookaheadScalesWithContext) {
    const VehicleParams p;
    const AdversaryConfig cfg;
    const Raceline r = circle_raceline(10.0, 629);
    const VehicleState s = on_raceline(r, 0, 0.3);
    double prev = 0.0;
    for (double ct : {-0.3, -0.15, 0.0, 0.15, 0.3}) {
        const AdversaryCommand c = adversary_command(s, r, cfg, context_scales(cfg, {0.0, ct}), p);
        EXPECT_DOUBLE_EQ(c.lookahead, 1.2 * (1 + ct));
        EXPECT_GT(c.lookahead, prev);
        EXPECT_GE(c.goal.arc_distance, c.lookahead);
        prev = c.lookahead;
    }
}

TEST(Adversary, ConfigValidation) {
    AdversaryConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.lambda_theta = 4.0;  // 1 - 4 * 0.3 < 0
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = AdversaryConfig{};
    cfg.speed_attenuation = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Adversary, SampledContextStaysInRange) {
    Rng rng(77);
    for (int i = 0; i < 10000; ++i) {
        const Context c = sample_context(rng);
        ASSERT_GE(c.c_v, -kTrainingRange);
        ASSERT_LT(c.c_v, kTrainingRange);
        ASSERT_GE(c.c_theta, -kTrainingRange);
        ASSERT_LT(c.c_theta, kTrainingRange);
    }
}

TEST(Adversary, CircleSteadyStateSteer) {
    const VehicleParams p;
    const Raceline r = circle_raceline(10.0, 629);
    std::vector<AdversaryCommand> cmds;
    const auto traj = simulate_adversary(r, AdversaryConfig{}, {0, 0}, p, on_raceline(r, 0, 0.3), 300, 10, 0.01, &cmds);
    const double oracle = std::atan(p.wheelbase / 10.0);
    for (std::size_t k = 100; k < cmds.size(); ++k) EXPECT_NEAR(std::abs(cmds[k].steer), oracle, 0.05 * oracle);
    for (std::size_t k = 1000; k < traj.size(); ++k) EXPECT_NEAR(norm(traj[k].position()), 10.0, 0.05);
}

TEST(Adversary, TracksOvalRaceline) {
    const VehicleParams p;
    const Raceline r = compute_raceline(tracks::oval(), RacelineParams{});
    const auto traj = simulate_adversary(r, AdversaryConfig{}, {0, 0}, p, on_raceline(r, 0, 0.3), 600);
    double worst = 0.0;
    for (std::size_t k = 500; k < traj.size(); ++k) worst = std::max(worst, r.cross_track_error(traj[k].position()));
    EXPECT_LT(worst, 0.15);
}
