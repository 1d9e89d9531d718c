#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ctxrace/dynamics.hpp"
#include "ctxrace/error.hpp"

using namespace ctxrace;

TEST(ScaleAction, Examples) {
    const VehicleParams p;
    auto t = scale_action({1.0, 0.0}, p);
    EXPECT_DOUBLE_EQ(t.speed, 8.0);
    EXPECT_DOUBLE_EQ(t.steer, 0.0);
    t = scale_action({-1.0, -1.0}, p);
    EXPECT_DOUBLE_EQ(t.speed, 0.0);
    EXPECT_DOUBLE_EQ(t.steer, -0.4);
    t = scale_action({0.0, 0.5}, p);
    EXPECT_DOUBLE_EQ(t.speed, 4.0);
    EXPECT_DOUBLE_EQ(t.steer, 0.2);
}

TEST(ScaleAction, ClampsOutOfRange) {
    const VehicleParams p;
    const auto t = scale_action({7.0, -3.0}, p);
    EXPECT_DOUBLE_EQ(t.speed, 8.0);
    EXPECT_DOUBLE_EQ(t.steer, -0.4);
}

TEST(ScaleAction, UnscaleIsInverse) {
    const VehicleParams p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const Action a{u(rng), u(rng)};
        const Action back = unscale_action(scale_action(a, p), p);
        ASSERT_NEAR(back.speed_cmd, a.speed_cmd, 1e-12);
        ASSERT_NEAR(back.steer_cmd, a.steer_cmd, 1e-12);
    }
}

TEST(VehicleParams, Validation) {
    VehicleParams p;
    EXPECT_NO_THROW(p.validate());
    p.lf = 0.2;
    EXPECT_THROW(p.validate(), ConfigError);
    p = VehicleParams{};
    p.mass = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(StepPhysics, StraightLine) {
    const VehicleParams p;
    VehicleState s;
    s.v = 1.0;
    const VehicleState n = step_physics(s, {1.0, 0.0}, p, 0.01);
    EXPECT_DOUBLE_EQ(n.x, 0.01);
    EXPECT_DOUBLE_EQ(n.y, 0.0);
    EXPECT_DOUBLE_EQ(n.yaw, 0.0);
    EXPECT_DOUBLE_EQ(n.yaw_rate, 0.0);
    EXPECT_DOUBLE_EQ(n.steer, 0.0);
    EXPECT_DOUBLE_EQ(n.slip, 0.0);
    EXPECT_DOUBLE_EQ(n.v, 1.0);
}

TEST(StepPhysics, SteerRateLimit) {
    const VehicleParams p;
    const VehicleState n = step_physics(VehicleState{}, {0.0, 0.4}, p, 0.01);
    EXPECT_NEAR(n.steer, 0.032, 1e-15);
}

TEST(StepPhysics, SteadyCircleYawIncrement) {
    // Closed form of the kinematic model without slip: dyaw = dt v tan(delta) / L.
    VehicleParams p;
    p.model_slip = false;
    for (double steer : {0.05, 0.2, -0.3}) {
        VehicleState s;
        s.v = 3.0;
        s.steer = steer;
        const VehicleState n = step_physics(s, {3.0, steer}, p, 0.01);
        const double delta_ccw = -steer;
        EXPECT_NEAR(n.yaw - s.yaw, 0.01 * 3.0 * std::tan(delta_ccw) / p.wheelbase, 1e-15);
    }
}

TEST(StepPhysics, SlipAngleFormula) {
    const VehicleParams p;
    VehicleState s;
    s.v = 2.0;
    s.steer = 0.2;
    const VehicleState n = step_physics(s, {2.0, 0.2}, p, 0.01);
    EXPECT_NEAR(n.slip, std::atan(p.lr * std::tan(-0.2) / p.wheelbase), 1e-15);
}

TEST(StepPhysics, InvariantsAndRateLimitsHoldForRandomInputs) {
    const VehicleParams p;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        VehicleState s;
        s.x = 20 * u(rng);
        s.y = 20 * u(rng);
        s.v = (u(rng) + 1.0) / 2.0 * p.v_max;
        s.yaw = std::numbers::pi * u(rng);
        s.steer = p.steer_max * u(rng);
        const ActuatorTargets t = scale_action({2 * u(rng), 2 * u(rng)}, p);
        const VehicleState n = step_physics(s, t, p, 0.01);
        ASSERT_LE(std::abs(n.steer), p.steer_max);
        ASSERT_GE(n.v, 0.0);
        ASSERT_LE(n.v, p.v_max);
        ASSERT_GT(n.yaw, -std::numbers::pi);
        ASSERT_LE(n.yaw, std::numbers::pi);
        ASSERT_LE(std::abs(n.steer - s.steer), p.steer_rate_max * 0.01 + 1e-15);
        ASSERT_LE(std::abs(n.v - s.v), p.accel_max * 0.01 + 1e-12);
        ASSERT_EQ(step_physics(s, t, p, 0.01), n);  // pure function
    }
}

namespace {

struct Circle {
    Vec2 centre;
    double radius = 0.0;
};

// Algebraic least-squares circle: x^2 + y^2 + D x + E y + F = 0.
Circle fit_circle(const std::vector<Vec2>& pts) {
    double m[3][4] = {};
    for (Vec2 p : pts) {
        const double row[3] = {p.x, p.y, 1.0};
        const double rhs = -(p.x * p.x + p.y * p.y);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            m[i][3] += row[i] * rhs;
        }
    }
    for (int c = 0; c < 3; ++c) {
        for (int r = c + 1; r < 3; ++r) {
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
        }
    }
    double sol[3];
    for (int r = 2; r >= 0; --r) {
        double acc = m[r][3];
        for (int k = r + 1; k < 3; ++k) acc -= m[r][k] * sol[k];
        sol[r] = acc / m[r][r];
    }
    const Vec2 centre{-sol[0] / 2, -sol[1] / 2};
    return {centre, std::sqrt(dot(centre, centre) - sol[2])};
}

}  // namespace

TEST(StepPhysics, KinematicCircleRadius) {
    // Slip pinned to zero, constant steer, 10 s: the path settles on a circle of
    // radius L / tan(delta).
    VehicleParams p;
    p.model_slip = false;
    for (double steer : {-0.1, -0.25, 0.3}) {
        VehicleState s;
        s.v = 2.0;
        s.steer = steer;
        std::vector<Vec2> late;
        for (int k = 0; k < 1000; ++k) {
            s = step_physics(s, {2.0, steer}, p, 0.01);
            if (k >= 500) late.push_back(s.position());
        }
        const double radius = p.wheelbase / std::tan(std::abs(steer));
        const Circle c = fit_circle(late);
        EXPECT_NEAR(c.radius, radius, 0.01 * radius) << "steer " << steer;
        double worst = 0.0;
        for (Vec2 q : late) worst = std::max(worst, std::abs(distance(q, c.centre) - radius));
        EXPECT_LT(worst, 0.01 * radius) << "steer " << steer;
    }
}

TEST(Substep, OneEqualsSingleStep) {
    const VehicleParams p;
    VehicleState s;
    s.v = 1.5;
    s.steer = 0.1;
    const Action a{0.2, -0.4};
    EXPECT_EQ(substep(s, a, p, 1, 0.01), step_physics(s, scale_action(a, p), p, 0.01));
}

TEST(Substep, TenStepsAdvanceOneTenthSecond) {
    const VehicleParams p;
    VehicleState s;
    s.v = 2.0;
    const VehicleState n = substep(s, {-0.5, 0.0}, p, 10, 0.01);  // target 2 m/s, straight
    EXPECT_NEAR(n.x, 0.2, 1e-12);
}

TEST(Substep, Composability) {
    const VehicleParams p;
    VehicleState s;
    s.v = 3.0;
    s.yaw = 0.4;
    const Action a{0.7, 0.3};
    VehicleState twos = s;
    for (int i = 0; i < 5; ++i) twos = substep(twos, a, p, 2, 0.01);
    EXPECT_EQ(substep(s, a, p, 10, 0.01), twos);
}

TEST(Substep, RestIsFixedPoint) {
    const VehicleParams p;
    const VehicleState rest;
    EXPECT_EQ(substep(rest, {-1.0, 0.0}, p, 10, 0.01), rest);
}

TEST(VehicleBox, MatchesBodyDimensions) {
    const VehicleParams p;
    VehicleState s;
    s.x = 1.0;
    s.y = -2.0;
    s.yaw = 0.3;
    const OrientedBox b = vehicle_box(s, p);
    EXPECT_EQ(b.center, (Vec2{1.0, -2.0}));
    EXPECT_DOUBLE_EQ(b.yaw, 0.3);
    EXPECT_DOUBLE_EQ(b.length, 0.5);
    EXPECT_DOUBLE_EQ(b.width, 0.3);
}
