#pragma once

#include "ctxrace/geometry.hpp"

namespace ctxrace {

/// Kinematic and dynamic state of one car. Position refers to the centre of
/// the body, yaw is counter-clockwise positive.
struct VehicleState {
    double x = 0.0;         // [m]
    double y = 0.0;         // [m]
    double v = 0.0;         // longitudinal velocity [m/s]
    double yaw = 0.0;       // [rad], in (-pi, pi]
    double yaw_rate = 0.0;  // [rad/s]
    double steer = 0.0;     // [rad], positive steers right
    double slip = 0.0;      // [rad], angle of the CoG velocity w.r.t. heading

    Vec2 position() const { return {x, y}; }
    bool operator==(const VehicleState&) const = default;
};

/// Defaults describe a 1:10-scale car.
struct VehicleParams {
    double wheelbase = 0.33;
    double lf = 0.15875;
    double lr = 0.17125;
    double mass = 3.47;
    double steer_max = 0.4;
    double v_max = 8.0;
    double accel_max = 7.0;
    double steer_rate_max = 3.2;
    double body_length = 0.5;
    double body_width = 0.3;
    /// When false the slip angle is pinned to zero and the body follows the
    /// rear-axle bicycle kinematics exactly.
    bool model_slip = true;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Normalised agent output, both components in [-1, 1]. Negative steering
/// requests a left turn.
struct Action {
    double speed_cmd = 0.0;
    double steer_cmd = 0.0;

    bool operator==(const Action&) const = default;
};

struct ActuatorTargets {
    double speed = 0.0;  // [m/s]
    double steer = 0.0;  // [rad]
};

ActuatorTargets scale_action(Action a, const VehicleParams& p);

/// Inverse of scale_action (targets are clamped to the admissible range first).
Action unscale_action(ActuatorTargets t, const VehicleParams& p);

/// One explicit-Euler step of the kinematic single-track model with
/// rate-limited steering and velocity actuators.
VehicleState step_physics(const VehicleState& s, ActuatorTargets target, const VehicleParams& p, double dt);

/// `n_substeps` applications of step_physics with the targets of `a` held fixed.
VehicleState substep(const VehicleState& s, Action a, const VehicleParams& p, int n_substeps, double dt_physics);

/// Body rectangle of a vehicle in the world frame.
OrientedBox vehicle_box(const VehicleState& s, const VehicleParams& p);

}  // namespace ctxrace
