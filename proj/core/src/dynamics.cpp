#include "ctxrace/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "ctxrace/error.hpp"

namespace ctxrace {

void VehicleParams::validate() const {
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("vehicle.") + name + " must be > 0");
    };
    positive(wheelbase, "wheelbase");
    positive(lf, "lf");
    positive(lr, "lr");
    positive(mass, "mass");
    positive(steer_max, "steer_max");
    positive(v_max, "v_max");
    positive(accel_max, "accel_max");
    positive(steer_rate_max, "steer_rate_max");
    positive(body_length, "body_length");
    positive(body_width, "body_width");
    if (std::abs(lf + lr - wheelbase) > 1e-9) throw ConfigError("vehicle.lf + vehicle.lr must equal vehicle.wheelbase");
    if (steer_max >= std::numbers::pi / 2) throw ConfigError("vehicle.steer_max must be below pi/2");
}

ActuatorTargets scale_action(Action a, const VehicleParams& p) {
    const double speed_cmd = std::clamp(a.speed_cmd, -1.0, 1.0);
    const double steer_cmd = std::clamp(a.steer_cmd, -1.0, 1.0);
    return {(speed_cmd + 1.0) / 2.0 * p.v_max, steer_cmd * p.steer_max};
}

Action unscale_action(ActuatorTargets t, const VehicleParams& p) {
    const double speed = std::clamp(t.speed, 0.0, p.v_max);
    const double steer = std::clamp(t.steer, -p.steer_max, p.steer_max);
    return {std::clamp(2.0 * speed / p.v_max - 1.0, -1.0, 1.0), std::clamp(steer / p.steer_max, -1.0, 1.0)};
}

namespace {

// Steering is stored with the right-positive convention of the action space;
// the kinematics below work in the counter-clockwise math frame.
double slip_angle(double delta_ccw, const VehicleParams& p) {
    if (!p.model_slip) return 0.0;
    return std::atan(p.lr * std::tan(delta_ccw) / p.wheelbase);
}

double yaw_rate_of(double v, double delta_ccw, double beta, const VehicleParams& p) {
    return v * std::cos(beta) * std::tan(delta_ccw) / p.wheelbase;
}

double rate_limited(double current, double target, double max_delta) {
    return current + std::clamp(target - current, -max_delta, max_delta);
}

}  // namespace

VehicleState step_physics(const VehicleState& s, ActuatorTargets target, const VehicleParams& p, double dt) {
    const double delta = -s.steer;
    const double beta = slip_angle(delta, p);
    const double omega = yaw_rate_of(s.v, delta, beta, p);

    VehicleState next;
    next.x = s.x + s.v * std::cos(s.yaw + beta) * dt;
    next.y = s.y + s.v * std::sin(s.yaw + beta) * dt;
    next.yaw = wrap_angle(s.yaw + omega * dt);

    const double steer_target = std::clamp(target.steer, -p.steer_max, p.steer_max);
    const double speed_target = std::clamp(target.speed, 0.0, p.v_max);
    next.steer = std::clamp(rate_limited(s.steer, steer_target, p.steer_rate_max * dt), -p.steer_max, p.steer_max);
    next.v = std::clamp(rate_limited(s.v, speed_target, p.accel_max * dt), 0.0, p.v_max);

    next.slip = slip_angle(-next.steer, p);
    next.yaw_rate = yaw_rate_of(next.v, -next.steer, next.slip, p);
    return next;
}

VehicleState substep(const VehicleState& s, Action a, const VehicleParams& p, int n_substeps, double dt_physics) {
    const ActuatorTargets target = scale_action(a, p);
    VehicleState out = s;
    for (int i = 0; i < n_substeps; ++i) out = step_physics(out, target, p, dt_physics);
    return out;
}

OrientedBox vehicle_box(const VehicleState& s, const VehicleParams& p) {
    return {s.position(), s.yaw, p.body_length, p.body_width};
}

}  // namespace ctxrace
