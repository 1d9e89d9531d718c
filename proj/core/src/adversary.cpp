#include "ctxrace/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "ctxrace/error.hpp"

namespace ctxrace {

Context sample_context(Rng& rng, double lo, double hi) {
    const double c_v = uniform(rng, lo, hi);
    const double c_theta = uniform(rng, lo, hi);
    return {c_v, c_theta};
}

void AdversaryConfig::validate() const {
    if (!(base_lookahead > 0.0)) throw ConfigError("adversary.base_lookahead must be > 0");
    if (!(speed_attenuation > 0.0 && speed_attenuation <= 1.0))
        throw ConfigError("adversary.speed_attenuation must be in (0, 1]");
    if (!(1.0 - std::abs(lambda_theta) * kContextEnvelope > 0.0))
        throw ConfigError("adversary.lambda_theta makes the lookahead non-positive inside the context envelope");
    if (!std::isfinite(lambda_v)) throw ConfigError("adversary.lambda_v must be finite");
}

ContextScales context_scales(const AdversaryConfig& cfg, const Context& ctx) {
    return {1.0 + cfg.lambda_v * ctx.c_v, 1.0 + cfg.lambda_theta * ctx.c_theta};
}

double pure_pursuit_steer(const VehicleState& state, Vec2 goal, const VehicleParams& p) {
    const Vec2 local = rotate(goal - state.position(), -state.yaw);
    const double l_d = norm(local);
    if (l_d <= 0.0) return 0.0;
    const double alpha = std::atan2(local.y, local.x);
    const double left = std::atan(2.0 * p.wheelbase * std::sin(alpha) / l_d);
    return std::clamp(-left, -p.steer_max, p.steer_max);
}

AdversaryCommand adversary_command(const VehicleState& state, const Raceline& raceline, const AdversaryConfig& cfg,
                                   const ContextScales& scales, const VehicleParams& p, ProjectionCache* cache) {
    AdversaryCommand cmd;
    cmd.lookahead = cfg.base_lookahead * scales.lookahead;
    cmd.goal = raceline.lookahead_point(state.position(), cmd.lookahead, cache);
    cmd.steer = pure_pursuit_steer(state, cmd.goal.point, p);
    cmd.speed_unclamped = cmd.goal.target_speed * cfg.speed_attenuation * scales.speed;
    cmd.speed = std::clamp(cmd.speed_unclamped, 0.0, p.v_max);
    cmd.action = unscale_action({cmd.speed, cmd.steer}, p);
    return cmd;
}

}  // namespace ctxrace
