#pragma once

#include "ctxrace/dynamics.hpp"
#include "ctxrace/raceline.hpp"
#include "ctxrace/rng.hpp"

namespace ctxrace {

/// Episode-level behaviour parameters of every adversary. c_v scales speed
/// commands, c_theta scales the pure-pursuit lookahead.
struct Context {
    double c_v = 0.0;
    double c_theta = 0.0;

    bool operator==(const Context&) const = default;
};

/// Evaluation envelope and default training range, per coordinate.
inline constexpr double kContextEnvelope = 0.3;
inline constexpr double kTrainingRange = 0.15;

/// Both coordinates drawn independently and uniformly from [lo, hi].
Context sample_context(Rng& rng, double lo = -kTrainingRange, double hi = kTrainingRange);

struct AdversaryConfig {
    double base_lookahead = 1.2;     // [m]
    double lambda_v = 1.0;           // speed context gain
    double lambda_theta = 1.0;       // lookahead context gain
    double speed_attenuation = 0.3;  // fraction of the raceline speed kept

    /// Throws ConfigError. The lookahead factor must stay positive over the
    /// whole evaluation envelope.
    void validate() const;
};

/// The two multiplicative factors through which the context acts. Computed
/// once per episode.
struct ContextScales {
    double speed = 1.0;      // 1 + lambda_v * c_v
    double lookahead = 1.0;  // 1 + lambda_theta * c_theta
};

ContextScales context_scales(const AdversaryConfig& cfg, const Context& ctx);

/// Geometric pure pursuit from the vehicle centre. Returns the steering angle
/// in the action convention (positive right), clamped to +-steer_max.
double pure_pursuit_steer(const VehicleState& state, Vec2 goal, const VehicleParams& p);

struct AdversaryCommand {
    double lookahead = 0.0;        // effective lookahead distance [m]
    LookaheadPoint goal;
    double speed_unclamped = 0.0;  // attenuated, context-scaled, before the clamp
    double speed = 0.0;            // clamped to [0, v_max]
    double steer = 0.0;
    Action action;
};

AdversaryCommand adversary_command(const VehicleState& state, const Raceline& raceline, const AdversaryConfig& cfg,
                                   const ContextScales& scales, const VehicleParams& p,
                                   ProjectionCache* cache = nullptr);

inline Action adversary_action(const VehicleState& state, const Raceline& raceline, const AdversaryConfig& cfg,
                               const Context& ctx, const VehicleParams& p) {
    return adversary_command(state, raceline, cfg, context_scales(cfg, ctx), p).action;
}

}  // namespace ctxrace
