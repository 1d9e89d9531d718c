#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxrace/adversary.hpp"
#include "ctxrace/dynamics.hpp"
#include "ctxrace/raceline.hpp"
#include "ctxrace/rng.hpp"
#include "ctxrace/sensing.hpp"
#include "ctxrace/track.hpp"

namespace ctxrace {

struct RewardConfig {
    /// Divide d_c by the half-width on the agent's side instead of using metres.
    bool normalize_dc = false;
    double crash = -1.0;
    double lap = 1.0;
    double overtake = 1.0;
    double overtaken = -1.0;
};

struct EnvConfig {
    int n_adversaries = 1;
    double start_spacing = 1.5;  // [m] along the centerline between consecutive cars
    double start_s = 0.0;        // [m] arc length of the trainable agent at reset
    int max_steps = 3000;
    int substeps = 10;
    double dt = 0.01;                  // physics step [s]
    double overtake_hysteresis = 0.1;  // [m]
    double context_low = -kTrainingRange;
    double context_high = kTrainingRange;

    VehicleParams vehicle;
    LidarConfig lidar;
    AdversaryConfig adversary;
    RacelineParams raceline;
    RewardConfig reward;

    void validate() const;
};

enum class Termination { none, lap_complete, wall_collision, agent_collision, timeout };

std::string_view to_string(Termination t);
/// Throws ParseError for unknown names.
Termination termination_from_string(std::string_view name);

/// Things that happened during one agent step and feed the reward.
struct StepEvents {
    bool crash = false;
    bool lap = false;
    int overtakes = 0;  // adversaries the agent passed
    int overtaken = 0;  // adversaries that passed the agent
};

/// Cross-track and heading term: (v / v_max) cos(phi) - d_c / d_c_scale.
double dense_reward(const TrackPose& pose, double v, double v_max, double d_c_scale = 1.0);

/// Dense term plus the event bonuses of `cfg`.
double compute_reward(const TrackPose& pose, double v, double v_max, const StepEvents& events,
                      const RewardConfig& cfg = {}, double d_c_scale = 1.0);

/// Index 0 is the trainable agent, the rest are adversaries.
struct CollisionReport {
    bool agent_wall = false;
    std::vector<std::size_t> agent_hits;                              // adversaries touching the agent
    std::vector<std::pair<std::size_t, std::size_t>> adversary_pairs;  // adversary-adversary contacts
    std::vector<std::size_t> adversary_wall;                         // adversaries with a corner off track

    bool agent_collision() const { return !agent_hits.empty(); }
};

CollisionReport detect_collisions(const Track& track, std::span<const OrientedBox> bodies);

struct OvertakeUpdate {
    int passes = 0;     // adversaries overtaken by the agent
    int passed_by = 0;  // adversaries that overtook the agent

    int delta() const { return passes - passed_by; }
};

/// Tracks the agent's ordering against every adversary from the progress gap
/// g = agent_distance - adversary_distance. A pass registers once g exceeds
/// +h after having been below -h, and symmetrically.
class OvertakeTracker {
  public:
    explicit OvertakeTracker(double hysteresis = 0.1) : hysteresis_(hysteresis) {}

    void reset(std::span<const double> gaps);
    OvertakeUpdate update(std::span<const double> gaps);
    /// Number of adversaries the agent is currently considered ahead of.
    int ahead_count() const;

  private:
    double hysteresis_;
    std::vector<bool> ahead_;
};

struct StepInfo {
    int step = 0;
    double progress = 0.0;
    double max_progress = 0.0;
    int overtake_delta = 0;
    int overtake_score = 0;
    Termination cause = Termination::none;
    double dense_reward = 0.0;
    TrackPose agent_pose;
    std::vector<VehicleState> vehicles;  // agent first
    std::vector<std::pair<std::size_t, std::size_t>> adversary_contacts;
    std::vector<std::size_t> adversary_wall;
};

struct StepResult {
    LidarScan obs;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

struct ResetResult {
    LidarScan obs;
    Context context;
    StepInfo info;
};

/// One head-to-head race episode at a time. Owns all episode state; not
/// thread-safe, but independent instances may run on different threads.
class RaceEnv {
  public:
    RaceEnv(EnvConfig cfg, std::shared_ptr<const Track> track, std::shared_ptr<const Raceline> raceline);

    /// Places the field and returns the first noisy scan. Without a context
    /// one is sampled from [context_low, context_high] using the episode rng.
    ResetResult reset(std::uint64_t seed, std::optional<Context> ctx = std::nullopt);

    /// Throws ProtocolError before the first reset or after the episode ended.
    StepResult step(Action action);

    bool active() const { return active_; }
    const EnvConfig& config() const { return cfg_; }
    const Track& track() const { return *track_; }
    const Raceline& raceline() const { return *raceline_; }
    const Context& context() const { return ctx_; }
    const std::vector<VehicleState>& vehicles() const { return vehicles_; }
    /// Commands the adversaries used in the most recent step.
    const std::vector<AdversaryCommand>& adversary_commands() const { return commands_; }

  private:
    std::vector<OrientedBox> bodies() const;
    LidarScan observe();
    std::vector<double> gaps() const;
    StepInfo snapshot() const;

    EnvConfig cfg_;
    std::shared_ptr<const Track> track_;
    std::shared_ptr<const Raceline> raceline_;

    Rng rng_;
    Context ctx_;
    ContextScales scales_;
    std::vector<VehicleState> vehicles_;
    std::vector<bool> halted_;
    std::vector<LapCounter> laps_;
    std::vector<ProjectionCache> track_cache_;
    std::vector<ProjectionCache> line_cache_;
    std::vector<AdversaryCommand> commands_;
    OvertakeTracker overtakes_;
    TrackPose agent_pose_;
    int step_ = 0;
    double max_progress_ = 0.0;
    int overtake_score_ = 0;
    bool active_ = false;
};

/// Drives a single adversary alone on its raceline for `agent_steps` steps and
/// returns the state after every physics substep (the start state first).
std::vector<VehicleState> simulate_adversary(const Raceline& raceline, const AdversaryConfig& cfg, const Context& ctx,
                                             const VehicleParams& p, const VehicleState& start, int agent_steps,
                                             int substeps = 10, double dt = 0.01,
                                             std::vector<AdversaryCommand>* commands = nullptr);

}  // namespace ctxrace
