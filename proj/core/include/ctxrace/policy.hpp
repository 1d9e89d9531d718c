#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "ctxrace/env.hpp"

namespace ctxrace {

struct Scenario;

/// Decides the trainable agent's action from each observation.
class Policy {
  public:
    virtual ~Policy() = default;

    virtual void begin_episode(std::uint64_t seed, const ResetResult& reset) = 0;
    /// `reward` is the reward of the step that produced `obs` (0 right after reset).
    virtual Action act(const LidarScan& obs, const StepInfo& info, double reward) = 0;
};

/// Always {-1, 0}: stands still.
class IdlePolicy final : public Policy {
  public:
    void begin_episode(std::uint64_t, const ResetResult&) override {}
    Action act(const LidarScan&, const StepInfo&, double) override { return {-1.0, 0.0}; }
};

/// Uniform actions from a stream seeded by the episode seed.
class RandomPolicy final : public Policy {
  public:
    void begin_episode(std::uint64_t seed, const ResetResult& reset) override;
    Action act(const LidarScan& obs, const StepInfo& info, double reward) override;

  private:
    Rng rng_;
};

/// Privileged pure-pursuit driver on the raceline at `speed_scale` times the
/// raceline target speed. Reads the agent pose from the step info.
class RacelinePolicy final : public Policy {
  public:
    RacelinePolicy(std::shared_ptr<const Raceline> raceline, VehicleParams vehicle, double speed_scale,
                   double lookahead = 1.2);

    void begin_episode(std::uint64_t seed, const ResetResult& reset) override;
    Action act(const LidarScan& obs, const StepInfo& info, double reward) override;

  private:
    std::shared_ptr<const Raceline> raceline_;
    VehicleParams vehicle_;
    AdversaryConfig cfg_;
    ProjectionCache cache_;
};

/// Pure pursuit on the track centerline at a constant `speed_scale * v_max`.
class CenterlinePolicy final : public Policy {
  public:
    CenterlinePolicy(std::shared_ptr<const Track> track, VehicleParams vehicle, double speed_scale,
                     double lookahead = 1.2);

    void begin_episode(std::uint64_t seed, const ResetResult& reset) override;
    Action act(const LidarScan& obs, const StepInfo& info, double reward) override;

  private:
    std::shared_ptr<const Track> track_;
    VehicleParams vehicle_;
    double speed_scale_;
    double lookahead_;
    ProjectionCache cache_;
};

/// Forwards observations to an external process over TCP using the act/action
/// messages of the protocol. Throws ProtocolError when the peer misbehaves.
class RemotePolicy final : public Policy {
  public:
    RemotePolicy(const std::string& host, std::uint16_t port);
    ~RemotePolicy() override;

    void begin_episode(std::uint64_t seed, const ResetResult& reset) override;
    Action act(const LidarScan& obs, const StepInfo& info, double reward) override;

  private:
    struct Connection;
    std::unique_ptr<Connection> conn_;
    Context context_;
    bool first_ = true;
};

/// `idle`, `random`, `raceline[:scale]`, `centerline[:scale]` or
/// `tcp:host:port`. Throws ConfigError for anything else.
std::unique_ptr<Policy> make_policy(std::string_view spec, const Scenario& scenario);

}  // namespace ctxrace
