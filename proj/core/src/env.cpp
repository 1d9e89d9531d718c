#include "ctxrace/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ctxrace/error.hpp"

namespace ctxrace {

void EnvConfig::validate() const {
    if (n_adversaries < 0) throw ConfigError("adversaries must be >= 0");
    if (!(start_spacing > 0.0)) throw ConfigError("start_spacing must be > 0");
    if (max_steps <= 0) throw ConfigError("max_steps must be > 0");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(overtake_hysteresis >= 0.0)) throw ConfigError("overtake_hysteresis must be >= 0");
    if (!(context_low <= context_high)) throw ConfigError("context_low must not exceed context_high");
    vehicle.validate();
    lidar.validate();
    adversary.validate();
    raceline.validate();
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::none: return "none";
        case Termination::lap_complete: return "lap_complete";
        case Termination::wall_collision: return "wall_collision";
        case Termination::agent_collision: return "agent_collision";
        case Termination::timeout: return "timeout";
    }
    return "none";
}

Termination termination_from_string(std::string_view name) {
    for (Termination t : {Termination::none, Termination::lap_complete, Termination::wall_collision,
                          Termination::agent_collision, Termination::timeout}) {
        if (to_string(t) == name) return t;
    }
    throw ParseError("unknown termination cause '" + std::string(name) + "'");
}

double dense_reward(const TrackPose& pose, double v, double v_max, double d_c_scale) {
    return v / v_max * std::cos(pose.phi) - pose.d_c / d_c_scale;
}

double compute_reward(const TrackPose& pose, double v, double v_max, const StepEvents& events, const RewardConfig& cfg,
                      double d_c_scale) {
    double r = dense_reward(pose, v, v_max, d_c_scale);
    if (events.crash) r += cfg.crash;
    if (events.lap) r += cfg.lap;
    r += cfg.overtake * events.overtakes;
    r += cfg.overtaken * events.overtaken;
    return r;
}

CollisionReport detect_collisions(const Track& track, std::span<const OrientedBox> bodies) {
    CollisionReport report;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const auto corners = bodies[i].corners();
        const bool off = std::any_of(corners.begin(), corners.end(), [&](Vec2 c) { return !track.contains(c); });
        if (off) {
            if (i == 0) report.agent_wall = true;
            else report.adversary_wall.push_back(i);
        }
        for (std::size_t j = i + 1; j < bodies.size(); ++j) {
            if (!boxes_overlap(bodies[i], bodies[j])) continue;
            if (i == 0) report.agent_hits.push_back(j);
            else report.adversary_pairs.emplace_back(i, j);
        }
    }
    return report;
}

void OvertakeTracker::reset(std::span<const double> gaps) {
    ahead_.assign(gaps.size(), false);
    for (std::size_t i = 0; i < gaps.size(); ++i) ahead_[i] = gaps[i] > 0.0;
}

OvertakeUpdate OvertakeTracker::update(std::span<const double> gaps) {
    if (gaps.size() != ahead_.size()) throw ProtocolError("overtake tracker: adversary count changed");
    OvertakeUpdate u;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (!ahead_[i] && gaps[i] > hysteresis_) {
            ahead_[i] = true;
            ++u.passes;
        } else if (ahead_[i] && gaps[i] < -hysteresis_) {
            ahead_[i] = false;
            ++u.passed_by;
        }
    }
    return u;
}

int OvertakeTracker::ahead_count() const { return static_cast<int>(std::count(ahead_.begin(), ahead_.end(), true)); }

RaceEnv::RaceEnv(EnvConfig cfg, std::shared_ptr<const Track> track, std::shared_ptr<const Raceline> raceline)
    : cfg_(std::move(cfg)),
      track_(std::move(track)),
      raceline_(std::move(raceline)),
      overtakes_(cfg_.overtake_hysteresis) {
    if (!track_ || !raceline_) throw ConfigError("environment needs a track and a raceline");
    cfg_.validate();
    const double field = cfg_.start_spacing * (cfg_.n_adversaries + 1);
    if (field > 0.5 * track_->total_length()) {
        throw ConfigError("starting grid of " + std::to_string(field) + " m exceeds half the track length (" +
                          std::to_string(track_->total_length()) + " m)");
    }
    if (cfg_.n_adversaries > 0 && cfg_.start_spacing <= cfg_.vehicle.body_length)
        throw ConfigError("start_spacing must exceed the vehicle body length");
}

std::vector<OrientedBox> RaceEnv::bodies() const {
    std::vector<OrientedBox> out;
    out.reserve(vehicles_.size());
    for (const VehicleState& v : vehicles_) out.push_back(vehicle_box(v, cfg_.vehicle));
    return out;
}

LidarScan RaceEnv::observe() {
    ObstacleSet obstacles{track_->walls(), {}};
    for (std::size_t i = 1; i < vehicles_.size(); ++i) obstacles.boxes.push_back(vehicle_box(vehicles_[i], cfg_.vehicle));
    return apply_noise(scan(vehicles_[0], obstacles, cfg_.lidar), rng_, cfg_.lidar.noise_std);
}

std::vector<double> RaceEnv::gaps() const {
    std::vector<double> g;
    for (std::size_t i = 1; i < laps_.size(); ++i) g.push_back(laps_[0].distance() - laps_[i].distance());
    return g;
}

StepInfo RaceEnv::snapshot() const {
    StepInfo info;
    info.step = step_;
    info.progress = laps_[0].progress();
    info.max_progress = max_progress_;
    info.overtake_score = overtake_score_;
    info.agent_pose = agent_pose_;
    info.vehicles = vehicles_;
    return info;
}

ResetResult RaceEnv::reset(std::uint64_t seed, std::optional<Context> ctx) {
    if (ctx) {
        for (double c : {ctx->c_v, ctx->c_theta}) {
            if (!(std::abs(c) <= kContextEnvelope + 1e-9))
                throw ConfigError("context coordinate " + std::to_string(c) + " outside [-0.3, 0.3]");
        }
    }
    rng_.seed(seed);
    ctx_ = ctx ? *ctx : sample_context(rng_, cfg_.context_low, cfg_.context_high);
    scales_ = context_scales(cfg_.adversary, ctx_);

    const std::size_t n = static_cast<std::size_t>(cfg_.n_adversaries) + 1;
    vehicles_.assign(n, VehicleState{});
    halted_.assign(n, false);
    track_cache_.assign(n, ProjectionCache{});
    line_cache_.assign(n, ProjectionCache{});
    commands_.clear();
    laps_.clear();

    const double s_agent = std::fmod(std::fmod(cfg_.start_s, track_->total_length()) + track_->total_length(),
                                     track_->total_length());
    for (std::size_t k = 0; k < n; ++k) {
        const double s = s_agent + static_cast<double>(k) * cfg_.start_spacing;
        const Vec2 p = track_->point_at(s);
        VehicleState& v = vehicles_[k];
        v.x = p.x;
        v.y = p.y;
        v.yaw = wrap_angle(track_->heading_at(s));
        v.slip = 0.0;
    }
    agent_pose_ = track_->project(vehicles_[0].position(), vehicles_[0].yaw, &track_cache_[0]);
    for (std::size_t k = 0; k < n; ++k) {
        LapCounter counter(track_->total_length(), agent_pose_.s);
        const TrackPose pose =
            k == 0 ? agent_pose_ : track_->project(vehicles_[k].position(), vehicles_[k].yaw, &track_cache_[k]);
        counter.update(pose.s);
        laps_.push_back(counter);
    }
    overtakes_ = OvertakeTracker(cfg_.overtake_hysteresis);
    overtakes_.reset(gaps());
    step_ = 0;
    max_progress_ = 0.0;
    overtake_score_ = 0;
    active_ = true;

    ResetResult out;
    out.obs = observe();
    out.context = ctx_;
    out.info = snapshot();
    return out;
}

StepResult RaceEnv::step(Action action) {
    if (!active_) throw ProtocolError("step called without an active episode; call reset first");
    const std::size_t n = vehicles_.size();

    // Every adversary plans from the same pre-step world.
    commands_.assign(n - 1, AdversaryCommand{});
    std::vector<ActuatorTargets> targets(n);
    targets[0] = scale_action(action, cfg_.vehicle);
    for (std::size_t k = 1; k < n; ++k) {
        commands_[k - 1] = adversary_command(vehicles_[k], *raceline_, cfg_.adversary, scales_, cfg_.vehicle,
                                             &line_cache_[k]);
        targets[k] = scale_action(commands_[k - 1].action, cfg_.vehicle);
    }

    CollisionReport contacts;
    std::vector<std::pair<std::size_t, std::size_t>> adversary_contacts;
    std::vector<std::size_t> adversary_wall;
    bool agent_hit = false, agent_wall = false;
    for (int sub = 0; sub < cfg_.substeps; ++sub) {
        for (std::size_t k = 0; k < n; ++k) {
            if (halted_[k]) continue;
            vehicles_[k] = step_physics(vehicles_[k], targets[k], cfg_.vehicle, cfg_.dt);
        }
        contacts = detect_collisions(*track_, bodies());
        for (const auto& pair : contacts.adversary_pairs) {
            for (std::size_t k : {pair.first, pair.second}) {
                halted_[k] = true;
                vehicles_[k].v = 0.0;
                vehicles_[k].yaw_rate = 0.0;
            }
            if (std::find(adversary_contacts.begin(), adversary_contacts.end(), pair) == adversary_contacts.end())
                adversary_contacts.push_back(pair);
        }
        for (std::size_t k : contacts.adversary_wall) {
            if (std::find(adversary_wall.begin(), adversary_wall.end(), k) == adversary_wall.end())
                adversary_wall.push_back(k);
        }
        agent_hit = contacts.agent_collision();
        agent_wall = contacts.agent_wall;
        if (agent_hit || agent_wall) break;
    }
    ++step_;

    agent_pose_ = track_->project(vehicles_[0].position(), vehicles_[0].yaw, &track_cache_[0]);
    laps_[0].update(agent_pose_.s);
    for (std::size_t k = 1; k < n; ++k)
        laps_[k].update(track_->project(vehicles_[k].position(), vehicles_[k].yaw, &track_cache_[k]).s);
    const double progress = laps_[0].progress();
    max_progress_ = std::max(max_progress_, progress);

    const OvertakeUpdate passes = overtakes_.update(gaps());
    overtake_score_ += passes.delta();

    Termination cause = Termination::none;
    if (agent_hit) cause = Termination::agent_collision;
    else if (agent_wall) cause = Termination::wall_collision;
    else if (progress >= 1.0) cause = Termination::lap_complete;
    else if (step_ >= cfg_.max_steps) cause = Termination::timeout;

    StepEvents events;
    events.crash = cause == Termination::agent_collision || cause == Termination::wall_collision;
    events.lap = cause == Termination::lap_complete;
    events.overtakes = passes.passes;
    events.overtaken = passes.passed_by;

    double d_c_scale = 1.0;
    if (cfg_.reward.normalize_dc) {
        const auto [wl, wr] = track_->widths_at(agent_pose_.s);
        d_c_scale = agent_pose_.lateral >= 0.0 ? wl : wr;
    }

    StepResult out;
    out.reward = compute_reward(agent_pose_, vehicles_[0].v, cfg_.vehicle.v_max, events, cfg_.reward, d_c_scale);
    out.done = cause != Termination::none;
    out.info = snapshot();
    out.info.cause = cause;
    out.info.overtake_delta = passes.delta();
    out.info.dense_reward = dense_reward(agent_pose_, vehicles_[0].v, cfg_.vehicle.v_max, d_c_scale);
    out.info.adversary_contacts = std::move(adversary_contacts);
    out.info.adversary_wall = std::move(adversary_wall);
    out.obs = observe();
    active_ = !out.done;
    return out;
}

std::vector<VehicleState> simulate_adversary(const Raceline& raceline, const AdversaryConfig& cfg, const Context& ctx,
                                             const VehicleParams& p, const VehicleState& start, int agent_steps,
                                             int substeps, double dt, std::vector<AdversaryCommand>* commands) {
    const ContextScales scales = context_scales(cfg, ctx);
    ProjectionCache cache;
    std::vector<VehicleState> out{start};
    out.reserve(static_cast<std::size_t>(agent_steps * substeps) + 1);
    VehicleState s = start;
    for (int k = 0; k < agent_steps; ++k) {
        const AdversaryCommand cmd = adversary_command(s, raceline, cfg, scales, p, &cache);
        if (commands != nullptr) commands->push_back(cmd);
        const ActuatorTargets target = scale_action(cmd.action, p);
        for (int i = 0; i < substeps; ++i) {
            s = step_physics(s, target, p, dt);
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace ctxrace
