#include "ctxrace/policy.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "ctxrace/config.hpp"
#include "ctxrace/error.hpp"
#include "ctxrace/protocol.hpp"
#include "net.hpp"

namespace ctxrace {

void RandomPolicy::begin_episode(std::uint64_t seed, const ResetResult&) { rng_.seed(mix_seed(seed, 0x72616e64)); }

Action RandomPolicy::act(const LidarScan&, const StepInfo&, double) {
    const double speed = uniform(rng_, -1.0, 1.0);
    const double steer = uniform(rng_, -1.0, 1.0);
    return {speed, steer};
}

RacelinePolicy::RacelinePolicy(std::shared_ptr<const Raceline> raceline, VehicleParams vehicle, double speed_scale,
                               double lookahead)
    : raceline_(std::move(raceline)), vehicle_(vehicle) {
    cfg_.base_lookahead = lookahead;
    cfg_.speed_attenuation = speed_scale;
    cfg_.lambda_v = 0.0;
    cfg_.lambda_theta = 0.0;
    cfg_.validate();
}

void RacelinePolicy::begin_episode(std::uint64_t, const ResetResult&) { cache_ = {}; }

Action RacelinePolicy::act(const LidarScan&, const StepInfo& info, double) {
    return adversary_command(info.vehicles.at(0), *raceline_, cfg_, {1.0, 1.0}, vehicle_, &cache_).action;
}

CenterlinePolicy::CenterlinePolicy(std::shared_ptr<const Track> track, VehicleParams vehicle, double speed_scale,
                                   double lookahead)
    : track_(std::move(track)), vehicle_(vehicle), speed_scale_(speed_scale), lookahead_(lookahead) {
    if (!(speed_scale > 0.0 && speed_scale <= 1.0)) throw ConfigError("centerline speed scale must be in (0, 1]");
    if (!(lookahead > 0.0)) throw ConfigError("centerline lookahead must be > 0");
}

void CenterlinePolicy::begin_episode(std::uint64_t, const ResetResult&) { cache_ = {}; }

Action CenterlinePolicy::act(const LidarScan&, const StepInfo& info, double) {
    const VehicleState& s = info.vehicles.at(0);
    const TrackPose pose = track_->project(s.position(), s.yaw, &cache_);
    const Vec2 goal = track_->point_at(pose.s + lookahead_);
    return unscale_action({speed_scale_ * vehicle_.v_max, pure_pursuit_steer(s, goal, vehicle_)}, vehicle_);
}

struct RemotePolicy::Connection {
    detail::Socket socket;
    detail::LineReader reader;

    explicit Connection(detail::Socket s) : socket(std::move(s)), reader(socket.fd()) {}
};

RemotePolicy::RemotePolicy(const std::string& host, std::uint16_t port)
    : conn_(std::make_unique<Connection>(detail::connect_tcp(host, port))) {}

RemotePolicy::~RemotePolicy() = default;

void RemotePolicy::begin_episode(std::uint64_t, const ResetResult& reset) {
    context_ = reset.context;
    first_ = true;
}

Action RemotePolicy::act(const LidarScan& obs, const StepInfo&, double reward) {
    ActRequest req{obs.beams, reward, first_, context_};
    first_ = false;
    if (!detail::write_all(conn_->socket.fd(), encode(req) + '\n'))
        throw ProtocolError("remote policy closed the connection");
    const auto line = conn_->reader.next();
    if (!line) throw ProtocolError("remote policy closed the connection");
    try {
        return decode_action(*line).action;
    } catch (const ParseError& e) {
        throw ProtocolError(std::string("remote policy sent an invalid action: ") + e.what());
    }
}

namespace {

double parse_scale(std::string_view text, std::string_view spec) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size())
        throw ConfigError("invalid speed scale in agent '" + std::string(spec) + "'");
    return v;
}

}  // namespace

std::unique_ptr<Policy> make_policy(std::string_view spec, const Scenario& scenario) {
    const auto colon = spec.find(':');
    const std::string_view name = spec.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (name == "idle" && arg.empty()) return std::make_unique<IdlePolicy>();
    if (name == "random" && arg.empty()) return std::make_unique<RandomPolicy>();
    if (name == "raceline") {
        const double scale = arg.empty() ? 0.5 : parse_scale(arg, spec);
        return std::make_unique<RacelinePolicy>(scenario.raceline, scenario.env.vehicle, scale);
    }
    if (name == "centerline") {
        const double scale = arg.empty() ? 0.3 : parse_scale(arg, spec);
        return std::make_unique<CenterlinePolicy>(scenario.track, scenario.env.vehicle, scale);
    }
    if (name == "tcp") {
        const auto [host, port] = detail::parse_endpoint(arg);
        return std::make_unique<RemotePolicy>(host, port);
    }
    throw ConfigError("unknown agent '" + std::string(spec) +
                      "' (expected idle, random, raceline[:scale], centerline[:scale] or tcp:host:port)");
}

}  // namespace ctxrace
