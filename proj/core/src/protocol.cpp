#include "ctxrace/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "ctxrace/error.hpp"

namespace ctxrace {

namespace {

using nlohmann::json;

class Writer {
  public:
    Writer& open() {
        sep();
        out_ += '{';
        first_ = true;
        return *this;
    }
    Writer& close() {
        out_ += '}';
        first_ = false;
        return *this;
    }
    Writer& open_array() {
        sep();
        out_ += '[';
        first_ = true;
        return *this;
    }
    Writer& close_array() {
        out_ += ']';
        first_ = false;
        return *this;
    }
    Writer& key(std::string_view k) {
        sep();
        out_ += json_quote(k);
        out_ += ':';
        first_ = true;
        return *this;
    }
    Writer& real(double v) {
        sep();
        out_ += format_real(v);
        return *this;
    }
    Writer& integer(long long v) {
        sep();
        out_ += std::to_string(v);
        return *this;
    }
    Writer& unsigned_integer(std::uint64_t v) {
        sep();
        out_ += std::to_string(v);
        return *this;
    }
    Writer& boolean(bool v) {
        sep();
        out_ += v ? "true" : "false";
        return *this;
    }
    Writer& string(std::string_view v) {
        sep();
        out_ += json_quote(v);
        return *this;
    }
    Writer& reals(std::span<const double> vs) {
        open_array();
        for (double v : vs) real(v);
        return close_array();
    }
    Writer& pair(double a, double b) {
        const double v[2] = {a, b};
        return reals(v);
    }

    std::string take() { return std::move(out_); }

  private:
    void sep() {
        if (!first_) out_ += ',';
        first_ = false;
    }

    std::string out_;
    bool first_ = true;
};

// Duplicate keys are detected while parsing; nlohmann would keep the last one.
json parse_strict(std::string_view line) {
    if (line.empty()) throw ParseError("empty message");
    std::vector<std::set<std::string>> stack;
    std::string duplicate;
    const json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start: stack.emplace_back(); break;
            case json::parse_event_t::object_end: stack.pop_back(); break;
            case json::parse_event_t::key: {
                const std::string k = parsed.get<std::string>();
                if (!stack.back().insert(k).second && duplicate.empty()) duplicate = k;
                break;
            }
            default: break;
        }
        return true;
    };
    json j;
    try {
        j = json::parse(line.begin(), line.end(), cb);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!duplicate.empty()) throw ParseError("duplicate key '" + duplicate + "'");
    if (!j.is_object()) throw ParseError("message must be a JSON object");
    return j;
}

std::string type_of(const json& j) {
    const auto it = j.find("type");
    if (it == j.end() || !it->is_string()) throw ParseError("missing string field 'type'");
    return it->get<std::string>();
}

void allow_only(const json& j, std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : j.items()) {
        bool known = k == "type";
        for (std::string_view allowed : keys) known = known || k == allowed;
        if (!known) throw ParseError("unknown field '" + k + "'");
    }
}

const json& field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
    return *it;
}

double real_of(const json& v, const char* what) {
    if (!v.is_number()) throw ParseError(std::string("'") + what + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(std::string("'") + what + "' must be finite");
    return d;
}

int int_of(const json& v, const char* what) {
    if (!v.is_number_integer()) throw ParseError(std::string("'") + what + "' must be an integer");
    const auto i = v.get<long long>();
    if (i < -(1LL << 31) || i >= (1LL << 31)) throw ParseError(std::string("'") + what + "' out of range");
    return static_cast<int>(i);
}

bool bool_of(const json& v, const char* what) {
    if (!v.is_boolean()) throw ParseError(std::string("'") + what + "' must be a boolean");
    return v.get<bool>();
}

std::vector<double> reals_of(const json& v, const char* what, std::optional<std::size_t> size = std::nullopt) {
    if (!v.is_array()) throw ParseError(std::string("'") + what + "' must be an array");
    if (size && v.size() != *size)
        throw ParseError(std::string("'") + what + "' must have " + std::to_string(*size) + " entries, got " +
                         std::to_string(v.size()));
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) out.push_back(real_of(e, what));
    return out;
}

Context context_of(const json& v) {
    const auto c = reals_of(v, "context", 2);
    return {c[0], c[1]};
}

std::array<double, 2> range_of(const json& v, const char* what) {
    const auto r = reals_of(v, what, 2);
    return {r[0], r[1]};
}

StateInfoMessage info_of(const json& j) {
    if (!j.is_object()) throw ParseError("'info' must be an object");
    allow_only(j, {"step", "progress", "max_progress", "overtake_delta", "overtake_score", "cause", "context", "poses"});
    if (j.contains("type")) throw ParseError("unknown field 'type'");
    StateInfoMessage info;
    info.step = int_of(field(j, "step"), "step");
    info.progress = real_of(field(j, "progress"), "progress");
    info.max_progress = real_of(field(j, "max_progress"), "max_progress");
    info.overtake_delta = int_of(field(j, "overtake_delta"), "overtake_delta");
    info.overtake_score = int_of(field(j, "overtake_score"), "overtake_score");
    const json& cause = field(j, "cause");
    if (!cause.is_string()) throw ParseError("'cause' must be a string");
    info.cause = termination_from_string(cause.get<std::string>());
    info.context = context_of(field(j, "context"));
    const json& poses = field(j, "poses");
    if (!poses.is_array()) throw ParseError("'poses' must be an array");
    for (const json& p : poses) {
        const auto v = reals_of(p, "poses", 4);
        info.poses.push_back({v[0], v[1], v[2], v[3]});
    }
    return info;
}

void write_state(Writer& w, const StateResponse& s) {
    w.open().key("type").string("state");
    w.key("obs").reals(s.obs);
    w.key("reward").real(s.reward);
    w.key("done").boolean(s.done);
    w.key("info").open();
    w.key("step").integer(s.info.step);
    w.key("progress").real(s.info.progress);
    w.key("max_progress").real(s.info.max_progress);
    w.key("overtake_delta").integer(s.info.overtake_delta);
    w.key("overtake_score").integer(s.info.overtake_score);
    w.key("cause").string(to_string(s.info.cause));
    w.key("context").pair(s.info.context.c_v, s.info.context.c_theta);
    w.key("poses").open_array();
    for (const auto& p : s.info.poses) w.reals(p);
    w.close_array();
    w.close();
    w.close();
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse: return "PARSE";
        case ErrorCode::protocol: return "PROTOCOL";
        case ErrorCode::config: return "CONFIG";
    }
    return "PARSE";
}

std::string json_quote(std::string_view raw) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size() + 2);
    out += '"';
    for (const char ch : raw) {
        const auto c = static_cast<unsigned char>(ch);
        if (c == '"') out += "\\\"";
        else if (c == '\\') out += "\\\\";
        else if (c >= 0x20 && c < 0x7f) out += ch;
        else {
            out += "\\u00";
            out += hex[c >> 4];
            out += hex[c & 0xf];
        }
    }
    out += '"';
    return out;
}

std::string format_real(double v) {
    if (!std::isfinite(v)) throw Error("cannot encode a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

SpecResponse make_spec(const EnvConfig& cfg) {
    SpecResponse s;
    s.obs_dim = cfg.lidar.beams;
    s.action_dim = 2;
    s.physics_hz = 1.0 / cfg.dt;
    s.agent_hz = 1.0 / (cfg.dt * cfg.substeps);
    s.n_adversaries = cfg.n_adversaries;
    s.training_range = {cfg.context_low, cfg.context_high};
    return s;
}

StateResponse make_state(const LidarScan& obs, double reward, bool done, const StepInfo& info, const Context& ctx) {
    StateResponse s;
    s.obs = obs.beams;
    s.reward = reward;
    s.done = done;
    s.info.step = info.step;
    s.info.progress = info.progress;
    s.info.max_progress = info.max_progress;
    s.info.overtake_delta = info.overtake_delta;
    s.info.overtake_score = info.overtake_score;
    s.info.cause = info.cause;
    s.info.context = ctx;
    for (const VehicleState& v : info.vehicles) s.info.poses.push_back({v.x, v.y, v.yaw, v.v});
    return s;
}

std::string encode(const Request& msg) {
    Writer w;
    std::visit(overloaded{
                   [&](const SpecRequest&) { w.open().key("type").string("spec").close(); },
                   [&](const ResetRequest& r) {
                       w.open().key("type").string("reset").key("seed").unsigned_integer(r.seed);
                       if (r.context) w.key("context").pair(r.context->c_v, r.context->c_theta);
                       w.close();
                   },
                   [&](const StepRequest& r) {
                       w.open().key("type").string("step");
                       w.key("action").pair(r.action.speed_cmd, r.action.steer_cmd).close();
                   },
                   [&](const CloseRequest&) { w.open().key("type").string("close").close(); },
               },
               msg);
    return w.take();
}

std::string encode(const Response& msg) {
    Writer w;
    std::visit(overloaded{
                   [&](const SpecResponse& s) {
                       w.open().key("type").string("spec");
                       w.key("obs_dim").integer(s.obs_dim);
                       w.key("action_dim").integer(s.action_dim);
                       w.key("physics_hz").real(s.physics_hz);
                       w.key("agent_hz").real(s.agent_hz);
                       w.key("n_adversaries").integer(s.n_adversaries);
                       w.key("context_envelope").reals(s.context_envelope);
                       w.key("training_range").reals(s.training_range);
                       w.close();
                   },
                   [&](const StateResponse& s) { write_state(w, s); },
                   [&](const ErrorResponse& e) {
                       w.open().key("type").string("error");
                       w.key("code").string(to_string(e.code)).key("detail").string(e.detail).close();
                   },
                   [&](const ClosedResponse&) { w.open().key("type").string("closed").close(); },
               },
               msg);
    return w.take();
}

std::string encode(const ActRequest& msg) {
    Writer w;
    w.open().key("type").string("act");
    w.key("obs").reals(msg.obs);
    w.key("reward").real(msg.reward);
    w.key("first").boolean(msg.first);
    w.key("context").pair(msg.context.c_v, msg.context.c_theta);
    w.close();
    return w.take();
}

std::string encode(const ActionMessage& msg) {
    Writer w;
    w.open().key("type").string("action");
    w.key("action").pair(msg.action.speed_cmd, msg.action.steer_cmd).close();
    return w.take();
}

Request decode_request(std::string_view line) {
    const json j = parse_strict(line);
    const std::string type = type_of(j);
    if (type == "spec") {
        allow_only(j, {});
        return SpecRequest{};
    }
    if (type == "reset") {
        allow_only(j, {"seed", "context"});
        const json& seed = field(j, "seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
            throw ParseError("'seed' must be a non-negative integer");
        ResetRequest r;
        r.seed = seed.get<std::uint64_t>();
        if (const auto it = j.find("context"); it != j.end() && !it->is_null()) r.context = context_of(*it);
        return r;
    }
    if (type == "step") {
        allow_only(j, {"action"});
        const auto a = reals_of(field(j, "action"), "action", 2);
        return StepRequest{{a[0], a[1]}};
    }
    if (type == "close") {
        allow_only(j, {});
        return CloseRequest{};
    }
    throw ParseError("unknown request type '" + type + "'");
}

Response decode_response(std::string_view line) {
    const json j = parse_strict(line);
    const std::string type = type_of(j);
    if (type == "spec") {
        allow_only(j, {"obs_dim", "action_dim", "physics_hz", "agent_hz", "n_adversaries", "context_envelope",
                       "training_range"});
        SpecResponse s;
        s.obs_dim = int_of(field(j, "obs_dim"), "obs_dim");
        s.action_dim = int_of(field(j, "action_dim"), "action_dim");
        s.physics_hz = real_of(field(j, "physics_hz"), "physics_hz");
        s.agent_hz = real_of(field(j, "agent_hz"), "agent_hz");
        s.n_adversaries = int_of(field(j, "n_adversaries"), "n_adversaries");
        s.context_envelope = range_of(field(j, "context_envelope"), "context_envelope");
        s.training_range = range_of(field(j, "training_range"), "training_range");
        return s;
    }
    if (type == "state") {
        allow_only(j, {"obs", "reward", "done", "info"});
        StateResponse s;
        s.obs = reals_of(field(j, "obs"), "obs");
        s.reward = real_of(field(j, "reward"), "reward");
        s.done = bool_of(field(j, "done"), "done");
        s.info = info_of(field(j, "info"));
        return s;
    }
    if (type == "error") {
        allow_only(j, {"code", "detail"});
        const json& code = field(j, "code");
        const json& detail = field(j, "detail");
        if (!code.is_string() || !detail.is_string()) throw ParseError("'code' and 'detail' must be strings");
        ErrorResponse e;
        const std::string name = code.get<std::string>();
        if (name == "PARSE") e.code = ErrorCode::parse;
        else if (name == "PROTOCOL") e.code = ErrorCode::protocol;
        else if (name == "CONFIG") e.code = ErrorCode::config;
        else throw ParseError("unknown error code '" + name + "'");
        e.detail = detail.get<std::string>();
        return e;
    }
    if (type == "closed") {
        allow_only(j, {});
        return ClosedResponse{};
    }
    throw ParseError("unknown response type '" + type + "'");
}

ActRequest decode_act_request(std::string_view line) {
    const json j = parse_strict(line);
    if (type_of(j) != "act") throw ParseError("expected an 'act' message");
    allow_only(j, {"obs", "reward", "first", "context"});
    ActRequest a;
    a.obs = reals_of(field(j, "obs"), "obs");
    a.reward = real_of(field(j, "reward"), "reward");
    a.first = bool_of(field(j, "first"), "first");
    a.context = context_of(field(j, "context"));
    return a;
}

ActionMessage decode_action(std::string_view line) {
    const json j = parse_strict(line);
    if (type_of(j) != "action") throw ParseError("expected an 'action' message");
    allow_only(j, {"action"});
    const auto a = reals_of(field(j, "action"), "action", 2);
    return {{a[0], a[1]}};
}

}  // namespace ctxrace
