#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctxrace/env.hpp"

namespace ctxrace {

// Line protocol spoken between an environment server and an agent. Every
// message is one JSON object on one line with a "type" field. Numbers are
// written with 17 significant digits; reals always carry a '.' or exponent.

enum class ErrorCode { parse, protocol, config };

std::string_view to_string(ErrorCode code);

struct SpecRequest {
    bool operator==(const SpecRequest&) const = default;
};

struct ResetRequest {
    std::uint64_t seed = 0;
    std::optional<Context> context;  // sampled from the training range when absent

    bool operator==(const ResetRequest&) const = default;
};

struct StepRequest {
    Action action;

    bool operator==(const StepRequest&) const = default;
};

struct CloseRequest {
    bool operator==(const CloseRequest&) const = default;
};

using Request = std::variant<SpecRequest, ResetRequest, StepRequest, CloseRequest>;

struct SpecResponse {
    int obs_dim = 108;
    int action_dim = 2;
    double physics_hz = 100.0;
    double agent_hz = 10.0;
    int n_adversaries = 1;
    std::array<double, 2> context_envelope{-kContextEnvelope, kContextEnvelope};
    std::array<double, 2> training_range{-kTrainingRange, kTrainingRange};

    bool operator==(const SpecResponse&) const = default;
};

struct StateInfoMessage {
    int step = 0;
    double progress = 0.0;
    double max_progress = 0.0;
    int overtake_delta = 0;
    int overtake_score = 0;
    Termination cause = Termination::none;
    Context context;
    std::vector<std::array<double, 4>> poses;  // x, y, yaw, v; agent first

    bool operator==(const StateInfoMessage&) const = default;
};

struct StateResponse {
    std::vector<double> obs;
    double reward = 0.0;
    bool done = false;
    StateInfoMessage info;

    bool operator==(const StateResponse&) const = default;
};

struct ErrorResponse {
    ErrorCode code = ErrorCode::parse;
    std::string detail;

    bool operator==(const ErrorResponse&) const = default;
};

struct ClosedResponse {
    bool operator==(const ClosedResponse&) const = default;
};

using Response = std::variant<SpecResponse, StateResponse, ErrorResponse, ClosedResponse>;

/// Sent by the evaluation harness to a remote policy, answered by ActionMessage.
struct ActRequest {
    std::vector<double> obs;
    double reward = 0.0;
    bool first = false;  // first observation of an episode
    Context context;

    bool operator==(const ActRequest&) const = default;
};

struct ActionMessage {
    Action action;

    bool operator==(const ActionMessage&) const = default;
};

SpecResponse make_spec(const EnvConfig& cfg);
StateResponse make_state(const LidarScan& obs, double reward, bool done, const StepInfo& info, const Context& ctx);

/// Encoders return the line without its terminating newline.
std::string encode(const Request& msg);
std::string encode(const Response& msg);
std::string encode(const ActRequest& msg);
std::string encode(const ActionMessage& msg);

/// Decoders throw ParseError for malformed text, unknown or duplicate keys,
/// and wrong shapes or types.
Request decode_request(std::string_view line);
Response decode_response(std::string_view line);
ActRequest decode_act_request(std::string_view line);
ActionMessage decode_action(std::string_view line);

/// JSON string literal with every byte outside printable ASCII escaped as
/// \u00XX, so arbitrary input bytes always produce a valid line.
std::string json_quote(std::string_view raw);
/// `%.17g`, with ".0" appended when the result would read as an integer.
std::string format_real(double v);

}  // namespace ctxrace
