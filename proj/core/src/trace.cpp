#include "ctxrace/trace.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "ctxrace/error.hpp"

namespace ctxrace {

namespace {

using nlohmann::json;

json vehicles_json(const std::vector<VehicleState>& vehicles) {
    json out = json::array();
    for (const VehicleState& v : vehicles) out.push_back({v.x, v.y, v.yaw, v.v, v.steer});
    return out;
}

json context_json(const Context& c) { return json::array({c.c_v, c.c_theta}); }

}  // namespace

void TraceWriter::reset(std::uint64_t seed, const ResetResult& r) {
    json rec;
    rec["type"] = "reset";
    rec["seed"] = seed;
    rec["context"] = context_json(r.context);
    rec["vehicles"] = vehicles_json(r.info.vehicles);
    *out_ << rec.dump() << '\n';
}

void TraceWriter::step(const Action& action, const StepResult& r) {
    json rec;
    rec["type"] = "step";
    rec["step"] = r.info.step;
    rec["action"] = {action.speed_cmd, action.steer_cmd};
    rec["reward"] = r.reward;
    rec["done"] = r.done;
    rec["cause"] = std::string(to_string(r.info.cause));
    rec["progress"] = r.info.progress;
    rec["overtake_delta"] = r.info.overtake_delta;
    rec["d_c"] = r.info.agent_pose.d_c;
    rec["phi"] = r.info.agent_pose.phi;
    rec["vehicles"] = vehicles_json(r.info.vehicles);
    if (!r.info.adversary_contacts.empty()) rec["adversary_contacts"] = r.info.adversary_contacts;
    if (!r.info.adversary_wall.empty()) rec["adversary_wall"] = r.info.adversary_wall;
    *out_ << rec.dump() << '\n';
}

std::vector<EpisodeSummary> summarize_trace(std::istream& in) {
    std::vector<EpisodeSummary> episodes;
    std::string line;
    std::size_t line_no = 0;
    bool finished = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json rec = json::parse(line);
            const std::string type = rec.at("type").get<std::string>();
            if (type == "reset") {
                EpisodeSummary e;
                e.seed = rec.at("seed").get<std::uint64_t>();
                const auto& c = rec.at("context");
                if (!c.is_array() || c.size() != 2) throw ParseError("context must have two entries", line_no);
                e.context = {c[0].get<double>(), c[1].get<double>()};
                episodes.push_back(e);
                finished = false;
            } else if (type == "step") {
                if (episodes.empty()) throw ParseError("step record before any reset", line_no);
                if (finished) throw ParseError("step record after the episode ended", line_no);
                EpisodeSummary& e = episodes.back();
                ++e.steps;
                e.max_progress = std::max(e.max_progress, rec.at("progress").get<double>());
                e.overtake_score += rec.at("overtake_delta").get<int>();
                e.total_reward += rec.at("reward").get<double>();
                e.cause = termination_from_string(rec.at("cause").get<std::string>());
                finished = e.cause != Termination::none;
            } else {
                throw ParseError("unknown record type '" + type + "'", line_no);
            }
        } catch (const json::exception& ex) {
            throw ParseError(ex.what(), line_no);
        } catch (const ParseError& ex) {
            if (ex.line() != 0) throw;
            throw ParseError(ex.what(), line_no);
        }
    }
    return episodes;
}

}  // namespace ctxrace
