#include "ctxrace/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "ctxrace/error.hpp"

namespace ctxrace {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double to_double(std::string_view v, std::size_t line) {
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size())
        throw ParseError("expected a number, got '" + std::string(v) + "'", line);
    return out;
}

int to_int(std::string_view v, std::size_t line) {
    int out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size())
        throw ParseError("expected an integer, got '" + std::string(v) + "'", line);
    return out;
}

bool to_bool(std::string_view v, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("expected a boolean, got '" + std::string(v) + "'", line);
}

using Setter = std::function<void(ScenarioConfig&, std::string_view, std::size_t, const std::filesystem::path&)>;
using Getter = std::function<std::string(const ScenarioConfig&)>;

struct Key {
    Setter set;
    Getter get;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename Member>
Key number(Member member) {
    return {[member](ScenarioConfig& c, std::string_view v, std::size_t line, const std::filesystem::path&) {
                member(c) = to_double(v, line);
            },
            [member](const ScenarioConfig& c) { return fmt(member(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Member>
Key integer(Member member) {
    return {[member](ScenarioConfig& c, std::string_view v, std::size_t line, const std::filesystem::path&) {
                member(c) = to_int(v, line);
            },
            [member](const ScenarioConfig& c) { return std::to_string(member(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Member>
Key boolean(Member member) {
    return {[member](ScenarioConfig& c, std::string_view v, std::size_t line, const std::filesystem::path&) {
                member(c) = to_bool(v, line);
            },
            [member](const ScenarioConfig& c) {
                return std::string(member(const_cast<ScenarioConfig&>(c)) ? "true" : "false");
            }};
}

std::filesystem::path resolve(std::string_view v, const std::filesystem::path& base) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base.empty() ? base / p : p;
}

const std::map<std::string, Key, std::less<>>& keys() {
    static const std::map<std::string, Key, std::less<>> table = [] {
        std::map<std::string, Key, std::less<>> t;
        t["track"] = {[](ScenarioConfig& c, std::string_view v, std::size_t, const std::filesystem::path& base) {
                          c.track = resolve(v, base);
                      },
                      [](const ScenarioConfig& c) { return c.track.string(); }};
        t["raceline_file"] = {
            [](ScenarioConfig& c, std::string_view v, std::size_t, const std::filesystem::path& base) {
                c.raceline_file = resolve(v, base);
            },
            [](const ScenarioConfig& c) { return c.raceline_file ? c.raceline_file->string() : std::string(); }};
        t["raceline_cache"] = {
            [](ScenarioConfig& c, std::string_view v, std::size_t, const std::filesystem::path& base) {
                c.raceline_cache = resolve(v, base);
            },
            [](const ScenarioConfig& c) { return c.raceline_cache ? c.raceline_cache->string() : std::string(); }};

        t["adversaries"] = integer([](ScenarioConfig& c) -> int& { return c.env.n_adversaries; });
        t["start_spacing"] = number([](ScenarioConfig& c) -> double& { return c.env.start_spacing; });
        t["start_s"] = number([](ScenarioConfig& c) -> double& { return c.env.start_s; });
        t["max_steps"] = integer([](ScenarioConfig& c) -> int& { return c.env.max_steps; });
        t["substeps"] = integer([](ScenarioConfig& c) -> int& { return c.env.substeps; });
        t["dt"] = number([](ScenarioConfig& c) -> double& { return c.env.dt; });
        t["overtake_hysteresis"] = number([](ScenarioConfig& c) -> double& { return c.env.overtake_hysteresis; });
        t["context_low"] = number([](ScenarioConfig& c) -> double& { return c.env.context_low; });
        t["context_high"] = number([](ScenarioConfig& c) -> double& { return c.env.context_high; });

        t["vehicle.wheelbase"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.wheelbase; });
        t["vehicle.lf"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.lf; });
        t["vehicle.lr"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.lr; });
        t["vehicle.mass"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.mass; });
        t["vehicle.steer_max"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.steer_max; });
        t["vehicle.v_max"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.v_max; });
        t["vehicle.accel_max"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.accel_max; });
        t["vehicle.steer_rate_max"] =
            number([](ScenarioConfig& c) -> double& { return c.env.vehicle.steer_rate_max; });
        t["vehicle.body_length"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.body_length; });
        t["vehicle.body_width"] = number([](ScenarioConfig& c) -> double& { return c.env.vehicle.body_width; });
        t["vehicle.model_slip"] = boolean([](ScenarioConfig& c) -> bool& { return c.env.vehicle.model_slip; });

        t["lidar.beams"] = integer([](ScenarioConfig& c) -> int& { return c.env.lidar.beams; });
        t["lidar.fov"] = number([](ScenarioConfig& c) -> double& { return c.env.lidar.fov; });
        t["lidar.max_range"] = number([](ScenarioConfig& c) -> double& { return c.env.lidar.max_range; });
        t["lidar.noise_std"] = number([](ScenarioConfig& c) -> double& { return c.env.lidar.noise_std; });

        t["adversary.base_lookahead"] =
            number([](ScenarioConfig& c) -> double& { return c.env.adversary.base_lookahead; });
        t["adversary.lambda_v"] = number([](ScenarioConfig& c) -> double& { return c.env.adversary.lambda_v; });
        t["adversary.lambda_theta"] =
            number([](ScenarioConfig& c) -> double& { return c.env.adversary.lambda_theta; });
        t["adversary.speed_attenuation"] =
            number([](ScenarioConfig& c) -> double& { return c.env.adversary.speed_attenuation; });

        t["raceline.a_lat_max"] = number([](ScenarioConfig& c) -> double& { return c.env.raceline.a_lat_max; });
        t["raceline.a_long_max"] = number([](ScenarioConfig& c) -> double& { return c.env.raceline.a_long_max; });
        t["raceline.v_max"] = number([](ScenarioConfig& c) -> double& { return c.env.raceline.v_max; });
        t["raceline.margin"] = number([](ScenarioConfig& c) -> double& { return c.env.raceline.margin; });
        t["raceline.spacing"] = number([](ScenarioConfig& c) -> double& { return c.env.raceline.spacing; });
        t["raceline.max_iterations"] =
            integer([](ScenarioConfig& c) -> int& { return c.env.raceline.max_iterations; });
        t["raceline.tolerance"] = number([](ScenarioConfig& c) -> double& { return c.env.raceline.tolerance; });

        t["reward.normalize_dc"] = boolean([](ScenarioConfig& c) -> bool& { return c.env.reward.normalize_dc; });
        t["reward.crash"] = number([](ScenarioConfig& c) -> double& { return c.env.reward.crash; });
        t["reward.lap"] = number([](ScenarioConfig& c) -> double& { return c.env.reward.lap; });
        t["reward.overtake"] = number([](ScenarioConfig& c) -> double& { return c.env.reward.overtake; });
        t["reward.overtaken"] = number([](ScenarioConfig& c) -> double& { return c.env.reward.overtaken; });
        return t;
    }();
    return table;
}

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    ScenarioConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string_view key = trim(body.substr(0, eq));
        const std::string_view value = trim(body.substr(eq + 1));
        const auto it = keys().find(key);
        if (it == keys().end()) throw ParseError("unknown key '" + std::string(key) + "'", line_no);
        if (!seen.emplace(key).second) throw ParseError("duplicate key '" + std::string(key) + "'", line_no);
        it->second.set(cfg, value, line_no, base_dir);
    }
    cfg.env.raceline.v_max = seen.contains("raceline.v_max") ? cfg.env.raceline.v_max : cfg.env.vehicle.v_max;
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    return parse_config(in, path.parent_path());
}

void write_config(std::ostream& out, const ScenarioConfig& cfg) {
    for (const auto& [name, key] : keys()) {
        const std::string value = key.get(cfg);
        if (value.empty()) continue;
        out << name << " = " << value << '\n';
    }
}

Scenario load_scenario(const ScenarioConfig& cfg) {
    cfg.env.validate();
    if (cfg.track.empty()) throw ConfigError("config does not name a track");
    auto track = std::make_shared<const Track>(load_track(cfg.track));
    std::shared_ptr<const Raceline> raceline;
    if (cfg.raceline_file) raceline = std::make_shared<const Raceline>(load_raceline(*cfg.raceline_file));
    else if (cfg.raceline_cache)
        raceline = std::make_shared<const Raceline>(load_or_compute_raceline(*track, cfg.env.raceline, *cfg.raceline_cache));
    else raceline = std::make_shared<const Raceline>(compute_raceline(*track, cfg.env.raceline));
    return {cfg.env, std::move(track), std::move(raceline)};
}

Scenario make_scenario(const EnvConfig& env, Track track) {
    env.validate();
    auto t = std::make_shared<const Track>(std::move(track));
    auto r = std::make_shared<const Raceline>(compute_raceline(*t, env.raceline));
    return {env, std::move(t), std::move(r)};
}

}  // namespace ctxrace
