#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "ctxrace/env.hpp"

namespace ctxrace {

/// Everything needed to build environments: the parameter blocks plus where
/// the track and (optionally) a precomputed raceline live.
struct ScenarioConfig {
    EnvConfig env;
    std::filesystem::path track;
    std::optional<std::filesystem::path> raceline_file;
    std::optional<std::filesystem::path> raceline_cache;
};

/// `key = value` lines with dotted keys for the parameter blocks
/// (`vehicle.v_max = 8`), `#` comments, blank lines ignored. Relative paths
/// resolve against `base_dir`. Unknown or repeated keys are errors.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);
/// Writes every key with its current value; parse_config reads it back.
void write_config(std::ostream& out, const ScenarioConfig& cfg);

/// Immutable shared geometry for any number of environments.
struct Scenario {
    EnvConfig env;
    std::shared_ptr<const Track> track;
    std::shared_ptr<const Raceline> raceline;

    RaceEnv make_env() const { return RaceEnv(env, track, raceline); }
};

/// Loads the track and the raceline (file, cache, or fresh optimisation).
Scenario load_scenario(const ScenarioConfig& cfg);
/// Same, for an in-memory track.
Scenario make_scenario(const EnvConfig& env, Track track);

}  // namespace ctxrace
