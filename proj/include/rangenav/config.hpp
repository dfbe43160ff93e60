#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "rangenav/agents.hpp"
#include "rangenav/env.hpp"
#include "rangenav/vehicle.hpp"

namespace rangenav {

struct Schedule {
    int episodes = 300;
    int episode_steps = 200;
    int warmup_steps = 1000;
    int eval_every = 0;
    int eval_episodes = 1;
    int checkpoint_every = 50;
    /// Write measured wall time into logs. Off makes logs byte-reproducible.
    bool log_wall_time = true;
};

struct Seeds {
    std::uint64_t env_seed = 1;
    std::uint64_t agent_seed = 2;
    /// Held-out spawn seed for the periodic evaluation episodes.
    std::uint64_t eval_seed = 1'000'003;
};

struct RunConfig {
    EnvConfig env;
    VehicleParams vehicle;
    AgentConfig agent;
    Schedule schedule;
    Seeds seeds;
    std::filesystem::path output_dir = "run";
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a run config. Relative map paths resolve against `base_dir`;
/// output_dir is taken as written (relative to the working directory).
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const EnvConfig& env);
EnvConfig env_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const VehicleParams& vehicle);
VehicleParams vehicle_params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

/// FNV-1a over the canonical dump of everything that shapes training
/// (env, vehicle, agent, seeds, schedule minus bookkeeping knobs).
std::string config_hash(const RunConfig& config);

}  // namespace rangenav
