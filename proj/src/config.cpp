#include "rangenav/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rangenav {

using nlohmann::json;

namespace {

// Visits each key of a section with a setter; unknown keys are an error.
void read_section(const json& doc, const std::string& section,
                  const std::map<std::string, std::function<void(const json&)>>& setters) {
    if (!doc.is_object()) throw ConfigError(section + " section must be an object");
    for (const auto& [key, value] : doc.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(section + "." + key + ": unknown key");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ConfigError(section + "." + key + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(section + "." + key + ": " + e.what());
        }
    }
}

template <typename T>
std::function<void(const json&)> set(T& field) {
    return [&field](const json& v) { field = v.get<T>(); };
}

}  // namespace

json to_json(const EnvConfig& e) {
    return {{"map_file", e.map_file},   {"beams", e.beams},
            {"max_range", e.max_range}, {"dt", e.dt},
            {"episode_steps", e.episode_steps}, {"reward", to_string(e.reward)},
            {"v_max", e.v_max},         {"omega_max", e.omega_max},
            {"clearance", e.clearance}, {"footprint_radius", e.footprint_radius}};
}

EnvConfig env_config_from_json(const json& doc) {
    EnvConfig e;
    std::string reward = to_string(e.reward);
    read_section(doc, "env",
                 {{"map_file", set(e.map_file)},
                  {"beams", set(e.beams)},
                  {"max_range", set(e.max_range)},
                  {"dt", set(e.dt)},
                  {"episode_steps", set(e.episode_steps)},
                  {"reward", set(reward)},
                  {"v_max", set(e.v_max)},
                  {"omega_max", set(e.omega_max)},
                  {"clearance", set(e.clearance)},
                  {"footprint_radius", set(e.footprint_radius)}});
    try {
        e.reward = reward_kind_from_string(reward);
        e.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return e;
}

json to_json(const VehicleParams& v) {
    return {{"l_f", v.l_f}, {"l_r", v.l_r}, {"max_speed", v.max_speed}, {"max_steer", v.max_steer}};
}

VehicleParams vehicle_params_from_json(const json& doc) {
    VehicleParams v;
    read_section(doc, "vehicle",
                 {{"l_f", set(v.l_f)},
                  {"l_r", set(v.l_r)},
                  {"max_speed", set(v.max_speed)},
                  {"max_steer", set(v.max_steer)}});
    try {
        v.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return v;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("run config must be an object");
    RunConfig c;
    for (const auto& [key, value] : doc.items()) {
        if (key == "format") {
            if (!value.is_number_integer() || value.get<int>() != 1)
                throw ConfigError("format: unsupported config format (expected 1)");
        } else if (key == "env") {
            c.env = env_config_from_json(value);
        } else if (key == "vehicle") {
            c.vehicle = vehicle_params_from_json(value);
        } else if (key == "agent") {
            try {
                c.agent = agent_config_from_json(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "schedule") {
            Schedule& s = c.schedule;
            read_section(value, "schedule",
                         {{"episodes", set(s.episodes)},
                          {"episode_steps", set(s.episode_steps)},
                          {"warmup_steps", set(s.warmup_steps)},
                          {"eval_every", set(s.eval_every)},
                          {"eval_episodes", set(s.eval_episodes)},
                          {"checkpoint_every", set(s.checkpoint_every)},
                          {"log_wall_time", set(s.log_wall_time)}});
        } else if (key == "seeds") {
            read_section(value, "seeds",
                         {{"env_seed", set(c.seeds.env_seed)},
                          {"agent_seed", set(c.seeds.agent_seed)},
                          {"eval_seed", set(c.seeds.eval_seed)}});
        } else if (key == "output_dir") {
            c.output_dir = value.get<std::string>();
        } else {
            throw ConfigError(key + ": unknown top-level key");
        }
    }
    const Schedule& s = c.schedule;
    if (s.episodes < 0) throw ConfigError("schedule.episodes must be >= 0");
    if (s.episode_steps < 1) throw ConfigError("schedule.episode_steps must be >= 1");
    if (s.warmup_steps < 0) throw ConfigError("schedule.warmup_steps must be >= 0");
    if (s.eval_every < 0 || s.checkpoint_every < 0)
        throw ConfigError("schedule.eval_every and checkpoint_every must be >= 0");
    if (s.eval_episodes < 1) throw ConfigError("schedule.eval_episodes must be >= 1");
    c.env.episode_steps = s.episode_steps;

    if (c.env.map_file.empty()) throw ConfigError("env.map_file is required");
    std::filesystem::path map_path = c.env.map_file;
    if (map_path.is_relative()) map_path = base_dir / map_path;
    if (!std::filesystem::exists(map_path))
        throw ConfigError("env.map_file: '" + map_path.string() + "' does not exist");
    c.env.map_file = map_path.lexically_normal().string();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
    return {{"format", 1},
            {"env", to_json(c.env)},
            {"vehicle", to_json(c.vehicle)},
            {"agent", to_json(c.agent)},
            {"schedule",
             {{"episodes", c.schedule.episodes},
              {"episode_steps", c.schedule.episode_steps},
              {"warmup_steps", c.schedule.warmup_steps},
              {"eval_every", c.schedule.eval_every},
              {"eval_episodes", c.schedule.eval_episodes},
              {"checkpoint_every", c.schedule.checkpoint_every},
              {"log_wall_time", c.schedule.log_wall_time}}},
            {"seeds",
             {{"env_seed", c.seeds.env_seed},
              {"agent_seed", c.seeds.agent_seed},
              {"eval_seed", c.seeds.eval_seed}}},
            {"output_dir", c.output_dir.string()}};
}

std::string config_hash(const RunConfig& c) {
    json env = to_json(c.env);
    env.erase("map_file");
    const json shaping = {{"env", env},
                          {"vehicle", to_json(c.vehicle)},
                          {"agent", to_json(c.agent)},
                          {"warmup_steps", c.schedule.warmup_steps},
                          {"episode_steps", c.schedule.episode_steps},
                          {"seeds", {c.seeds.env_seed, c.seeds.agent_seed}}};
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : shaping.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace rangenav
