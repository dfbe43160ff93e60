#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rangenav/vehicle.hpp"
#include "rangenav/worldmap.hpp"

namespace rangenav {

enum class RewardKind { Explore, Sar };

RewardKind reward_kind_from_string(const std::string& s);
std::string to_string(RewardKind kind);

/// Exploration reward: 0.0075 r^2 + 1.5 v^2 - 0.6 w^2, evaluated left to right
/// in exactly that order. r is the minimum range in meters.
double reward_explore(double min_range, double v, double omega);

/// Exploration reward plus a +2.0 bonus for 2.0 < r < 2.5 and a -50 penalty
/// for r < 1.0 (strict inequalities; the bonus is added after the base sum).
double reward_sar(double min_range, double v, double omega);

double reward(RewardKind kind, double min_range, double v, double omega);

struct EnvConfig {
    std::string map_file;
    int beams = 24;
    double max_range = 10.0;
    double dt = 0.1;
    int episode_steps = 1000;
    RewardKind reward = RewardKind::Explore;
    double v_max = 2.0;
    double omega_max = 1.5;
    double clearance = 1.0;
    double footprint_radius = 0.3;

    void validate() const;
};

/// Normalized action as emitted by the agents, each component in [-1, 1].
using NormalizedAction = std::array<double, 2>;

struct ActionCommand {
    double v = 0.0;
    double omega = 0.0;
};

/// Observation layout: [ranges_now (B), ranges_prev (B), v_prev, omega_prev],
/// ranges divided by max_range, previous action in normalized units.
struct Observation {
    std::vector<double> ranges_now;
    std::vector<double> ranges_prev;
    NormalizedAction action_prev{0.0, 0.0};

    std::vector<double> flatten() const;
    std::size_t size() const { return ranges_now.size() + ranges_prev.size() + 2; }
};

struct StepInfo {
    double min_range = 0.0;
    bool collided = false;
    Pose2 pose;
};

struct StepOutcome {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The exploration MDP over one map. Owns its RNG; not thread-safe.
class ExplorationEnv {
public:
    ExplorationEnv(WorldMap map, EnvConfig config, VehicleParams vehicle, std::uint64_t seed);

    /// Spawns at a random collision-free pose. A seed reseeds the env RNG first.
    Observation reset(std::optional<std::uint64_t> seed = std::nullopt);
    /// Starts an episode at a given pose (tests, replays).
    Observation reset_to(const Pose2& pose);

    StepOutcome step(const ActionCommand& action);
    /// Denormalizes and steps; the normalized action is what the next
    /// observation records as action_prev.
    StepOutcome step_normalized(const NormalizedAction& action);

    ActionCommand denormalize(const NormalizedAction& action) const;
    NormalizedAction normalize(const ActionCommand& action) const;

    std::size_t observation_size() const { return 2 * beam_angles_.size() + 2; }
    const WorldMap& map() const { return map_; }
    const EnvConfig& config() const { return config_; }
    const VehicleParams& vehicle_params() const { return vehicle_; }
    const VehicleState& state() const { return state_; }
    int step_count() const { return steps_; }
    bool done() const { return done_; }
    std::span<const double> beam_angles() const { return beam_angles_; }

private:
    Observation begin_episode(const Pose2& pose);
    std::vector<double> normalized_scan() const;
    StepOutcome advance(const ActionCommand& command, const NormalizedAction& recorded);

    WorldMap map_;
    EnvConfig config_;
    VehicleParams vehicle_;
    std::vector<double> beam_angles_;
    std::mt19937_64 rng_;
    VehicleState state_;
    Observation last_obs_;
    int steps_ = 0;
    bool done_ = true;
};

}  // namespace rangenav
