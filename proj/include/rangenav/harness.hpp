#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rangenav/agents.hpp"
#include "rangenav/config.hpp"
#include "rangenav/env.hpp"
#include "rangenav/metrics.hpp"

namespace rangenav {

inline constexpr int kMovingAverageOrder = 50;

/// Element i is the mean of the last min(i + 1, order) values.
std::vector<double> moving_average(const std::vector<double>& series, int order = kMovingAverageOrder);

/// First index at which the series reaches `fraction` of its final value,
/// or nullopt for an empty series.
std::optional<std::size_t> convergence_index(const std::vector<double>& moving, double fraction = 0.95);

struct EpisodeLog {
    int episode = 0;
    double episode_return = 0.0;
    int steps = 0;
    bool collided = false;
    double wall_time = 0.0;
};

std::string episode_log_header();
std::string format_episode_log(const EpisodeLog& row);
std::vector<EpisodeLog> read_episode_log(const std::filesystem::path& path);

/// Independent, well-mixed seed for episode `index` of a seeded stream.
std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index);

/// One exploit-mode (noise-free) rollout with its pose trace.
struct RolloutTrace {
    std::vector<TrajectorySample> samples;  // spawn pose at t = 0, then one per step
    std::vector<double> rewards;            // aligned with samples; 0 at spawn
    double episode_return = 0.0;
    int steps = 0;
    bool collided = false;
};

RolloutTrace run_exploit_episode(Agent& agent, ExplorationEnv& env, std::uint64_t seed);

void write_trajectory_csv(const std::filesystem::path& path, const RolloutTrace& trace);
/// Reads `t,x,y,psi[,reward]`; origin defaults to the first sample.
Trajectory read_trajectory_csv(const std::filesystem::path& path,
                               std::vector<double>* rewards = nullptr);

struct ScoreOptions {
    double cell_area = 2.0;
    double annulus_width = 10.0;
    EqsFormula formula = EqsFormula::Cells;
};

struct TrajectoryScore {
    double path_length = 0.0;
    double eqs = 0.0;
    std::optional<double> ees;  // undefined for zero-length paths
    int cells = 0;
};

TrajectoryScore score_trajectory(const Trajectory& trajectory, const ScoreOptions& options = {});

struct TrainOptions {
    bool resume = false;
    /// Stop at the first episode boundary past this many seconds (0 = no limit);
    /// a checkpoint is written before returning.
    double max_wall_seconds = 0.0;
};

struct TrainResult {
    std::vector<EpisodeLog> episodes;
    std::int64_t total_steps = 0;
    std::int64_t transitions_pushed = 0;
    std::int64_t updates = 0;
    bool interrupted = false;
    bool resumed = false;
    nlohmann::json summary;
};

class TrainingAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs the schedule and writes into config.output_dir:
///   episodes.csv, eval.csv (when eval_every > 0), checkpoint.json,
///   replay.bin and summary.json.
TrainResult train(const RunConfig& config, const TrainOptions& options = {});

nlohmann::json make_summary(const std::vector<EpisodeLog>& episodes, bool include_wall_time);

/// Loads the agent stored in a training checkpoint (or a bare agent document).
struct LoadedCheckpoint {
    Agent agent;
    EnvConfig env;
    VehicleParams vehicle;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

class IncompatibleCheckpoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path map_file;
    int episodes = 10;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "eval";
    ScoreOptions score;
    /// Overrides the episode budget stored in the checkpoint when > 0.
    int episode_steps = 0;
};

struct EvalRow {
    int episode = 0;
    int steps = 0;
    bool collided = false;
    double episode_return = 0.0;
    TrajectoryScore score;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    nlohmann::json to_json() const;
};

/// Exploit-mode rollouts of a checkpoint on a map; writes report.csv,
/// report.json and one trajectory_NNN.csv per episode into out_dir.
EvalReport evaluate(const EvalOptions& options);
EvalReport evaluate_agent(Agent agent, ExplorationEnv& env, int episodes, std::uint64_t seed,
                          const ScoreOptions& score, const std::filesystem::path* out_dir);

}  // namespace rangenav
