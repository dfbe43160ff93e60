#include "rangenav/harness.hpp"

#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rangenav/csv.hpp"

namespace rangenav {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> moving_average(const std::vector<double>& series, int order) {
    if (order < 1) throw std::invalid_argument("moving average order must be >= 1");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t window = std::min<std::size_t>(i + 1, static_cast<std::size_t>(order));
        double sum = 0.0;
        for (std::size_t k = i + 1 - window; k <= i; ++k) sum += series[k];
        out[i] = sum / static_cast<double>(window);
    }
    return out;
}

std::optional<std::size_t> convergence_index(const std::vector<double>& moving, double fraction) {
    if (moving.empty()) return std::nullopt;
    const double final_value = moving.back();
    const double threshold = final_value >= 0.0 ? fraction * final_value : final_value / fraction;
    for (std::size_t i = 0; i < moving.size(); ++i)
        if (moving[i] >= threshold) return i;
    return moving.size() - 1;
}

std::string episode_log_header() { return "episode,return,steps,collided,wall_time"; }

std::string format_episode_log(const EpisodeLog& r) {
    return fmt::format("{},{},{},{},{}", r.episode, format_double(r.episode_return), r.steps,
                       r.collided ? 1 : 0, format_double(r.wall_time));
}

std::vector<EpisodeLog> read_episode_log(const fs::path& path) {
    const NumericTable t = read_numeric_csv(path);
    const std::size_t ep = t.column("episode"), ret = t.column("return"), st = t.column("steps"),
                      col = t.column("collided"), wall = t.column("wall_time");
    std::vector<EpisodeLog> rows;
    for (const auto& r : t.rows)
        rows.push_back({static_cast<int>(r[ep]), r[ret], static_cast<int>(r[st]), r[col] != 0.0,
                        r[wall]});
    return rows;
}

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finalizer over a combined key
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RolloutTrace run_exploit_episode(Agent& agent, ExplorationEnv& env, std::uint64_t seed) {
    RolloutTrace trace;
    Observation obs = env.reset(seed);
    const VehicleState& s0 = env.state();
    trace.samples.push_back({0.0, s0.x, s0.y, s0.psi});
    trace.rewards.push_back(0.0);
    const double dt = env.config().dt;
    while (true) {
        const auto flat = obs.flatten();
        const NormalizedAction a = select_action(agent, flat, ActionMode::Exploit);
        StepOutcome out = env.step_normalized(a);
        ++trace.steps;
        trace.episode_return += out.reward;
        trace.samples.push_back({trace.steps * dt, out.info.pose.x, out.info.pose.y, out.info.pose.psi});
        trace.rewards.push_back(out.reward);
        obs = std::move(out.observation);
        if (out.done) {
            trace.collided = out.info.collided;
            break;
        }
    }
    return trace;
}

void write_trajectory_csv(const fs::path& path, const RolloutTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t,x,y,psi,reward\n";
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        out << format_double(s.t) << ',' << format_double(s.x) << ',' << format_double(s.y) << ','
            << format_double(s.psi) << ',' << format_double(trace.rewards[i]) << '\n';
    }
}

Trajectory read_trajectory_csv(const fs::path& path, std::vector<double>* rewards) {
    const NumericTable t = read_numeric_csv(path);
    const std::size_t ct = t.column("t"), cx = t.column("x"), cy = t.column("y"),
                      cpsi = t.column("psi");
    std::optional<std::size_t> cr;
    if (rewards) {
        rewards->clear();
        cr = t.column("reward");
    }
    Trajectory traj;
    for (const auto& r : t.rows) {
        traj.samples.push_back({r[ct], r[cx], r[cy], r[cpsi]});
        if (cr) rewards->push_back(r[*cr]);
    }
    try {
        traj.validate();
    } catch (const std::invalid_argument& e) {
        throw CsvError(path.string() + ": " + e.what());
    }
    traj.origin = {traj.samples.front().x, traj.samples.front().y};
    return traj;
}

TrajectoryScore score_trajectory(const Trajectory& trajectory, const ScoreOptions& options) {
    TrajectoryScore s;
    s.path_length = path_length(trajectory);
    const SegmentationReport rep =
        segment_trajectory(trajectory, cell_side_for_area(options.cell_area), options.annulus_width);
    s.cells = static_cast<int>(rep.visited.size());
    s.eqs = eqs(rep, options.formula);
    if (s.path_length > 0.0) s.ees = ees(s.eqs, s.path_length);
    return s;
}

namespace {

Trajectory to_trajectory(const RolloutTrace& trace) {
    Trajectory t;
    t.samples = trace.samples;
    t.origin = {trace.samples.front().x, trace.samples.front().y};
    return t;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("nan");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct TrainingState {
    int episodes_completed = 0;
    std::int64_t total_steps = 0;
    std::string harness_rng;
};

void save_training_checkpoint(const fs::path& dir, const RunConfig& config, const Agent& agent,
                              const ReplayBuffer& buffer, const TrainingState& state) {
    {
        const fs::path tmp = dir / "replay.bin.tmp";
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write replay buffer");
        buffer.save(out);
        out.close();
        fs::rename(tmp, dir / "replay.bin");
    }
    json doc = {{"format", 1},
                {"kind", "training_checkpoint"},
                {"algorithm", to_string(agent.config.algorithm)},
                {"config_hash", config_hash(config)},
                {"env", to_json(config.env)},
                {"vehicle", to_json(config.vehicle)},
                {"episodes_completed", state.episodes_completed},
                {"total_steps", state.total_steps},
                {"harness_rng", state.harness_rng},
                {"replay_file", "replay.bin"},
                {"agent", agent_to_json(agent)}};
    write_text_atomic(dir / "checkpoint.json", doc.dump() + "\n");
}

}  // namespace

json make_summary(const std::vector<EpisodeLog>& episodes, bool include_wall_time) {
    std::vector<double> returns, steps;
    int collisions = 0;
    double wall = 0.0;
    for (const auto& e : episodes) {
        returns.push_back(e.episode_return);
        steps.push_back(static_cast<double>(e.steps));
        collisions += e.collided ? 1 : 0;
        wall = std::max(wall, e.wall_time);
    }
    const auto ma_ret = moving_average(returns);
    const auto ma_steps = moving_average(steps);
    json s = {{"episodes", episodes.size()},
              {"collisions", collisions},
              {"moving_average_order", kMovingAverageOrder},
              {"ma_return", ma_ret},
              {"ma_steps", ma_steps}};
    if (!episodes.empty()) {
        const std::size_t w = std::min<std::size_t>(episodes.size(), kMovingAverageOrder);
        s["final_ma_return"] = ma_ret.back();
        s["final_ma_steps"] = ma_steps.back();
        s["first_window_mean_return"] =
            std::accumulate(returns.begin(), returns.begin() + static_cast<long>(w), 0.0) /
            static_cast<double>(w);
        s["convergence_episode"] = *convergence_index(ma_ret);
    } else {
        s["final_ma_return"] = nullptr;
        s["final_ma_steps"] = nullptr;
        s["first_window_mean_return"] = nullptr;
        s["convergence_episode"] = nullptr;
    }
    s["convergence_definition"] =
        "first episode whose order-50 moving-average return reaches 95% of its final value";
    if (include_wall_time) s["wall_seconds"] = wall;
    return s;
}

TrainResult train(const RunConfig& config, const TrainOptions& options) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);

    const WorldMap map = load_map(config.env.map_file);
    ExplorationEnv env(map, config.env, config.vehicle, config.seeds.env_seed);
    ExplorationEnv eval_env(map, config.env, config.vehicle, config.seeds.eval_seed);
    const int obs_dim = static_cast<int>(env.observation_size());

    Agent agent = Agent::create(config.agent, obs_dim, config.seeds.agent_seed);
    ReplayBuffer buffer(config.agent.buffer_capacity, static_cast<std::size_t>(obs_dim));
    std::mt19937_64 harness_rng(episode_seed(config.seeds.agent_seed, 0xC0FFEE));
    TrainingState state;

    TrainResult result;
    const fs::path ckpt_path = dir / "checkpoint.json";
    if (options.resume && fs::exists(ckpt_path)) {
        const json doc = json::parse(read_text(ckpt_path));
        if (doc.at("config_hash").get<std::string>() != config_hash(config))
            throw ConfigError("checkpoint in '" + dir.string() +
                              "' was written by a different configuration");
        agent = agent_from_json(doc.at("agent"));
        state.episodes_completed = doc.at("episodes_completed").get<int>();
        state.total_steps = doc.at("total_steps").get<std::int64_t>();
        set_rng_state(harness_rng, doc.at("harness_rng").get<std::string>());
        std::ifstream rin(dir / doc.at("replay_file").get<std::string>(), std::ios::binary);
        if (!rin) throw std::runtime_error("checkpoint references a missing replay file");
        buffer = ReplayBuffer::load(rin);
        result.resumed = true;
        // Keep only the log rows covered by the checkpoint.
        if (fs::exists(dir / "episodes.csv")) {
            auto rows = read_episode_log(dir / "episodes.csv");
            rows.resize(std::min<std::size_t>(rows.size(), static_cast<std::size_t>(state.episodes_completed)));
            result.episodes = rows;
        }
    }

    {
        std::ofstream log(dir / "episodes.csv", std::ios::trunc);
        log << episode_log_header() << '\n';
        for (const auto& r : result.episodes) log << format_episode_log(r) << '\n';
    }
    std::ofstream log(dir / "episodes.csv", std::ios::app);
    std::ofstream eval_log;
    if (config.schedule.eval_every > 0) {
        const bool fresh = !result.resumed || !fs::exists(dir / "eval.csv");
        if (fresh) {
            eval_log.open(dir / "eval.csv", std::ios::trunc);
            eval_log << "episode,eval_index,steps,return,collided,path_length,eqs,ees\n";
        } else {
            // Drop evaluation rows newer than the checkpoint.
            const std::string header = "episode,eval_index,steps,return,collided,path_length,eqs,ees\n";
            std::string kept = header;
            std::istringstream lines(read_text(dir / "eval.csv"));
            std::string line;
            std::getline(lines, line);
            while (std::getline(lines, line)) {
                if (line.empty()) continue;
                if (std::stoi(line.substr(0, line.find(','))) < state.episodes_completed)
                    kept += line + "\n";
            }
            write_text_atomic(dir / "eval.csv", kept);
            eval_log.open(dir / "eval.csv", std::ios::app);
        }
    }

    const Schedule& sched = config.schedule;
    const auto elapsed = [&] {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    };
    std::uniform_real_distribution<double> uniform_action(-1.0, 1.0);

    for (int ep = state.episodes_completed; ep < sched.episodes; ++ep) {
        Observation obs = env.reset(episode_seed(config.seeds.env_seed, static_cast<std::uint64_t>(ep)));
        std::vector<double> s = obs.flatten();
        EpisodeLog row;
        row.episode = ep;
        while (true) {
            NormalizedAction a;
            if (state.total_steps < sched.warmup_steps) {
                a = {uniform_action(harness_rng), uniform_action(harness_rng)};
            } else {
                a = select_action(agent, s, ActionMode::Explore);
            }
            StepOutcome out = env.step_normalized(a);
            std::vector<double> s_next = out.observation.flatten();
            buffer.push({s, a, out.reward, s_next, out.info.collided});
            ++state.total_steps;
            ++row.steps;
            row.episode_return += out.reward;
            if (state.total_steps >= sched.warmup_steps &&
                buffer.size() >= static_cast<std::size_t>(config.agent.batch_size)) {
                const Minibatch batch =
                    buffer.sample(static_cast<std::size_t>(config.agent.batch_size), harness_rng);
                try {
                    update(agent, batch);
                } catch (const nn::DivergenceError& e) {
                    throw TrainingAborted(fmt::format(
                        "training diverged in episode {} ({}); last good checkpoint kept in '{}'", ep,
                        e.what(), dir.string()));
                }
            }
            s = std::move(s_next);
            if (out.done) {
                row.collided = out.info.collided;
                break;
            }
        }
        row.wall_time = sched.log_wall_time ? elapsed() : 0.0;
        log << format_episode_log(row) << '\n';
        log.flush();
        result.episodes.push_back(row);
        state.episodes_completed = ep + 1;

        if (sched.eval_every > 0 && (ep + 1) % sched.eval_every == 0) {
            for (int k = 0; k < sched.eval_episodes; ++k) {
                const RolloutTrace trace = run_exploit_episode(
                    agent, eval_env, episode_seed(config.seeds.eval_seed, static_cast<std::uint64_t>(k)));
                const TrajectoryScore sc = score_trajectory(to_trajectory(trace));
                eval_log << fmt::format("{},{},{},{},{},{},{},{}\n", ep, k, trace.steps,
                                        format_double(trace.episode_return), trace.collided ? 1 : 0,
                                        format_double(sc.path_length), format_double(sc.eqs),
                                        fmt_optional(sc.ees));
            }
            eval_log.flush();
        }

        const bool stop = options.max_wall_seconds > 0.0 && elapsed() >= options.max_wall_seconds;
        const bool periodic = sched.checkpoint_every > 0 && (ep + 1) % sched.checkpoint_every == 0;
        if (periodic || stop || ep + 1 == sched.episodes) {
            state.harness_rng = rng_state(harness_rng);
            save_training_checkpoint(dir, config, agent, buffer, state);
        }
        if (stop && ep + 1 < sched.episodes) {
            result.interrupted = true;
            break;
        }
    }

    result.total_steps = state.total_steps;
    result.transitions_pushed = static_cast<std::int64_t>(buffer.total_pushed());
    result.updates = agent.updates;
    json summary = make_summary(result.episodes, sched.log_wall_time);
    summary["algorithm"] = to_string(config.agent.algorithm);
    summary["config_hash"] = config_hash(config);
    summary["total_steps"] = result.total_steps;
    summary["transitions_pushed"] = result.transitions_pushed;
    summary["updates"] = result.updates;
    summary["interrupted"] = result.interrupted;
    summary["scheduled_episodes"] = sched.episodes;
    result.summary = summary;
    write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");
    return result;
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IncompatibleCheckpoint(path.string() + ": " + e.what());
    }
    if (doc.value("format", 0) != 1)
        throw IncompatibleCheckpoint(path.string() + ": unsupported checkpoint format");
    try {
        LoadedCheckpoint c{agent_from_json(doc.at("agent")), env_config_from_json(doc.at("env")),
                           vehicle_params_from_json(doc.at("vehicle"))};
        return c;
    } catch (const json::exception& e) {
        throw IncompatibleCheckpoint(path.string() + ": " + e.what());
    }
}

json EvalReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"episode", r.episode},
                             {"steps", r.steps},
                             {"collided", r.collided},
                             {"return", r.episode_return},
                             {"path_length", r.score.path_length},
                             {"eqs", r.score.eqs},
                             {"ees", optional_json(r.score.ees)}});
    return {{"episodes", rows.size()}, {"rows", rows_json}};
}

EvalReport evaluate_agent(Agent agent, ExplorationEnv& env, int episodes, std::uint64_t seed,
                          const ScoreOptions& score, const fs::path* out_dir) {
    if (static_cast<std::size_t>(agent.obs_dim) != env.observation_size())
        throw IncompatibleCheckpoint(fmt::format(
            "checkpoint expects observations of length {}, environment produces {}", agent.obs_dim,
            env.observation_size()));
    EvalReport report;
    for (int k = 0; k < episodes; ++k) {
        const RolloutTrace trace =
            run_exploit_episode(agent, env, episode_seed(seed, static_cast<std::uint64_t>(k)));
        EvalRow row{k, trace.steps, trace.collided, trace.episode_return,
                    score_trajectory(to_trajectory(trace), score)};
        if (out_dir) write_trajectory_csv(*out_dir / fmt::format("trajectory_{:03d}.csv", k), trace);
        report.rows.push_back(row);
    }
    return report;
}

EvalReport evaluate(const EvalOptions& options) {
    if (options.episodes < 1) throw std::invalid_argument("--episodes must be at least 1");
    LoadedCheckpoint ckpt = load_checkpoint(options.checkpoint);
    EnvConfig env_cfg = ckpt.env;
    env_cfg.map_file = options.map_file.string();
    if (options.episode_steps > 0) env_cfg.episode_steps = options.episode_steps;
    ExplorationEnv env(load_map(options.map_file.string()), env_cfg, ckpt.vehicle, options.seed);

    fs::create_directories(options.out_dir);
    EvalReport report = evaluate_agent(std::move(ckpt.agent), env, options.episodes, options.seed,
                                       options.score, &options.out_dir);
    std::ofstream csv(options.out_dir / "report.csv");
    csv << "episode,steps,collided,return,path_length,eqs,ees\n";
    for (const auto& r : report.rows)
        csv << fmt::format("{},{},{},{},{},{},{}\n", r.episode, r.steps, r.collided ? 1 : 0,
                           format_double(r.episode_return), format_double(r.score.path_length),
                           format_double(r.score.eqs), fmt_optional(r.score.ees));
    write_text_atomic(options.out_dir / "report.json", report.to_json().dump(2) + "\n");
    return report;
}

}  // namespace rangenav
