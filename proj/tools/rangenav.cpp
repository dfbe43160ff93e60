// Command line front end: train, eval, score, plot.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

#include "rangenav/config.hpp"
#include "rangenav/csv.hpp"
#include "rangenav/harness.hpp"
#include "rangenav/metrics.hpp"
#include "rangenav/plot.hpp"

namespace fs = std::filesystem;
using namespace rangenav;

namespace {

Vec2 parse_origin(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("--origin expects x,y");
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw std::invalid_argument("--origin expects two numbers as x,y");
    }
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mapless exploration simulator and off-policy RL toolkit"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "Train an agent from a run config");
    std::string config_path;
    bool resume = false;
    double max_wall = 0.0;
    train_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
    train_cmd->add_flag("--resume", resume, "Continue from the checkpoint in output_dir");
    train_cmd->add_option("--max-wall-seconds", max_wall,
                          "Stop (with a checkpoint) at the first episode boundary past this time");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint in exploit mode");
    EvalOptions eval;
    std::string eval_formula = "cells";
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint.json")->required();
    eval_cmd->add_option("--map", eval.map_file, "Map file")->required();
    eval_cmd->add_option("--episodes", eval.episodes, "Episodes to run")->required();
    eval_cmd->add_option("--seed", eval.seed, "Spawn seed")->required();
    eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();
    eval_cmd->add_option("--episode-steps", eval.episode_steps, "Override the step budget");
    eval_cmd->add_option("--cell-area", eval.score.cell_area, "Segment area in m^2");
    eval_cmd->add_option("--annulus", eval.score.annulus_width, "Annulus width in m");
    eval_cmd->add_option("--formula", eval_formula, "cells|literal");

    auto* score_cmd = app.add_subcommand("score", "Score a trajectory CSV (EQS/EES)");
    std::string traj_path, origin_text, score_formula = "cells";
    ScoreOptions score_opts;
    score_cmd->add_option("--trajectory", traj_path, "Trajectory CSV (t,x,y,psi)")->required();
    score_cmd->add_option("--origin", origin_text, "Spawn position x,y (default: first sample)");
    score_cmd->add_option("--cell-area", score_opts.cell_area, "Segment area in m^2");
    score_cmd->add_option("--annulus", score_opts.annulus_width, "Annulus width in m");
    score_cmd->add_option("--formula", score_formula, "cells|literal");

    auto* plot_cmd = app.add_subcommand("plot", "Render a training log or trajectories to SVG");
    std::string log_path, map_path, out_path;
    std::vector<std::string> plot_trajs;
    double plot_annulus = 10.0;
    plot_cmd->add_option("--log", log_path, "episodes.csv");
    plot_cmd->add_option("--trajectory", plot_trajs, "Trajectory CSV (repeatable)");
    plot_cmd->add_option("--map", map_path, "Map file for trajectory plots");
    plot_cmd->add_option("--annulus", plot_annulus, "Annulus width in m");
    plot_cmd->add_option("--out", out_path, "Output SVG")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            const RunConfig config = load_run_config(config_path);
            const TrainResult r = train(config, {resume, max_wall});
            std::cout << fmt::format(
                "trained {} episodes ({} steps, {} updates){}{} -> {}\n", r.episodes.size(),
                r.total_steps, r.updates, r.resumed ? ", resumed" : "",
                r.interrupted ? ", stopped at wall-time limit" : "", config.output_dir.string());
            if (!r.episodes.empty())
                std::cout << fmt::format("final order-50 moving-average return {:.3f}\n",
                                         r.summary["final_ma_return"].get<double>());
        } else if (*eval_cmd) {
            eval.score.formula = eqs_formula_from_string(eval_formula);
            const EvalReport rep = evaluate(eval);
            std::cout << "episode,steps,collided,eqs,ees\n";
            for (const auto& row : rep.rows)
                std::cout << fmt::format("{},{},{},{},{}\n", row.episode, row.steps,
                                         row.collided ? 1 : 0, format_double(row.score.eqs),
                                         row.score.ees ? format_double(*row.score.ees) : "nan");
        } else if (*score_cmd) {
            score_opts.formula = eqs_formula_from_string(score_formula);
            Trajectory t = read_trajectory_csv(traj_path);
            if (!origin_text.empty()) t.origin = parse_origin(origin_text);
            const TrajectoryScore s = score_trajectory(t, score_opts);
            if (!s.ees) throw UndefinedScore("EES is undefined: trajectory has zero length");
            std::cout << fmt::format("samples {}\npath_length {}\ncells {}\neqs {}\nees {}\n",
                                     t.samples.size(), format_double(s.path_length), s.cells,
                                     format_double(s.eqs), format_double(*s.ees));
        } else if (*plot_cmd) {
            if (!log_path.empty() == !plot_trajs.empty())
                throw std::invalid_argument("plot needs exactly one of --log or --trajectory");
            if (!log_path.empty()) {
                write_file(out_path, render_log_svg(read_episode_log(log_path)));
            } else {
                if (map_path.empty()) throw std::invalid_argument("trajectory plots need --map");
                std::vector<Trajectory> trajs;
                for (const auto& p : plot_trajs) trajs.push_back(read_trajectory_csv(p));
                write_file(out_path, render_trajectory_svg(load_map(map_path), trajs, plot_annulus));
            }
            std::cout << "wrote " << out_path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
