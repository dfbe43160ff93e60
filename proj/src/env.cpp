#include "rangenav/env.hpp"

#include <algorithm>
#include <cmath>

namespace rangenav {

RewardKind reward_kind_from_string(const std::string& s) {
    if (s == "explore") return RewardKind::Explore;
    if (s == "sar") return RewardKind::Sar;
    throw std::invalid_argument("env.reward must be \"explore\" or \"sar\", got \"" + s + "\"");
}

std::string to_string(RewardKind kind) { return kind == RewardKind::Explore ? "explore" : "sar"; }

double reward_explore(double min_range, double v, double omega) {
    return 0.0075 * min_range * min_range + 1.5 * v * v - 0.6 * omega * omega;
}

double reward_sar(double min_range, double v, double omega) {
    double r = reward_explore(min_range, v, omega);
    if (min_range > 2.0 && min_range < 2.5) {
        r += 2.0;
    } else if (min_range < 1.0) {
        r += -50.0;
    }
    return r;
}

double reward(RewardKind kind, double min_range, double v, double omega) {
    return kind == RewardKind::Explore ? reward_explore(min_range, v, omega)
                                       : reward_sar(min_range, v, omega);
}

void EnvConfig::validate() const {
    if (beams < 1) throw std::invalid_argument("env.beams must be at least 1");
    if (!(max_range > 0.0)) throw std::invalid_argument("env.max_range must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("env.dt must be positive");
    if (episode_steps < 1) throw std::invalid_argument("env.episode_steps must be at least 1");
    if (!(v_max > 0.0)) throw std::invalid_argument("env.v_max must be positive");
    if (!(omega_max > 0.0)) throw std::invalid_argument("env.omega_max must be positive");
    if (!(clearance > 0.0)) throw std::invalid_argument("env.clearance must be positive");
    if (!(footprint_radius > 0.0))
        throw std::invalid_argument("env.footprint_radius must be positive");
}

std::vector<double> Observation::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    out.insert(out.end(), ranges_now.begin(), ranges_now.end());
    out.insert(out.end(), ranges_prev.begin(), ranges_prev.end());
    out.push_back(action_prev[0]);
    out.push_back(action_prev[1]);
    return out;
}

ExplorationEnv::ExplorationEnv(WorldMap map, EnvConfig config, VehicleParams vehicle,
                               std::uint64_t seed)
    : map_(std::move(map)), config_(std::move(config)), vehicle_(vehicle), rng_(seed) {
    config_.validate();
    vehicle_.footprint_radius = config_.footprint_radius;
    vehicle_.validate();
    beam_angles_ = uniform_beams(config_.beams);
}

Observation ExplorationEnv::reset(std::optional<std::uint64_t> seed) {
    if (seed) rng_.seed(*seed);
    return begin_episode(sample_spawn(map_, rng_, config_.clearance));
}

Observation ExplorationEnv::reset_to(const Pose2& pose) { return begin_episode(pose); }

Observation ExplorationEnv::begin_episode(const Pose2& pose) {
    state_ = VehicleState{pose.x, pose.y, wrap_angle(pose.psi), 0.0};
    steps_ = 0;
    done_ = false;
    last_obs_.ranges_now = normalized_scan();
    last_obs_.ranges_prev = last_obs_.ranges_now;
    last_obs_.action_prev = {0.0, 0.0};
    return last_obs_;
}

std::vector<double> ExplorationEnv::normalized_scan() const {
    RangeScan scan = raycast(map_, state_.pose(), beam_angles_, config_.max_range);
    for (double& r : scan.ranges) r /= config_.max_range;
    return std::move(scan.ranges);
}

ActionCommand ExplorationEnv::denormalize(const NormalizedAction& a) const {
    const double v01 = 0.5 * (std::clamp(a[0], -1.0, 1.0) + 1.0);
    return {v01 * config_.v_max, std::clamp(a[1], -1.0, 1.0) * config_.omega_max};
}

NormalizedAction ExplorationEnv::normalize(const ActionCommand& c) const {
    return {2.0 * c.v / config_.v_max - 1.0, c.omega / config_.omega_max};
}

StepOutcome ExplorationEnv::step(const ActionCommand& action) {
    ActionCommand c{std::clamp(action.v, 0.0, config_.v_max),
                    std::clamp(action.omega, -config_.omega_max, config_.omega_max)};
    return advance(c, normalize(c));
}

StepOutcome ExplorationEnv::step_normalized(const NormalizedAction& action) {
    NormalizedAction clipped{std::clamp(action[0], -1.0, 1.0), std::clamp(action[1], -1.0, 1.0)};
    return advance(denormalize(clipped), clipped);
}

StepOutcome ExplorationEnv::advance(const ActionCommand& command, const NormalizedAction& recorded) {
    if (done_) throw UsageError("step() called on a finished episode; call reset() first");

    const double steer = omega_to_steer(command.v, command.omega, vehicle_);
    state_ = step_kinematics(state_, command.v, steer, config_.dt, vehicle_);
    ++steps_;

    Observation obs;
    obs.ranges_prev = std::move(last_obs_.ranges_now);
    const RangeScan scan = raycast(map_, state_.pose(), beam_angles_, config_.max_range);
    obs.ranges_now.resize(scan.ranges.size());
    std::transform(scan.ranges.begin(), scan.ranges.end(), obs.ranges_now.begin(),
                   [&](double r) { return r / config_.max_range; });
    obs.action_prev = recorded;

    StepOutcome out;
    out.info.min_range = *std::min_element(scan.ranges.begin(), scan.ranges.end());
    out.info.collided = collision_check(map_, state_.pose(), config_.footprint_radius);
    out.info.pose = state_.pose();
    out.reward = reward(config_.reward, out.info.min_range, command.v, command.omega);
    out.done = out.info.collided || steps_ >= config_.episode_steps;
    done_ = out.done;

    last_obs_ = obs;
    out.observation = std::move(obs);
    return out;
}

}  // namespace rangenav
