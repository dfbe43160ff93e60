#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rangenav/env.hpp"
#include "rangenav/nn.hpp"
#include "rangenav/replay.hpp"

namespace rangenav {

enum class Algorithm { Ddpg, Td3, Sac };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm a);

inline constexpr int kActionDim = 2;
inline constexpr double kMinAlpha = 1e-6;

struct AgentConfig {
    Algorithm algorithm = Algorithm::Sac;
    double gamma = 0.995;
    double actor_lr = 5e-5;
    double critic_lr = 5e-4;
    double tau = 0.001;
    int batch_size = 128;
    std::size_t buffer_capacity = 1'000'000;
    std::vector<int> hidden = {256, 256};
    double final_layer_scale = 0.01;
    // DDPG / TD3 behaviour noise on normalized actions.
    double exploration_noise = 0.1;
    // TD3 target policy smoothing and delayed actor updates.
    double target_noise = 0.2;
    double target_noise_clip = 0.5;
    int policy_delay = 2;
    // SAC entropy temperature; alpha_lr < 0 means "use critic_lr".
    double target_entropy = -2.0;
    double initial_alpha = 0.2;
    double alpha_lr = -1.0;
    bool learn_alpha = true;

    void validate() const;
    double effective_alpha_lr() const { return alpha_lr < 0.0 ? critic_lr : alpha_lr; }

    friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

nlohmann::json to_json(const AgentConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
AgentConfig agent_config_from_json(const nlohmann::json& doc);

/// Everything a learner owns: networks, targets, optimizer moments and the
/// entropy temperature. DDPG keeps one critic, TD3 and SAC two.
struct Agent {
    AgentConfig config;
    int obs_dim = 0;
    nn::Mlp actor;
    nn::Mlp actor_target;
    std::vector<nn::Mlp> critics;
    std::vector<nn::Mlp> critic_targets;
    nn::AdamState actor_opt;
    std::vector<nn::AdamState> critic_opts;
    double alpha = 0.0;
    nn::ScalarAdam alpha_opt;
    std::int64_t updates = 0;
    std::mt19937_64 rng;

    static Agent create(const AgentConfig& config, int obs_dim, std::uint64_t seed);

    friend bool operator==(const Agent&, const Agent&) = default;
};

struct UpdateDiagnostics {
    std::vector<double> critic_losses;
    /// DDPG/TD3: mean Q(s, pi(s)) (min over twins for TD3) before the actor step.
    double actor_objective = 0.0;
    /// SAC: J_pi before the actor step.
    double actor_loss = 0.0;
    double alpha = 0.0;
    double alpha_loss = 0.0;
    double entropy_estimate = 0.0;
    bool actor_updated = false;
    /// Noise actually drawn, kept so the losses can be re-evaluated independently.
    nn::Matrix target_noise;
    nn::Matrix actor_noise;
};

enum class ActionMode { Explore, Exploit };

/// Stacks [states; actions] into critic inputs.
nn::Matrix critic_input(const nn::Matrix& states, const nn::Matrix& actions);

double clip_target_noise(double noise, double clip);

/// y = R + gamma * (1 - done) * Q_t(s', pi_t(s')).
nn::Vector ddpg_target(const nn::Vector& rewards, const nn::Matrix& next_states,
                       const nn::Vector& dones, const nn::Mlp& actor_target,
                       const nn::Mlp& critic_target, double gamma);

/// y = R + gamma * (1 - done) * min_k Q_tk(s', clip(pi_t(s') + eps, -1, 1)) where
/// `noise` already holds the clipped eps.
nn::Vector td3_target(const nn::Vector& rewards, const nn::Matrix& next_states,
                      const nn::Vector& dones, const nn::Mlp& actor_target,
                      std::span<const nn::Mlp> critic_targets, double gamma,
                      const nn::Matrix& noise);

nn::Matrix draw_target_noise(Eigen::Index rows, Eigen::Index cols, double sigma, double clip,
                             std::mt19937_64& rng);
nn::Matrix draw_standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Reparameterized tanh-Gaussian sample from a (mean, log-std) head output.
struct SquashedSample {
    nn::Matrix pre_tanh;   // u = mean + std * noise
    nn::Matrix actions;    // tanh(u)
    nn::Vector log_prob;   // log density of actions, change of variables included
};

SquashedSample squash_sample(const nn::Matrix& head_output, const nn::Matrix& noise);

/// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u);

/// y = R + gamma * (1 - done) * (min_k Q_tk(s', a') - alpha * ln pi(a'|s')) with a'
/// drawn from the current actor using `noise`.
nn::Vector sac_target(const nn::Vector& rewards, const nn::Matrix& next_states,
                      const nn::Vector& dones, const nn::Mlp& actor,
                      std::span<const nn::Mlp> critic_targets, double gamma, double alpha,
                      const nn::Matrix& noise);

/// L_alpha = mean(-alpha * ln pi - alpha * H).
double alpha_loss(double alpha, const nn::Vector& log_probs, double target_entropy);
double alpha_gradient(const nn::Vector& log_probs, double target_entropy);

struct SampledAction {
    NormalizedAction action;
    double log_prob = 0.0;
};

SampledAction sac_sample_action(const nn::Mlp& actor, std::span<const double> obs,
                                std::mt19937_64& rng);

UpdateDiagnostics ddpg_update(Agent& agent, const Minibatch& batch);
UpdateDiagnostics td3_update(Agent& agent, const Minibatch& batch, std::int64_t step_index);
UpdateDiagnostics sac_update(Agent& agent, const Minibatch& batch);
/// Dispatches on the algorithm; TD3 uses the agent's update counter as step index.
UpdateDiagnostics update(Agent& agent, const Minibatch& batch);

NormalizedAction select_action(Agent& agent, std::span<const double> obs, ActionMode mode);

nlohmann::json agent_to_json(const Agent& agent);
Agent agent_from_json(const nlohmann::json& doc);

std::string rng_state(const std::mt19937_64& rng);
void set_rng_state(std::mt19937_64& rng, const std::string& state);

}  // namespace rangenav
