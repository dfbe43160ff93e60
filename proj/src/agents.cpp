#include "rangenav/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rangenav {

using nlohmann::json;
using nn::Matrix;
using nn::Mlp;
using nn::Vector;

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "ddpg") return Algorithm::Ddpg;
    if (s == "td3") return Algorithm::Td3;
    if (s == "sac") return Algorithm::Sac;
    throw std::invalid_argument("algorithm must be one of ddpg, td3, sac (got \"" + s + "\")");
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Ddpg: return "ddpg";
        case Algorithm::Td3: return "td3";
        case Algorithm::Sac: return "sac";
    }
    return "sac";
}

void AgentConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("agent.gamma must lie in (0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("agent.tau must lie in (0, 1]");
    if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0))
        throw std::invalid_argument("agent learn rates must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("agent.batch_size must be positive");
    if (buffer_capacity < static_cast<std::size_t>(batch_size))
        throw std::invalid_argument("agent.batch_size must not exceed agent.buffer_capacity");
    if (hidden.empty()) throw std::invalid_argument("agent.hidden needs at least one layer");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("agent.hidden widths must be positive");
    if (!(exploration_noise >= 0.0) || !(target_noise >= 0.0) || !(target_noise_clip >= 0.0))
        throw std::invalid_argument("agent noise scales must be non-negative");
    if (policy_delay < 1) throw std::invalid_argument("agent.policy_delay must be at least 1");
    if (!(initial_alpha >= 0.0)) throw std::invalid_argument("agent.initial_alpha must be >= 0");
}

json to_json(const AgentConfig& c) {
    return {{"algorithm", to_string(c.algorithm)},
            {"gamma", c.gamma},
            {"actor_lr", c.actor_lr},
            {"critic_lr", c.critic_lr},
            {"tau", c.tau},
            {"batch_size", c.batch_size},
            {"buffer_capacity", c.buffer_capacity},
            {"hidden", c.hidden},
            {"final_layer_scale", c.final_layer_scale},
            {"exploration_noise", c.exploration_noise},
            {"target_noise", c.target_noise},
            {"target_noise_clip", c.target_noise_clip},
            {"policy_delay", c.policy_delay},
            {"target_entropy", c.target_entropy},
            {"initial_alpha", c.initial_alpha},
            {"alpha_lr", c.alpha_lr},
            {"learn_alpha", c.learn_alpha}};
}

AgentConfig agent_config_from_json(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("agent section must be an object");
    AgentConfig c;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "algorithm") c.algorithm = algorithm_from_string(value.get<std::string>());
            else if (key == "gamma") c.gamma = value.get<double>();
            else if (key == "actor_lr") c.actor_lr = value.get<double>();
            else if (key == "critic_lr") c.critic_lr = value.get<double>();
            else if (key == "tau") c.tau = value.get<double>();
            else if (key == "batch_size") c.batch_size = value.get<int>();
            else if (key == "buffer_capacity") c.buffer_capacity = value.get<std::size_t>();
            else if (key == "hidden") c.hidden = value.get<std::vector<int>>();
            else if (key == "final_layer_scale") c.final_layer_scale = value.get<double>();
            else if (key == "exploration_noise") c.exploration_noise = value.get<double>();
            else if (key == "target_noise") c.target_noise = value.get<double>();
            else if (key == "target_noise_clip") c.target_noise_clip = value.get<double>();
            else if (key == "policy_delay") c.policy_delay = value.get<int>();
            else if (key == "target_entropy") c.target_entropy = value.get<double>();
            else if (key == "initial_alpha") c.initial_alpha = value.get<double>();
            else if (key == "alpha_lr") c.alpha_lr = value.get<double>();
            else if (key == "learn_alpha") c.learn_alpha = value.get<bool>();
            else throw std::invalid_argument("unknown key");
        } catch (const json::exception& e) {
            throw std::invalid_argument("agent." + key + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("agent." + key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

Agent Agent::create(const AgentConfig& config, int obs_dim, std::uint64_t seed) {
    config.validate();
    if (obs_dim < 1) throw std::invalid_argument("observation dimension must be positive");
    Agent a;
    a.config = config;
    a.obs_dim = obs_dim;
    a.rng.seed(seed);

    std::vector<int> actor_dims{obs_dim};
    actor_dims.insert(actor_dims.end(), config.hidden.begin(), config.hidden.end());
    const bool sac = config.algorithm == Algorithm::Sac;
    actor_dims.push_back(sac ? 2 * kActionDim : kActionDim);
    a.actor = Mlp::create(actor_dims, sac ? nn::OutputHead::Gaussian : nn::OutputHead::Tanh, a.rng,
                          config.final_layer_scale);
    a.actor_target = a.actor;
    a.actor_opt = nn::AdamState::for_network(a.actor);

    std::vector<int> critic_dims{obs_dim + kActionDim};
    critic_dims.insert(critic_dims.end(), config.hidden.begin(), config.hidden.end());
    critic_dims.push_back(1);
    const int n_critics = config.algorithm == Algorithm::Ddpg ? 1 : 2;
    for (int k = 0; k < n_critics; ++k) {
        a.critics.push_back(Mlp::create(critic_dims, nn::OutputHead::Linear, a.rng));
        a.critic_targets.push_back(a.critics.back());
        a.critic_opts.push_back(nn::AdamState::for_network(a.critics.back()));
    }
    a.alpha = sac ? config.initial_alpha : 0.0;
    return a;
}

Matrix critic_input(const Matrix& states, const Matrix& actions) {
    Matrix x(states.rows() + actions.rows(), states.cols());
    x.topRows(states.rows()) = states;
    x.bottomRows(actions.rows()) = actions;
    return x;
}

double clip_target_noise(double noise, double clip) { return std::clamp(noise, -clip, clip); }

Matrix draw_standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
    return m;
}

Matrix draw_target_noise(Eigen::Index rows, Eigen::Index cols, double sigma, double clip,
                         std::mt19937_64& rng) {
    Matrix m = draw_standard_normal(rows, cols, rng);
    return m.unaryExpr([&](double z) { return clip_target_noise(sigma * z, clip); });
}

namespace {

Vector min_q(std::span<const Mlp> critics, const Matrix& x) {
    Vector q = nn::mlp_forward(critics[0], x).row(0).transpose();
    for (std::size_t k = 1; k < critics.size(); ++k)
        q = q.cwiseMin(Vector(nn::mlp_forward(critics[k], x).row(0).transpose()));
    return q;
}

Vector bootstrap(const Vector& rewards, const Vector& dones, double gamma, const Vector& next_value) {
    Vector y(rewards.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = rewards(i) + gamma * (1.0 - dones(i)) * next_value(i);
    return y;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw nn::DivergenceError(std::string("non-finite ") + what);
}

// One Adam step on the mean squared Bellman error; returns the pre-step loss.
double critic_step(Mlp& critic, nn::AdamState& opt, const Matrix& inputs, const Vector& y,
                   double lr) {
    nn::MlpCache cache;
    const Matrix q = nn::mlp_forward(critic, inputs, &cache);
    const double m = static_cast<double>(y.size());
    const Vector diff = y - q.row(0).transpose();
    const double loss = diff.squaredNorm() / m;
    require_finite(loss, "critic loss");
    const Matrix grad = (-2.0 / m) * diff.transpose();
    nn::adam_step(critic, nn::mlp_backward(critic, cache, grad), opt, lr);
    return loss;
}

// Gradient of -mean(min_k Q_k(s, a)) with respect to a, plus the objective value.
std::pair<Matrix, double> twin_min_action_grad(std::span<const Mlp> critics, const Matrix& states,
                                               const Matrix& actions) {
    const Matrix x = critic_input(states, actions);
    const Eigen::Index m = x.cols();
    std::vector<nn::MlpCache> caches(critics.size());
    std::vector<Vector> qs;
    for (std::size_t k = 0; k < critics.size(); ++k)
        qs.push_back(nn::mlp_forward(critics[k], x, &caches[k]).row(0).transpose());

    std::vector<int> argmin(static_cast<std::size_t>(m), 0);
    double objective = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        int best = 0;
        for (std::size_t k = 1; k < critics.size(); ++k)
            if (qs[k](i) < qs[static_cast<std::size_t>(best)](i)) best = static_cast<int>(k);
        argmin[static_cast<std::size_t>(i)] = best;
        objective += qs[static_cast<std::size_t>(best)](i);
    }
    objective /= static_cast<double>(m);

    Matrix action_grad;
    bool first = true;
    for (std::size_t k = 0; k < critics.size(); ++k) {
        Matrix g = Matrix::Zero(1, m);
        bool used = false;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (argmin[static_cast<std::size_t>(i)] == static_cast<int>(k)) {
                g(0, i) = -1.0 / static_cast<double>(m);
                used = true;
            }
        }
        if (!used) continue;
        Matrix da = nn::mlp_backward(critics[k], caches[k], g).input.bottomRows(kActionDim);
        if (first) {
            action_grad = std::move(da);
            first = false;
        } else {
            action_grad += da;
        }
    }
    return {action_grad, objective};
}

void deterministic_actor_step(Agent& agent, const Matrix& states, UpdateDiagnostics& diag) {
    nn::MlpCache actor_cache;
    const Matrix actions = nn::mlp_forward(agent.actor, states, &actor_cache);
    auto [action_grad, objective] = twin_min_action_grad(agent.critics, states, actions);
    require_finite(objective, "actor objective");
    diag.actor_objective = objective;
    nn::adam_step(agent.actor, nn::mlp_backward(agent.actor, actor_cache, action_grad),
                  agent.actor_opt, agent.config.actor_lr);
    diag.actor_updated = true;
}

void soft_update_all(Agent& agent) {
    nn::soft_update(agent.actor_target, agent.actor, agent.config.tau);
    for (std::size_t k = 0; k < agent.critics.size(); ++k)
        nn::soft_update(agent.critic_targets[k], agent.critics[k], agent.config.tau);
}

}  // namespace

Vector ddpg_target(const Vector& rewards, const Matrix& next_states, const Vector& dones,
                   const Mlp& actor_target, const Mlp& critic_target, double gamma) {
    const Matrix next_actions = nn::mlp_forward(actor_target, next_states);
    const Vector q = nn::mlp_forward(critic_target, critic_input(next_states, next_actions))
                         .row(0)
                         .transpose();
    return bootstrap(rewards, dones, gamma, q);
}

Vector td3_target(const Vector& rewards, const Matrix& next_states, const Vector& dones,
                  const Mlp& actor_target, std::span<const Mlp> critic_targets, double gamma,
                  const Matrix& noise) {
    Matrix next_actions = nn::mlp_forward(actor_target, next_states) + noise;
    next_actions = next_actions.cwiseMax(-1.0).cwiseMin(1.0);
    return bootstrap(rewards, dones, gamma, min_q(critic_targets, critic_input(next_states, next_actions)));
}

double log_one_minus_tanh_sq(double u) {
    // 1 - tanh(u)^2 = 4 e^{-2|u|} / (1 + e^{-2|u|})^2
    const double a = std::abs(u);
    return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

SquashedSample squash_sample(const Matrix& head_output, const Matrix& noise) {
    const Eigen::Index dim = head_output.rows() / 2;
    if (noise.rows() != dim || noise.cols() != head_output.cols())
        throw nn::ShapeError("squash_sample: noise shape does not match the policy head");
    const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
    SquashedSample s;
    s.pre_tanh.resize(dim, head_output.cols());
    s.actions.resize(dim, head_output.cols());
    s.log_prob = Vector::Zero(head_output.cols());
    for (Eigen::Index c = 0; c < head_output.cols(); ++c) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double mean = head_output(j, c);
            const double log_std = head_output(dim + j, c);
            const double xi = noise(j, c);
            const double u = mean + std::exp(log_std) * xi;
            s.pre_tanh(j, c) = u;
            s.actions(j, c) = std::tanh(u);
            s.log_prob(c) += -0.5 * xi * xi - log_std - half_log_two_pi - log_one_minus_tanh_sq(u);
        }
    }
    return s;
}

Vector sac_target(const Vector& rewards, const Matrix& next_states, const Vector& dones,
                  const Mlp& actor, std::span<const Mlp> critic_targets, double gamma, double alpha,
                  const Matrix& noise) {
    const SquashedSample next = squash_sample(nn::mlp_forward(actor, next_states), noise);
    const Vector q = min_q(critic_targets, critic_input(next_states, next.actions));
    const Vector soft_value = q - alpha * next.log_prob;
    return bootstrap(rewards, dones, gamma, soft_value);
}

double alpha_loss(double alpha, const Vector& log_probs, double target_entropy) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < log_probs.size(); ++i)
        sum += -alpha * log_probs(i) - alpha * target_entropy;
    return sum / static_cast<double>(log_probs.size());
}

double alpha_gradient(const Vector& log_probs, double target_entropy) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < log_probs.size(); ++i) sum += -log_probs(i) - target_entropy;
    return sum / static_cast<double>(log_probs.size());
}

SampledAction sac_sample_action(const Mlp& actor, std::span<const double> obs,
                                std::mt19937_64& rng) {
    const Vector s = Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    const Matrix head = nn::mlp_forward(actor, Matrix(s));
    const SquashedSample sample = squash_sample(head, draw_standard_normal(kActionDim, 1, rng));
    return {{sample.actions(0, 0), sample.actions(1, 0)}, sample.log_prob(0)};
}

UpdateDiagnostics ddpg_update(Agent& agent, const Minibatch& batch) {
    UpdateDiagnostics diag;
    const AgentConfig& cfg = agent.config;
    const Vector y = ddpg_target(batch.rewards, batch.next_states, batch.dones, agent.actor_target,
                                 agent.critic_targets[0], cfg.gamma);
    diag.critic_losses.push_back(critic_step(agent.critics[0], agent.critic_opts[0],
                                             critic_input(batch.states, batch.actions), y,
                                             cfg.critic_lr));
    deterministic_actor_step(agent, batch.states, diag);
    soft_update_all(agent);
    return diag;
}

UpdateDiagnostics td3_update(Agent& agent, const Minibatch& batch, std::int64_t step_index) {
    UpdateDiagnostics diag;
    const AgentConfig& cfg = agent.config;
    diag.target_noise = draw_target_noise(kActionDim, batch.size(), cfg.target_noise,
                                          cfg.target_noise_clip, agent.rng);
    const Vector y = td3_target(batch.rewards, batch.next_states, batch.dones, agent.actor_target,
                                agent.critic_targets, cfg.gamma, diag.target_noise);
    const Matrix x = critic_input(batch.states, batch.actions);
    for (std::size_t k = 0; k < agent.critics.size(); ++k)
        diag.critic_losses.push_back(
            critic_step(agent.critics[k], agent.critic_opts[k], x, y, cfg.critic_lr));
    if (step_index % cfg.policy_delay == 0) {
        deterministic_actor_step(agent, batch.states, diag);
        soft_update_all(agent);
    }
    return diag;
}

UpdateDiagnostics sac_update(Agent& agent, const Minibatch& batch) {
    UpdateDiagnostics diag;
    const AgentConfig& cfg = agent.config;
    const Eigen::Index m = batch.size();
    const double md = static_cast<double>(m);

    diag.target_noise = draw_standard_normal(kActionDim, m, agent.rng);
    const Vector y = sac_target(batch.rewards, batch.next_states, batch.dones, agent.actor,
                                agent.critic_targets, cfg.gamma, agent.alpha, diag.target_noise);
    const Matrix x = critic_input(batch.states, batch.actions);
    for (std::size_t k = 0; k < agent.critics.size(); ++k)
        diag.critic_losses.push_back(
            critic_step(agent.critics[k], agent.critic_opts[k], x, y, cfg.critic_lr));

    // Actor: J = mean(-min_k Q_k(s, a~) + alpha * ln pi(a~|s)), a~ reparameterized.
    diag.actor_noise = draw_standard_normal(kActionDim, m, agent.rng);
    nn::MlpCache actor_cache;
    const Matrix head = nn::mlp_forward(agent.actor, batch.states, &actor_cache);
    const SquashedSample sample = squash_sample(head, diag.actor_noise);
    auto [q_grad, min_q_mean] = twin_min_action_grad(agent.critics, batch.states, sample.actions);
    // q_grad = d(-mean minQ)/da

    const double alpha = agent.alpha;
    diag.actor_loss = -min_q_mean + alpha * sample.log_prob.mean();
    require_finite(diag.actor_loss, "actor loss");
    diag.entropy_estimate = -sample.log_prob.mean();
    diag.alpha_loss = alpha_loss(alpha, sample.log_prob, cfg.target_entropy);

    Matrix head_grad(head.rows(), m);
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index j = 0; j < kActionDim; ++j) {
            const double a = sample.actions(j, c);
            const double std_xi = std::exp(head(kActionDim + j, c)) * diag.actor_noise(j, c);
            const double dq_du = q_grad(j, c) * (1.0 - a * a);
            // d ln pi / du through the tanh correction is 2 tanh(u).
            const double dlogp_du = 2.0 * a;
            head_grad(j, c) = dq_du + alpha * dlogp_du / md;
            head_grad(kActionDim + j, c) = dq_du * std_xi + alpha * (-1.0 + dlogp_du * std_xi) / md;
        }
    }
    nn::adam_step(agent.actor, nn::mlp_backward(agent.actor, actor_cache, head_grad),
                  agent.actor_opt, cfg.actor_lr);
    diag.actor_updated = true;

    if (cfg.learn_alpha) {
        agent.alpha_opt.apply(agent.alpha, alpha_gradient(sample.log_prob, cfg.target_entropy),
                              cfg.effective_alpha_lr());
        agent.alpha = std::max(agent.alpha, kMinAlpha);
    }
    diag.alpha = agent.alpha;

    for (std::size_t k = 0; k < agent.critics.size(); ++k)
        nn::soft_update(agent.critic_targets[k], agent.critics[k], cfg.tau);
    return diag;
}

UpdateDiagnostics update(Agent& agent, const Minibatch& batch) {
    UpdateDiagnostics diag;
    switch (agent.config.algorithm) {
        case Algorithm::Ddpg: diag = ddpg_update(agent, batch); break;
        case Algorithm::Td3: diag = td3_update(agent, batch, agent.updates); break;
        case Algorithm::Sac: diag = sac_update(agent, batch); break;
    }
    ++agent.updates;
    return diag;
}

NormalizedAction select_action(Agent& agent, std::span<const double> obs, ActionMode mode) {
    if (static_cast<int>(obs.size()) != agent.obs_dim)
        throw nn::ShapeError("observation has " + std::to_string(obs.size()) +
                             " entries, agent expects " + std::to_string(agent.obs_dim));
    const Vector s = Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    if (agent.config.algorithm == Algorithm::Sac) {
        if (mode == ActionMode::Explore) return sac_sample_action(agent.actor, obs, agent.rng).action;
        const Vector head = nn::mlp_forward(agent.actor, s);
        return {std::tanh(head(0)), std::tanh(head(1))};
    }
    const Vector a = nn::mlp_forward(agent.actor, s);
    NormalizedAction out{a(0), a(1)};
    if (mode == ActionMode::Explore) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : out)
            v = std::clamp(v + agent.config.exploration_noise * normal(agent.rng), -1.0, 1.0);
    }
    return out;
}

std::string rng_state(const std::mt19937_64& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

void set_rng_state(std::mt19937_64& rng, const std::string& state) {
    std::istringstream in(state);
    in >> rng;
    if (!in) throw std::invalid_argument("malformed RNG state");
}

json agent_to_json(const Agent& a) {
    json nets;
    nets["actor"] = nn::to_json(a.actor);
    nets["actor_target"] = nn::to_json(a.actor_target);
    json opts;
    opts["actor"] = nn::to_json(a.actor_opt);
    for (std::size_t k = 0; k < a.critics.size(); ++k) {
        nets["critic_" + std::to_string(k)] = nn::to_json(a.critics[k]);
        nets["critic_target_" + std::to_string(k)] = nn::to_json(a.critic_targets[k]);
        opts["critic_" + std::to_string(k)] = nn::to_json(a.critic_opts[k]);
    }
    return {{"algorithm", to_string(a.config.algorithm)},
            {"config", to_json(a.config)},
            {"obs_dim", a.obs_dim},
            {"networks", nets},
            {"optimizers", opts},
            {"alpha", a.alpha},
            {"alpha_optimizer", nn::to_json(a.alpha_opt)},
            {"updates", a.updates},
            {"rng", rng_state(a.rng)}};
}

Agent agent_from_json(const json& doc) {
    Agent a;
    a.config = agent_config_from_json(doc.at("config"));
    if (to_string(a.config.algorithm) != doc.at("algorithm").get<std::string>())
        throw std::invalid_argument("checkpoint algorithm does not match its config");
    a.obs_dim = doc.at("obs_dim").get<int>();
    const json& nets = doc.at("networks");
    const json& opts = doc.at("optimizers");
    a.actor = nn::mlp_from_json(nets.at("actor"));
    a.actor_target = nn::mlp_from_json(nets.at("actor_target"));
    a.actor_opt = nn::adam_from_json(opts.at("actor"), a.actor);
    const int n_critics = a.config.algorithm == Algorithm::Ddpg ? 1 : 2;
    for (int k = 0; k < n_critics; ++k) {
        const std::string key = std::to_string(k);
        a.critics.push_back(nn::mlp_from_json(nets.at("critic_" + key)));
        a.critic_targets.push_back(nn::mlp_from_json(nets.at("critic_target_" + key)));
        a.critic_opts.push_back(nn::adam_from_json(opts.at("critic_" + key), a.critics.back()));
    }
    if (a.actor.input_size() != a.obs_dim || a.critics[0].input_size() != a.obs_dim + kActionDim)
        throw nn::ShapeError("checkpoint network widths disagree with obs_dim");
    a.alpha = doc.at("alpha").get<double>();
    a.alpha_opt = nn::scalar_adam_from_json(doc.at("alpha_optimizer"));
    a.updates = doc.at("updates").get<std::int64_t>();
    set_rng_state(a.rng, doc.at("rng").get<std::string>());
    return a;
}

}  // namespace rangenav
