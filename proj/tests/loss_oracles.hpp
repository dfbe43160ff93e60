#pragma once

// Longhand re-evaluation of the critic, actor and temperature losses, built
// on the loop-based network oracle. Shared by the unit tests and the
// acceptance run.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rangenav/agents.hpp"

namespace lossref {

using rangenav::Agent;
using rangenav::AgentConfig;
using rangenav::Algorithm;
using rangenav::Minibatch;
using rangenav::nn::Matrix;
using rangenav::nn::Mlp;
using rangenav::nn::Vector;

constexpr int kObs = 6;

inline Minibatch random_batch(std::uint64_t seed, int m = 16, int obs = kObs) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0), u11(-1.0, 1.0), ur(-2.0, 6.0);
    Minibatch b{Matrix(obs, m), Matrix(2, m), Vector(m), Matrix(obs, m), Vector(m)};
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < obs; ++i) {
            b.states(i, j) = u01(rng);
            b.next_states(i, j) = u01(rng);
        }
        b.actions(0, j) = u11(rng);
        b.actions(1, j) = u11(rng);
        b.rewards(j) = ur(rng);
        b.dones(j) = u01(rng) < 0.25 ? 1.0 : 0.0;
    }
    return b;
}

inline AgentConfig small_config(Algorithm alg) {
    AgentConfig c;
    c.algorithm = alg;
    c.hidden = {12, 10};
    c.batch_size = 16;
    c.buffer_capacity = 1000;
    c.final_layer_scale = 1.0;  // non-trivial actions make the checks sharper
    c.actor_lr = 1e-3;
    c.critic_lr = 1e-3;
    c.tau = 0.05;
    return c;
}

inline std::vector<double> column(const Matrix& m, Eigen::Index j) {
    return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows());
}

inline double q_of(const Mlp& critic, const Matrix& s, const Matrix& a, Eigen::Index j) {
    auto in = column(s, j);
    in.push_back(a(0, j));
    in.push_back(a(1, j));
    return oracle::naive_forward(critic, in)[0];
}

inline Matrix act(const Mlp& actor, const Matrix& s) {
    Matrix out(actor.output_size(), s.cols());
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const auto o = oracle::naive_forward(actor, column(s, j));
        for (std::size_t i = 0; i < o.size(); ++i) out(static_cast<Eigen::Index>(i), j) = o[i];
    }
    return out;
}

// Gaussian log density of tanh(u), u = mean + exp(ls) * xi, written from scratch.
inline double squashed_log_density(double mean, double ls, double xi) {
    const double sigma = std::exp(ls);
    const double u = mean + sigma * xi;
    const double a = std::tanh(u);
    const double gauss = -0.5 * std::pow((u - mean) / sigma, 2) - std::log(sigma) -
                         0.5 * std::log(2 * std::numbers::pi);
    const double jac = std::log(1 - a * a);
    return gauss - (std::isfinite(jac) ? jac : std::log(4.0) - 2 * std::abs(u));
}

inline double mse(const Vector& y, const std::vector<double>& q) {
    double s = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += std::pow(y(i) - q[static_cast<std::size_t>(i)], 2);
    return s / static_cast<double>(y.size());
}

struct Losses {
    std::vector<double> critic;
    double actor_objective = std::numeric_limits<double>::quiet_NaN();
    double actor_loss = std::numeric_limits<double>::quiet_NaN();
    double alpha_loss = std::numeric_limits<double>::quiet_NaN();
    double entropy = std::numeric_limits<double>::quiet_NaN();
};

/// `before` is the agent going into the update, `after` the updated one (its
/// critics score the actor step).
inline Losses ddpg_losses(const Agent& before, const Agent& after, const Minibatch& b) {
    std::vector<double> q;
    Vector y(b.size());
    const Matrix next_a = act(before.actor_target, b.next_states);
    const Matrix pi = act(before.actor, b.states);
    double objective = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        y(j) = b.rewards(j) +
               before.config.gamma * (1 - b.dones(j)) * q_of(before.critic_targets[0], b.next_states, next_a, j);
        q.push_back(q_of(before.critics[0], b.states, b.actions, j));
        objective += q_of(after.critics[0], b.states, pi, j);
    }
    Losses out;
    out.critic = {mse(y, q)};
    out.actor_objective = objective / static_cast<double>(b.size());
    return out;
}

inline Losses td3_losses(const Agent& before, const Agent& after, const Minibatch& b,
                         const Matrix& target_noise) {
    const Matrix next_a = (act(before.actor_target, b.next_states) + target_noise).cwiseMax(-1.0).cwiseMin(1.0);
    const Matrix pi = act(before.actor, b.states);
    Vector y(b.size());
    std::vector<double> q0, q1;
    double objective = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        const double t = std::min(q_of(before.critic_targets[0], b.next_states, next_a, j),
                                  q_of(before.critic_targets[1], b.next_states, next_a, j));
        y(j) = b.rewards(j) + before.config.gamma * (1 - b.dones(j)) * t;
        q0.push_back(q_of(before.critics[0], b.states, b.actions, j));
        q1.push_back(q_of(before.critics[1], b.states, b.actions, j));
        objective += std::min(q_of(after.critics[0], b.states, pi, j), q_of(after.critics[1], b.states, pi, j));
    }
    Losses out;
    out.critic = {mse(y, q0), mse(y, q1)};
    out.actor_objective = objective / static_cast<double>(b.size());
    return out;
}

inline Losses sac_losses(const Agent& before, const Agent& after, const Minibatch& b,
                         const Matrix& target_noise, const Matrix& actor_noise) {
    const double alpha = before.alpha;
    const Matrix head_next = act(before.actor, b.next_states);
    const Matrix head_now = act(before.actor, b.states);
    Vector y(b.size());
    std::vector<double> q0, q1;
    double j_loss = 0, logp_sum = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        Matrix an(2, 1), ac(2, 1);
        double lpn = 0, lpc = 0;
        for (int k = 0; k < 2; ++k) {
            an(k, 0) = std::tanh(head_next(k, j) + std::exp(head_next(2 + k, j)) * target_noise(k, j));
            lpn += squashed_log_density(head_next(k, j), head_next(2 + k, j), target_noise(k, j));
            ac(k, 0) = std::tanh(head_now(k, j) + std::exp(head_now(2 + k, j)) * actor_noise(k, j));
            lpc += squashed_log_density(head_now(k, j), head_now(2 + k, j), actor_noise(k, j));
        }
        const Matrix sn = b.next_states.col(j), sc = b.states.col(j);
        const double tq =
            std::min(q_of(before.critic_targets[0], sn, an, 0), q_of(before.critic_targets[1], sn, an, 0));
        y(j) = b.rewards(j) + before.config.gamma * (1 - b.dones(j)) * (tq - alpha * lpn);
        q0.push_back(q_of(before.critics[0], b.states, b.actions, j));
        q1.push_back(q_of(before.critics[1], b.states, b.actions, j));
        const double qa = std::min(q_of(after.critics[0], sc, ac, 0), q_of(after.critics[1], sc, ac, 0));
        j_loss += -qa + alpha * lpc;
        logp_sum += lpc;
    }
    const double m = static_cast<double>(b.size());
    Losses out;
    out.critic = {mse(y, q0), mse(y, q1)};
    out.actor_loss = j_loss / m;
    out.alpha_loss = -alpha * (logp_sum / m) - alpha * before.config.target_entropy;
    out.entropy = -logp_sum / m;
    return out;
}

}  // namespace lossref
