#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace rangenav {

struct Transition {
    std::vector<double> state;
    std::array<double, 2> action{0.0, 0.0};
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

/// Column-major minibatch: column i is sample i.
struct Minibatch {
    Eigen::MatrixXd states;       // obs_dim x M
    Eigen::MatrixXd actions;      // 2 x M
    Eigen::VectorXd rewards;      // M
    Eigen::MatrixXd next_states;  // obs_dim x M
    Eigen::VectorXd dones;        // M, 1.0 for terminal

    Eigen::Index size() const { return rewards.size(); }
};

/// Bounded FIFO experience store; once full, each push overwrites the oldest
/// transition. Storage grows lazily up to capacity.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

    void push(const Transition& t);
    /// Uniform with replacement over stored transitions.
    Minibatch sample(std::size_t batch_size, std::mt19937_64& rng) const;
    std::vector<std::size_t> sample_indices(std::size_t batch_size, std::mt19937_64& rng) const;
    Minibatch gather(std::span<const std::size_t> indices) const;
    /// i-th stored transition counting from the oldest.
    Transition at(std::size_t i) const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t obs_dim() const { return obs_dim_; }
    std::size_t total_pushed() const { return total_pushed_; }

    void save(std::ostream& out) const;
    static ReplayBuffer load(std::istream& in);

private:
    std::size_t slot(std::size_t i) const;

    std::size_t capacity_;
    std::size_t obs_dim_;
    std::size_t size_ = 0;
    std::size_t head_ = 0;  // next slot to write
    std::size_t total_pushed_ = 0;
    std::vector<double> states_;
    std::vector<double> next_states_;
    std::vector<double> actions_;
    std::vector<double> rewards_;
    std::vector<unsigned char> dones_;
};

}  // namespace rangenav
