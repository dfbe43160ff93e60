#include "rangenav/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace rangenav {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim)
    : capacity_(capacity), obs_dim_(obs_dim) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    if (obs_dim == 0) throw std::invalid_argument("observation dimension must be positive");
}

std::size_t ReplayBuffer::slot(std::size_t i) const {
    const std::size_t oldest = size_ < capacity_ ? 0 : head_;
    return (oldest + i) % capacity_;
}

void ReplayBuffer::push(const Transition& t) {
    if (t.state.size() != obs_dim_ || t.next_state.size() != obs_dim_)
        throw std::invalid_argument("transition observation length " +
                                    std::to_string(t.state.size()) + " does not match buffer " +
                                    std::to_string(obs_dim_));
    if (!std::isfinite(t.reward)) throw std::invalid_argument("transition reward is not finite");

    if (size_ < capacity_ && head_ == states_.size() / obs_dim_) {
        states_.insert(states_.end(), t.state.begin(), t.state.end());
        next_states_.insert(next_states_.end(), t.next_state.begin(), t.next_state.end());
        actions_.insert(actions_.end(), t.action.begin(), t.action.end());
        rewards_.push_back(t.reward);
        dones_.push_back(t.done ? 1 : 0);
    } else {
        std::copy(t.state.begin(), t.state.end(), states_.begin() + head_ * obs_dim_);
        std::copy(t.next_state.begin(), t.next_state.end(), next_states_.begin() + head_ * obs_dim_);
        actions_[2 * head_] = t.action[0];
        actions_[2 * head_ + 1] = t.action[1];
        rewards_[head_] = t.reward;
        dones_[head_] = t.done ? 1 : 0;
    }
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
    ++total_pushed_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size,
                                                      std::mt19937_64& rng) const {
    if (batch_size == 0) throw std::invalid_argument("minibatch size must be positive");
    if (size_ < batch_size)
        throw std::logic_error("replay buffer holds " + std::to_string(size_) +
                               " transitions, minibatch needs " + std::to_string(batch_size));
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

Minibatch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
    const auto m = static_cast<Eigen::Index>(indices.size());
    const auto d = static_cast<Eigen::Index>(obs_dim_);
    Minibatch b{Eigen::MatrixXd(d, m), Eigen::MatrixXd(2, m), Eigen::VectorXd(m),
                Eigen::MatrixXd(d, m), Eigen::VectorXd(m)};
    for (Eigen::Index c = 0; c < m; ++c) {
        const std::size_t i = indices[static_cast<std::size_t>(c)];
        if (i >= size_) throw std::out_of_range("replay index out of range");
        const std::size_t s = slot(i);
        b.states.col(c) = Eigen::Map<const Eigen::VectorXd>(states_.data() + s * obs_dim_, d);
        b.next_states.col(c) =
            Eigen::Map<const Eigen::VectorXd>(next_states_.data() + s * obs_dim_, d);
        b.actions(0, c) = actions_[2 * s];
        b.actions(1, c) = actions_[2 * s + 1];
        b.rewards(c) = rewards_[s];
        b.dones(c) = dones_[s] ? 1.0 : 0.0;
    }
    return b;
}

Minibatch ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
    const auto idx = sample_indices(batch_size, rng);
    return gather(idx);
}

Transition ReplayBuffer::at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("replay index out of range");
    const std::size_t s = slot(i);
    Transition t;
    t.state.assign(states_.begin() + s * obs_dim_, states_.begin() + (s + 1) * obs_dim_);
    t.next_state.assign(next_states_.begin() + s * obs_dim_,
                        next_states_.begin() + (s + 1) * obs_dim_);
    t.action = {actions_[2 * s], actions_[2 * s + 1]};
    t.reward = rewards_[s];
    t.done = dones_[s] != 0;
    return t;
}

namespace {

constexpr char kMagic[8] = {'R', 'N', 'R', 'E', 'P', 'L', 'Y', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("replay file truncated");
    return v;
}

template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
    write_pod<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_vec(std::istream& in) {
    const auto n = read_pod<std::uint64_t>(in);
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw std::runtime_error("replay file truncated");
    return v;
}

}  // namespace

void ReplayBuffer::save(std::ostream& out) const {
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint64_t>(out, capacity_);
    write_pod<std::uint64_t>(out, obs_dim_);
    write_pod<std::uint64_t>(out, size_);
    write_pod<std::uint64_t>(out, head_);
    write_pod<std::uint64_t>(out, total_pushed_);
    write_vec(out, states_);
    write_vec(out, next_states_);
    write_vec(out, actions_);
    write_vec(out, rewards_);
    write_vec(out, dones_);
}

ReplayBuffer ReplayBuffer::load(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kMagic)) throw std::runtime_error("not a replay file");
    const auto capacity = read_pod<std::uint64_t>(in);
    const auto obs_dim = read_pod<std::uint64_t>(in);
    ReplayBuffer b(capacity, obs_dim);
    b.size_ = read_pod<std::uint64_t>(in);
    b.head_ = read_pod<std::uint64_t>(in);
    b.total_pushed_ = read_pod<std::uint64_t>(in);
    b.states_ = read_vec<double>(in);
    b.next_states_ = read_vec<double>(in);
    b.actions_ = read_vec<double>(in);
    b.rewards_ = read_vec<double>(in);
    b.dones_ = read_vec<unsigned char>(in);
    if (b.rewards_.size() < b.size_ || b.states_.size() != b.rewards_.size() * obs_dim)
        throw std::runtime_error("replay file is inconsistent");
    return b;
}

}  // namespace rangenav
