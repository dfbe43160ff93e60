#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <sstream>

#include "rangenav/replay.hpp"

using namespace rangenav;

namespace {

Transition tagged(double id, std::size_t dim = 3) {
    Transition t;
    t.state.assign(dim, id);
    t.next_state.assign(dim, id + 0.5);
    t.action = {id / 1000.0, -id / 1000.0};
    t.reward = id;
    t.done = static_cast<long>(id) % 3 == 0;
    return t;
}

}  // namespace

TEST(Replay, PushGrowsThenEvictsOldest) {
    ReplayBuffer buf(4, 3);
    buf.push(tagged(0));
    EXPECT_EQ(buf.size(), 1u);
    for (int i = 1; i <= 4; ++i) buf.push(tagged(i));
    EXPECT_EQ(buf.size(), 4u);
    EXPECT_EQ(buf.total_pushed(), 5u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(buf.at(i).reward, static_cast<double>(i + 1));
}

TEST(Replay, PushValidatesTransitions) {
    ReplayBuffer buf(4, 3);
    Transition t = tagged(1);
    t.state.pop_back();
    EXPECT_THROW(buf.push(t), std::invalid_argument);
    t = tagged(1);
    t.reward = std::nan("");
    EXPECT_THROW(buf.push(t), std::invalid_argument);
}

TEST(Replay, SampleSingleAndUnderfull) {
    ReplayBuffer buf(10, 3);
    std::mt19937_64 rng(1);
    EXPECT_THROW(buf.sample(1, rng), std::logic_error);
    buf.push(tagged(7));
    const Minibatch b = buf.sample(1, rng);
    EXPECT_EQ(b.rewards(0), 7.0);
    EXPECT_EQ(b.states(0, 0), 7.0);
    EXPECT_EQ(b.next_states(2, 0), 7.5);
    EXPECT_EQ(b.actions(0, 0), 0.007);
    EXPECT_EQ(b.dones(0), 0.0);
    EXPECT_THROW(buf.sample(2, rng), std::logic_error);
}

TEST(Replay, SameSeedSameIndices) {
    ReplayBuffer buf(100, 3);
    for (int i = 0; i < 50; ++i) buf.push(tagged(i));
    std::mt19937_64 a(5), b(5);
    EXPECT_EQ(buf.sample_indices(32, a), buf.sample_indices(32, b));
}

TEST(Replay, UniformFrequencies) {
    ReplayBuffer buf(10, 3);
    for (int i = 0; i < 10; ++i) buf.push(tagged(i));
    std::mt19937_64 rng(2);
    std::vector<int> counts(10, 0);
    const int draws = 100000;
    for (int k = 0; k < draws / 10; ++k)
        for (std::size_t idx : buf.sample_indices(10, rng)) ++counts[idx];
    const double p = 0.1, mean = draws * p, sd = std::sqrt(draws * p * (1 - p));
    double chi2 = 0.0;
    for (int c : counts) {
        EXPECT_LT(std::abs(c - mean), 3 * sd);
        chi2 += (c - mean) * (c - mean) / mean;
    }
    EXPECT_LT(chi2, 27.88);  // 99.9% quantile, 9 degrees of freedom
}

TEST(Replay, NeverYieldsEvictedTransitions) {
    ReplayBuffer buf(8, 2);
    std::deque<double> live;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 500; ++i) {
        buf.push(tagged(i, 2));
        live.push_back(i);
        if (live.size() > 8) live.pop_front();
        ASSERT_EQ(buf.size(), live.size());
        for (std::size_t k = 0; k < live.size(); ++k) ASSERT_EQ(buf.at(k).reward, live[k]);
        const Minibatch b = buf.sample(std::min<std::size_t>(buf.size(), 6), rng);
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            ASSERT_GE(b.rewards(j), live.front());
            ASSERT_LE(b.rewards(j), live.back());
            ASSERT_EQ(b.states(0, j), b.rewards(j));
        }
    }
}

TEST(Replay, BinaryRoundTrip) {
    ReplayBuffer buf(6, 3);
    for (int i = 0; i < 9; ++i) buf.push(tagged(i));
    std::stringstream ss;
    buf.save(ss);
    const ReplayBuffer back = ReplayBuffer::load(ss);
    EXPECT_EQ(back.size(), buf.size());
    EXPECT_EQ(back.capacity(), buf.capacity());
    EXPECT_EQ(back.total_pushed(), buf.total_pushed());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        EXPECT_EQ(back.at(i).state, buf.at(i).state);
        EXPECT_EQ(back.at(i).done, buf.at(i).done);
    }
    std::mt19937_64 a(4), b(4);
    EXPECT_EQ(back.sample(5, a).rewards, buf.sample(5, b).rewards);
    std::stringstream bad("garbage");
    EXPECT_ANY_THROW(ReplayBuffer::load(bad));
}
