#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rangenav/env.hpp"

using namespace rangenav;

namespace {

const std::string kMaps = RANGENAV_SOURCE_DIR "/maps/";

ExplorationEnv make_env(const std::string& map, int steps = 200, RewardKind kind = RewardKind::Explore,
                        std::uint64_t seed = 1) {
    EnvConfig cfg;
    cfg.map_file = kMaps + map + ".json";
    cfg.episode_steps = steps;
    cfg.reward = kind;
    return ExplorationEnv(load_map(cfg.map_file), cfg, VehicleParams{}, seed);
}

}  // namespace

TEST(Reward, ExploreHandValues) {
    EXPECT_EQ(reward_explore(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(reward_explore(10, 1, 0), 2.25);
    EXPECT_DOUBLE_EQ(reward_explore(0, 0, 1), -0.6);
}

TEST(Reward, SarHandValues) {
    EXPECT_NEAR(reward_sar(2.2, 0, 0), 2.0363, 1e-12);
    EXPECT_NEAR(reward_sar(0.5, 0, 0), -49.998125, 1e-12);
    EXPECT_NEAR(reward_sar(1.5, 0, 0), 0.016875, 1e-15);
}

TEST(Reward, SarBranchBoundariesAreStrict) {
    for (double r : {1.0, 2.0, 2.5}) EXPECT_EQ(reward_sar(r, 0.3, 0.2), reward_explore(r, 0.3, 0.2)) << r;
    EXPECT_EQ(reward_sar(std::nextafter(1.0, 0.0), 0, 0) - reward_explore(std::nextafter(1.0, 0.0), 0, 0), -50.0);
    EXPECT_EQ(reward_sar(std::nextafter(2.0, 3.0), 0, 0), reward_explore(std::nextafter(2.0, 3.0), 0, 0) + 2.0);
    EXPECT_EQ(reward_sar(std::nextafter(2.5, 0.0), 0, 0), reward_explore(std::nextafter(2.5, 0.0), 0, 0) + 2.0);
}

TEST(Reward, SarMinusExploreIsOneOfThreeOffsets) {
    for (int i = 0; i <= 400; ++i) {
        const double r = i * 0.01;
        for (double v : {0.0, 0.7, 2.0})
            for (double w : {-1.5, 0.0, 0.4}) {
                const double base = reward_explore(r, v, w);
                const double expected = (r > 2.0 && r < 2.5) ? base + 2.0 : (r < 1.0 ? base - 50.0 : base);
                EXPECT_EQ(reward_sar(r, v, w), expected);
            }
    }
}

TEST(Reward, ExploreMonotonicity) {
    for (int i = 0; i < 50; ++i) {
        const double r = 0.2 * i, v = 0.04 * i, w = 0.03 * i;
        EXPECT_LE(reward_explore(r, v, w), reward_explore(r + 0.2, v, w));
        EXPECT_LE(reward_explore(r, v, w), reward_explore(r, v + 0.04, w));
        EXPECT_GE(reward_explore(r, v, w), reward_explore(r, v, w + 0.03));
        EXPECT_GE(reward_explore(r, v, -w), reward_explore(r, v, -w - 0.03));
    }
}

TEST(Reset, ShapeAndInitialWindows) {
    ExplorationEnv env = make_env("env1");
    const Observation o = env.reset(5);
    EXPECT_EQ(o.size(), 2u * 24 + 2);
    EXPECT_EQ(o.flatten().size(), env.observation_size());
    EXPECT_EQ(o.ranges_prev, o.ranges_now);
    EXPECT_EQ(o.action_prev[0], 0.0);
    EXPECT_EQ(o.action_prev[1], 0.0);
    for (double r : o.ranges_now) {
        EXPECT_GT(r, 0.0);
        EXPECT_LE(r, 1.0);
    }
}

TEST(Reset, SameSeedSameObservation) {
    ExplorationEnv a = make_env("env2"), b = make_env("env2", 200, RewardKind::Explore, 77);
    EXPECT_EQ(a.reset(123).flatten(), b.reset(123).flatten());
}

TEST(Reset, SpawnsHaveClearance) {
    ExplorationEnv env = make_env("env2");
    for (int k = 0; k < 1000; ++k) {
        env.reset();
        EXPECT_FALSE(collision_check(env.map(), env.state().pose(), env.config().clearance));
    }
}

TEST(Step, ZeroActionInOpenSpace) {
    ExplorationEnv env = make_env("env1");
    env.reset_to({12.5, 12.5, 0.3});
    const StepOutcome out = env.step({0.0, 0.0});
    EXPECT_FALSE(out.done);
    double min_range = 10.0;
    for (double b : env.beam_angles())
        min_range = std::min(min_range, oracle::march_ray(env.map(), {12.5, 12.5}, 0.3 + b, 10.0, 1e-4));
    EXPECT_NEAR(out.info.min_range, min_range, 2e-4);
    EXPECT_DOUBLE_EQ(out.reward, 0.0075 * out.info.min_range * out.info.min_range);
}

TEST(Step, DrivingIntoAWallCollides) {
    ExplorationEnv env = make_env("env1");
    env.reset_to({0.5, 12.5, std::numbers::pi});
    const int bound = static_cast<int>(std::ceil(0.5 / (2 * 0.1))) + 1;
    int steps = 0;
    StepOutcome out;
    do {
        out = env.step({2.0, 0.0});
        ++steps;
    } while (!out.done);
    EXPECT_TRUE(out.info.collided);
    EXPECT_LE(steps, bound);
    EXPECT_THROW(env.step({1.0, 0.0}), UsageError);
}

TEST(Step, BudgetEndsEpisodeWithoutCollision) {
    ExplorationEnv env = make_env("env1", 7);
    env.reset_to({12.5, 12.5, 0.0});
    for (int k = 1; k <= 7; ++k) {
        const StepOutcome out = env.step({0.0, 0.5});
        EXPECT_EQ(out.done, k == 7);
        EXPECT_FALSE(out.info.collided);
    }
}

TEST(Step, WindowsShiftAndActionIsRecorded) {
    ExplorationEnv env = make_env("env2");
    const Observation o0 = env.reset(3);
    const StepOutcome o1 = env.step_normalized({0.5, -0.25});
    EXPECT_EQ(o1.observation.ranges_prev, o0.ranges_now);
    EXPECT_EQ(o1.observation.action_prev[0], 0.5);
    EXPECT_EQ(o1.observation.action_prev[1], -0.25);
    const ActionCommand c = env.denormalize({0.5, -0.25});
    EXPECT_DOUBLE_EQ(c.v, 1.5);
    EXPECT_DOUBLE_EQ(c.omega, -0.375);
    const StepOutcome o2 = env.step_normalized({3.0, -3.0});
    EXPECT_EQ(o2.observation.ranges_prev, o1.observation.ranges_now);
    EXPECT_EQ(o2.observation.action_prev[0], 1.0);
    EXPECT_EQ(o2.observation.action_prev[1], -1.0);
}

TEST(Step, NoUnflaggedPenetration) {
    ExplorationEnv env = make_env("env2", 400);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int ep = 0; ep < 40; ++ep) {
        env.reset();
        StepOutcome out;
        do {
            out = env.step_normalized({u(rng), u(rng)});
            if (!out.done) {
                const double m = *std::min_element(out.observation.ranges_now.begin(),
                                                   out.observation.ranges_now.end());
                EXPECT_GT(m * env.config().max_range, env.config().footprint_radius);
            }
            EXPECT_EQ(out.done, out.info.collided || env.step_count() == 400);
        } while (!out.done);
    }
}

TEST(Step, ReplayIsBitExact) {
    auto run = [](std::uint64_t seed) {
        ExplorationEnv env = make_env("env3", 150, RewardKind::Sar);
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> trace;
        for (int ep = 0; ep < 5; ++ep) {
            const auto o = env.reset(seed + ep).flatten();
            trace.insert(trace.end(), o.begin(), o.end());
            StepOutcome out;
            do {
                out = env.step_normalized({u(rng), u(rng)});
                const auto f = out.observation.flatten();
                trace.insert(trace.end(), f.begin(), f.end());
                trace.push_back(out.reward);
                trace.push_back(out.info.pose.x);
                trace.push_back(out.info.pose.psi);
            } while (!out.done);
        }
        return trace;
    };
    EXPECT_EQ(run(9), run(9));
    EXPECT_NE(run(9), run(10));
}

TEST(EnvConfig, Validation) {
    EnvConfig c;
    EXPECT_NO_THROW(c.validate());
    c.beams = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW(reward_kind_from_string("fast"), std::invalid_argument);
    EXPECT_EQ(reward_kind_from_string(to_string(RewardKind::Sar)), RewardKind::Sar);
}
