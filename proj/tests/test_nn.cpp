#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "rangenav/nn.hpp"

using namespace rangenav::nn;

namespace {

Mlp identity_net(int n, OutputHead head = OutputHead::Linear) {
    Mlp net;
    net.layer_dims = {n, n, n};
    net.head = head;
    for (int l = 0; l < 2; ++l) net.layers.push_back({Matrix::Identity(n, n), Vector::Zero(n)});
    return net;
}

}  // namespace

TEST(MlpForward, IdentityNetwork) {
    const Mlp net = identity_net(3);
    Vector x(3);
    x << 0.5, 2.0, 7.0;
    EXPECT_EQ(mlp_forward(net, x), x);
    x << -1.0, 1.0, -1.0;
    MlpCache cache;
    mlp_forward(net, Matrix(x), &cache);
    EXPECT_EQ(cache.activations[1](0, 0), 0.0);
    EXPECT_EQ(cache.activations[1](1, 0), 1.0);
}

TEST(MlpForward, MatchesNaiveOracle) {
    for (auto head : {OutputHead::Linear, OutputHead::Tanh, OutputHead::Gaussian}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto c = gradcheck::random_case(head, seed);
            const Matrix out = mlp_forward(c.net, c.x);
            for (Eigen::Index j = 0; j < c.x.cols(); ++j) {
                std::vector<double> in(c.x.col(j).data(), c.x.col(j).data() + c.x.rows());
                const auto ref = oracle::naive_forward(c.net, in);
                for (std::size_t i = 0; i < ref.size(); ++i)
                    EXPECT_NEAR(out(static_cast<Eigen::Index>(i), j), ref[i], 1e-12);
            }
        }
    }
}

TEST(MlpForward, DeterministicAndShapeChecked) {
    auto c = gradcheck::random_case(OutputHead::Tanh, 3);
    EXPECT_EQ(mlp_forward(c.net, c.x), mlp_forward(c.net, c.x));
    EXPECT_THROW(mlp_forward(c.net, Matrix(Matrix::Zero(c.x.rows() + 1, 1))), ShapeError);
}

TEST(MlpBackward, SingleLinearLayer) {
    Mlp net;
    net.layer_dims = {3, 2};
    net.layers.push_back({Matrix::Zero(2, 3), Vector::Zero(2)});
    Matrix x(3, 1);
    x << 1.0, -2.0, 3.0;
    MlpCache cache;
    mlp_forward(net, x, &cache);
    Matrix g(2, 1);
    g << 1.0, 0.0;
    const auto grads = mlp_backward(net, cache, g);
    Matrix expected = Matrix::Zero(2, 3);
    expected.row(0) = x.transpose();
    EXPECT_EQ(grads.layers[0].weight, expected);
    EXPECT_EQ(grads.layers[0].bias, (Vector(2) << 1.0, 0.0).finished());
}

TEST(MlpBackward, ZeroOutputGradient) {
    auto c = gradcheck::random_case(OutputHead::Gaussian, 1);
    MlpCache cache;
    mlp_forward(c.net, c.x, &cache);
    const auto grads = mlp_backward(c.net, cache, Matrix::Zero(c.g.rows(), c.g.cols()));
    for (const auto& l : grads.layers) {
        EXPECT_TRUE(l.weight.isZero(0));
        EXPECT_TRUE(l.bias.isZero(0));
    }
    EXPECT_TRUE(grads.input.isZero(0));
    EXPECT_THROW(mlp_backward(c.net, cache, Matrix::Zero(1, 1)), ShapeError);
}

TEST(MlpBackward, FiniteDifferencesAllHeads) {
    for (auto head : {OutputHead::Linear, OutputHead::Tanh, OutputHead::Gaussian}) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto c = gradcheck::random_case(head, 1000 + seed);
            const auto r = gradcheck::check(c.net, c.x, c.g);
            EXPECT_LT(r.max_rel_error, 1e-4) << to_string(head) << " seed " << seed;
            EXPECT_GT(r.checked, 0);
        }
    }
}

TEST(MlpBackward, ClampedLogStdHasZeroGradient) {
    auto c = gradcheck::random_case(OutputHead::Gaussian, 5);
    c.net.layers.back().bias(2) = 50.0;   // log-std row 0 pinned at the upper clamp
    c.net.layers.back().bias(3) = -50.0;  // log-std row 1 pinned at the lower clamp
    MlpCache cache;
    const Matrix out = mlp_forward(c.net, c.x, &cache);
    EXPECT_TRUE((out.row(2).array() == kLogStdMax).all());
    EXPECT_TRUE((out.row(3).array() == kLogStdMin).all());
    const auto grads = mlp_backward(c.net, cache, c.g);
    EXPECT_EQ(grads.layers.back().bias(2), 0.0);
    EXPECT_EQ(grads.layers.back().bias(3), 0.0);
    EXPECT_TRUE(grads.layers.back().weight.bottomRows(2).isZero(0));
}

TEST(MlpCreate, InitBoundsAndFinalScale) {
    std::mt19937_64 rng(1);
    const Mlp net = Mlp::create({16, 32, 2}, OutputHead::Tanh, rng, 0.01);
    EXPECT_LE(net.layers[0].weight.cwiseAbs().maxCoeff(), 1.0 / 4.0);
    EXPECT_LE(net.layers[1].weight.cwiseAbs().maxCoeff(), 0.01 / std::sqrt(32.0));
    EXPECT_EQ(net.parameter_count(), 16u * 32 + 32 + 32 * 2 + 2);
    std::mt19937_64 again(1);
    EXPECT_EQ(Mlp::create({16, 32, 2}, OutputHead::Tanh, again, 0.01), net);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    auto c = gradcheck::random_case(OutputHead::Linear, 2);
    Mlp net = c.net;
    AdamState s = AdamState::for_network(net);
    MlpGradients g;
    for (const auto& l : net.layers)
        g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    adam_step(net, g, s, 0.1);
    EXPECT_EQ(net, c.net);
    EXPECT_EQ(s.step, 1);
}

TEST(Adam, ScalarOracleSequence) {
    Mlp net;
    net.layer_dims = {1, 1};
    net.layers.push_back({Matrix::Constant(1, 1, 0.3), Vector::Constant(1, -0.2)});
    AdamState s = AdamState::for_network(net);
    oracle::ScalarAdamRef rw, rb;
    double w = 0.3, b = -0.2;
    const double gw[] = {0.5, 0.5, -1.25, 3e-3};
    const double gb[] = {-2.0, -2.0, 0.0, 7.0};
    for (int k = 0; k < 4; ++k) {
        MlpGradients g;
        g.layers.push_back({Matrix::Constant(1, 1, gw[k]), Vector::Constant(1, gb[k])});
        adam_step(net, g, s, 1e-3);
        w = rw.step(w, gw[k], 1e-3);
        b = rb.step(b, gb[k], 1e-3);
        EXPECT_NEAR(net.layers[0].weight(0, 0), w, 1e-15);
        EXPECT_NEAR(net.layers[0].bias(0), b, 1e-15);
        if (k == 0) {
            EXPECT_NEAR(w, 0.3 - 1e-3 * 0.5 / (0.5 + 1e-8), 1e-15);
            EXPECT_NEAR(b, -0.2 + 1e-3, 1e-10);
        }
    }
}

TEST(Adam, NonFiniteGradientThrowsWithoutMutation) {
    auto c = gradcheck::random_case(OutputHead::Linear, 4);
    Mlp net = c.net;
    AdamState s = AdamState::for_network(net);
    const AdamState s0 = s;
    MlpGradients g;
    for (const auto& l : net.layers)
        g.layers.push_back({Matrix::Ones(l.weight.rows(), l.weight.cols()), Vector::Ones(l.bias.size())});
    g.layers.back().bias(0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(adam_step(net, g, s, 0.1), DivergenceError);
    EXPECT_EQ(net, c.net);
    EXPECT_EQ(s, s0);
}

TEST(ScalarAdam, MatchesOracle) {
    ScalarAdam a;
    oracle::ScalarAdamRef r;
    double p = 0.2, q = 0.2;
    for (double g : {1.0, -0.5, 0.25, 4.0}) {
        a.apply(p, g, 0.01);
        q = r.step(q, g, 0.01);
        EXPECT_NEAR(p, q, 1e-15);
    }
}

TEST(SoftUpdate, Endpoints) {
    auto a = gradcheck::random_case(OutputHead::Tanh, 7);
    std::mt19937_64 rng(99);
    Mlp source = Mlp::create(a.net.layer_dims, OutputHead::Tanh, rng);
    Mlp t = a.net;
    soft_update(t, source, 0.0);
    EXPECT_EQ(t, a.net);
    soft_update(t, source, 1.0);
    EXPECT_EQ(t, source);
}

TEST(SoftUpdate, ScalarContraction) {
    Mlp target, source;
    target.layer_dims = source.layer_dims = {1, 1};
    target.layers.push_back({Matrix::Zero(1, 1), Vector::Zero(1)});
    source.layers.push_back({Matrix::Ones(1, 1), Vector::Ones(1)});
    soft_update(target, source, 0.001);
    EXPECT_DOUBLE_EQ(target.layers[0].weight(0, 0), 0.001);
    for (int n = 2; n <= 500; ++n) {
        soft_update(target, source, 0.001);
        EXPECT_NEAR(target.layers[0].bias(0), 1.0 - std::pow(0.999, n), 1e-12);
    }
}

TEST(SoftUpdate, ShapeMismatchThrows) {
    std::mt19937_64 rng(1);
    Mlp a = Mlp::create({3, 4, 1}, OutputHead::Linear, rng);
    const Mlp b = Mlp::create({3, 5, 1}, OutputHead::Linear, rng);
    EXPECT_THROW(soft_update(a, b, 0.5), ShapeError);
}

TEST(Serialization, BitExactRoundTrip) {
    for (auto head : {OutputHead::Linear, OutputHead::Tanh, OutputHead::Gaussian}) {
        auto c = gradcheck::random_case(head, 11);
        const Mlp back = mlp_from_json(nlohmann::json::parse(to_json(c.net).dump()));
        EXPECT_EQ(back, c.net);
        AdamState s = AdamState::for_network(c.net);
        MlpCache cache;
        mlp_forward(c.net, c.x, &cache);
        Mlp net = c.net;
        adam_step(net, mlp_backward(net, cache, c.g), s, 1e-3);
        EXPECT_EQ(adam_from_json(nlohmann::json::parse(to_json(s).dump()), net), s);
    }
    const auto doc = to_json(gradcheck::random_case(OutputHead::Tanh, 1).net);
    EXPECT_TRUE(doc.contains("layer_dims"));
    auto broken = doc;
    broken["layer_dims"][1] = 999;
    EXPECT_ANY_THROW(mlp_from_json(broken));
}
