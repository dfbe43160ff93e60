#pragma once

// Central finite differences against mlp_backward for a scalar probe loss
// L = sum(G .* f(X)). Perturbations that flip a ReLU gate or a log-std clamp
// are skipped: the loss is not differentiable there.

#include <algorithm>
#include <cmath>
#include <random>

#include "rangenav/nn.hpp"

namespace gradcheck {

using rangenav::nn::Matrix;
using rangenav::nn::Mlp;
using rangenav::nn::MlpCache;

inline double probe_loss(const Mlp& net, const Matrix& x, const Matrix& g, MlpCache& cache) {
    return (rangenav::nn::mlp_forward(net, x, &cache).array() * g.array()).sum();
}

inline bool same_gates(const Mlp& net, const MlpCache& a, const MlpCache& b) {
    for (std::size_t l = 1; l < a.activations.size(); ++l)
        if (((a.activations[l].array() > 0) != (b.activations[l].array() > 0)).any()) return false;
    if (net.head == rangenav::nn::OutputHead::Gaussian) {
        const auto half = a.output_pre.rows() / 2;
        auto inside = [&](const MlpCache& c) {
            auto p = c.output_pre.bottomRows(half).array();
            return ((p >= rangenav::nn::kLogStdMin) && (p <= rangenav::nn::kLogStdMax)).eval();
        };
        if ((inside(a) != inside(b)).any()) return false;
    }
    return true;
}

inline double relative_error(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / scale;
}

struct Result {
    double max_rel_error = 0.0;
    long checked = 0;
    long skipped = 0;
};

/// Checks every weight, bias and input entry of `net` at input `x`.
inline Result check(Mlp net, const Matrix& x_in, const Matrix& g, double h = 1e-5) {
    Result res;
    MlpCache base;
    probe_loss(net, x_in, g, base);
    const auto grads = rangenav::nn::mlp_backward(net, base, g);

    auto fd = [&](auto& slot, double analytic, auto&& eval) {
        const double keep = slot;
        MlpCache cp, cm;
        slot = keep + h;
        const double lp = eval(cp);
        slot = keep - h;
        const double lm = eval(cm);
        slot = keep;
        if (!same_gates(net, cp, base) || !same_gates(net, cm, base)) {
            ++res.skipped;
            return;
        }
        res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, (lp - lm) / (2 * h)));
        ++res.checked;
    };

    Matrix x = x_in;
    auto eval_net = [&](MlpCache& c) { return probe_loss(net, x, g, c); };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                fd(layer.weight(r, c), grads.layers[l].weight(r, c), eval_net);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            fd(layer.bias(r), grads.layers[l].bias(r), eval_net);
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) fd(x(r, c), grads.input(r, c), eval_net);
    return res;
}

/// A seeded random network of the given head plus a random probe.
struct Case {
    Mlp net;
    Matrix x;
    Matrix g;
};

inline Case random_case(rangenav::nn::OutputHead head, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> width(3, 9);
    const int in = width(rng), h1 = width(rng), h2 = width(rng);
    const int out = head == rangenav::nn::OutputHead::Gaussian ? 4 : (head == rangenav::nn::OutputHead::Linear ? 1 : 2);
    Case c{Mlp::create({in, h1, h2, out}, head, rng, 1.0), Matrix(in, 3), Matrix(out, 3)};
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < c.x.size(); ++i) c.x(i) = n(rng);
    for (Eigen::Index i = 0; i < c.g.size(); ++i) c.g(i) = n(rng);
    return c;
}

}  // namespace gradcheck
