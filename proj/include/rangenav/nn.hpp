#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace rangenav::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Output head of a network.
///  - Linear: identity (critics)
///  - Tanh: elementwise tanh (deterministic actors)
///  - Gaussian: first half of the outputs is a mean, second half a log-std
///    hard-clamped to [kLogStdMin, kLogStdMax] (stochastic actor)
enum class OutputHead { Linear, Tanh, Gaussian };

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

std::string to_string(OutputHead head);
OutputHead output_head_from_string(const std::string& s);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out

    friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
        return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
               a.bias.size() == b.bias.size() && a.weight == b.weight && a.bias == b.bias;
    }
};

/// Fully connected ReLU network. Batches are passed column-wise: an input is
/// a (layer_dims.front() x batch) matrix.
struct Mlp {
    std::vector<int> layer_dims;
    OutputHead head = OutputHead::Linear;
    std::vector<DenseLayer> layers;

    /// Weights and biases uniform in +/- 1/sqrt(fan_in); the last layer is
    /// additionally multiplied by final_scale.
    static Mlp create(std::vector<int> layer_dims, OutputHead head, std::mt19937_64& rng,
                      double final_scale = 1.0);

    int input_size() const { return layer_dims.front(); }
    int output_size() const { return layer_dims.back(); }
    std::size_t parameter_count() const;
    bool all_finite() const;

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

struct MlpCache {
    /// activations[0] is the input; activations[l] the ReLU output of hidden layer l.
    std::vector<Matrix> activations;
    Matrix output_pre;  // pre-head affine output
    Matrix output;
};

struct MlpGradients {
    std::vector<DenseLayer> layers;
    Matrix input;
};

Matrix mlp_forward(const Mlp& net, const Matrix& input, MlpCache* cache = nullptr);
Vector mlp_forward(const Mlp& net, const Vector& input);

/// Reverse-mode gradients of sum(output_grad .* output) with respect to every
/// parameter and the input, given the cache of the matching forward pass.
MlpGradients mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& output_grad);

struct AdamState {
    std::vector<DenseLayer> first;
    std::vector<DenseLayer> second;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_network(const Mlp& net);

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam step. Throws DivergenceError on non-finite gradients,
/// leaving params and state untouched.
void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state, double lr);

/// Adam over a single scalar parameter (used for the entropy temperature).
struct ScalarAdam {
    double first = 0.0;
    double second = 0.0;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void apply(double& param, double grad, double lr);

    friend bool operator==(const ScalarAdam&, const ScalarAdam&) = default;
};

/// target <- (1 - tau) * target + tau * source, elementwise.
void soft_update(Mlp& target, const Mlp& source, double tau);

void check_same_shape(const Mlp& a, const Mlp& b);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::json& doc, const Mlp& shape);
nlohmann::json to_json(const ScalarAdam& state);
ScalarAdam scalar_adam_from_json(const nlohmann::json& doc);

}  // namespace rangenav::nn
