#include "rangenav/nn.hpp"

#include <cmath>

namespace rangenav::nn {

using nlohmann::json;

std::string to_string(OutputHead head) {
    switch (head) {
        case OutputHead::Linear: return "linear";
        case OutputHead::Tanh: return "tanh";
        case OutputHead::Gaussian: return "gaussian";
    }
    return "linear";
}

OutputHead output_head_from_string(const std::string& s) {
    if (s == "linear") return OutputHead::Linear;
    if (s == "tanh") return OutputHead::Tanh;
    if (s == "gaussian") return OutputHead::Gaussian;
    throw ShapeError("unknown output head '" + s + "'");
}

Mlp Mlp::create(std::vector<int> layer_dims, OutputHead head, std::mt19937_64& rng,
                double final_scale) {
    if (layer_dims.size() < 2) throw ShapeError("an MLP needs at least input and output widths");
    for (int d : layer_dims)
        if (d < 1) throw ShapeError("layer widths must be positive");
    if (head == OutputHead::Gaussian && layer_dims.back() % 2 != 0)
        throw ShapeError("gaussian head needs an even output width (mean, log-std)");

    Mlp net;
    net.layer_dims = std::move(layer_dims);
    net.head = head;
    const std::size_t n_layers = net.layer_dims.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int fan_in = net.layer_dims[l];
        const int fan_out = net.layer_dims[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        if (l + 1 == n_layers) bound *= final_scale;
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
        // Row-major fill so the draw order matches the checkpoint layout.
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = dist(rng);
        for (int r = 0; r < fan_out; ++r) layer.bias(r) = dist(rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

bool Mlp::all_finite() const {
    for (const auto& l : layers)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

Matrix mlp_forward(const Mlp& net, const Matrix& input, MlpCache* cache) {
    if (input.rows() != net.input_size())
        throw ShapeError("input has " + std::to_string(input.rows()) + " rows, network expects " +
                         std::to_string(net.input_size()));
    const std::size_t n_layers = net.layers.size();
    Matrix a = input;
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(input);
    }
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        Matrix z(net.layers[l].weight.rows(), a.cols());
        z.noalias() = net.layers[l].weight * a;
        z.colwise() += net.layers[l].bias;
        a = z.cwiseMax(0.0);
        if (cache) cache->activations.push_back(a);
    }
    Matrix z(net.layers.back().weight.rows(), a.cols());
    z.noalias() = net.layers.back().weight * a;
    z.colwise() += net.layers.back().bias;

    Matrix out;
    switch (net.head) {
        case OutputHead::Linear: out = z; break;
        case OutputHead::Tanh: out = z.array().tanh().matrix(); break;
        case OutputHead::Gaussian: {
            out = z;
            const Eigen::Index half = z.rows() / 2;
            out.bottomRows(half) = z.bottomRows(half).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
            break;
        }
    }
    if (cache) {
        cache->output_pre = std::move(z);
        cache->output = out;
    }
    return out;
}

Vector mlp_forward(const Mlp& net, const Vector& input) {
    return mlp_forward(net, Matrix(input), nullptr).col(0);
}

MlpGradients mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& output_grad) {
    const std::size_t n_layers = net.layers.size();
    if (cache.activations.size() != n_layers)
        throw ShapeError("cache does not belong to this network");
    if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols())
        throw ShapeError("output gradient shape does not match the forward output");

    Matrix delta;
    switch (net.head) {
        case OutputHead::Linear: delta = output_grad; break;
        case OutputHead::Tanh:
            delta = output_grad.cwiseProduct((1.0 - cache.output.array().square()).matrix());
            break;
        case OutputHead::Gaussian: {
            delta = output_grad;
            const Eigen::Index half = delta.rows() / 2;
            auto pre = cache.output_pre.bottomRows(half).array();
            delta.bottomRows(half) =
                ((pre >= kLogStdMin) && (pre <= kLogStdMax))
                    .select(delta.bottomRows(half).array(), 0.0)
                    .matrix();
            break;
        }
    }

    MlpGradients grads;
    grads.layers.resize(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        const Matrix& a_in = cache.activations[l];
        grads.layers[l].weight.noalias() = delta * a_in.transpose();
        grads.layers[l].bias = delta.rowwise().sum();
        Matrix upstream(net.layers[l].weight.cols(), delta.cols());
        upstream.noalias() = net.layers[l].weight.transpose() * delta;
        if (l == 0) {
            grads.input = std::move(upstream);
        } else {
            delta = (a_in.array() > 0.0).select(upstream.array(), 0.0).matrix();
        }
    }
    return grads;
}

AdamState AdamState::for_network(const Mlp& net) {
    AdamState s;
    for (const auto& l : net.layers) {
        DenseLayer zero{Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())};
        s.first.push_back(zero);
        s.second.push_back(zero);
    }
    return s;
}

namespace {

template <typename P, typename G>
void adam_apply(P& param, const G& grad, P& m, P& v, double beta1, double beta2, double eps,
                double lr, double bc1, double bc2) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state, double lr) {
    if (grads.layers.size() != net.layers.size() || state.first.size() != net.layers.size())
        throw ShapeError("adam_step: layer count mismatch");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& g = grads.layers[l];
        const auto& p = net.layers[l];
        if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
            g.bias.size() != p.bias.size())
            throw ShapeError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        if (!g.weight.allFinite() || !g.bias.allFinite())
            throw DivergenceError("non-finite gradient at layer " + std::to_string(l));
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        adam_apply(net.layers[l].weight, grads.layers[l].weight, state.first[l].weight,
                   state.second[l].weight, state.beta1, state.beta2, state.epsilon, lr, bc1, bc2);
        adam_apply(net.layers[l].bias, grads.layers[l].bias, state.first[l].bias,
                   state.second[l].bias, state.beta1, state.beta2, state.epsilon, lr, bc1, bc2);
    }
}

void ScalarAdam::apply(double& param, double grad, double lr) {
    if (!std::isfinite(grad)) throw DivergenceError("non-finite scalar gradient");
    ++step;
    const double t = static_cast<double>(step);
    first = beta1 * first + (1.0 - beta1) * grad;
    second = beta2 * second + (1.0 - beta2) * grad * grad;
    const double m_hat = first / (1.0 - std::pow(beta1, t));
    const double v_hat = second / (1.0 - std::pow(beta2, t));
    param -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
}

void check_same_shape(const Mlp& a, const Mlp& b) {
    if (a.layer_dims != b.layer_dims || a.head != b.head || a.layers.size() != b.layers.size())
        throw ShapeError("networks have different shapes");
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
    check_same_shape(target, source);
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
    for (std::size_t l = 0; l < target.layers.size(); ++l) {
        target.layers[l].weight = (1.0 - tau) * target.layers[l].weight + tau * source.layers[l].weight;
        target.layers[l].bias = (1.0 - tau) * target.layers[l].bias + tau * source.layers[l].bias;
    }
}

namespace {

json flatten_row_major(const Matrix& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return flat;
}

Matrix unflatten_row_major(const json& flat, Eigen::Index rows, Eigen::Index cols,
                           const std::string& what) {
    if (!flat.is_array() || static_cast<Eigen::Index>(flat.size()) != rows * cols)
        throw ShapeError(what + ": expected " + std::to_string(rows * cols) + " values");
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[i++].get<double>();
    return m;
}

json layers_to_json(const std::vector<DenseLayer>& layers) {
    json w = json::array();
    json b = json::array();
    for (const auto& l : layers) {
        w.push_back(flatten_row_major(l.weight));
        b.push_back(flatten_row_major(l.bias));
    }
    return {{"weights", w}, {"biases", b}};
}

std::vector<DenseLayer> layers_from_json(const json& doc, const std::vector<int>& dims) {
    const json& w = doc.at("weights");
    const json& b = doc.at("biases");
    if (!w.is_array() || !b.is_array() || w.size() + 1 != dims.size() ||
        b.size() + 1 != dims.size())
        throw ShapeError("layer count does not match layer_dims");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::string what = "layer " + std::to_string(l);
        layers.push_back(DenseLayer{unflatten_row_major(w[l], dims[l + 1], dims[l], what + " weights"),
                                    unflatten_row_major(b[l], dims[l + 1], 1, what + " biases")});
    }
    return layers;
}

}  // namespace

json to_json(const Mlp& net) {
    json doc = layers_to_json(net.layers);
    doc["layer_dims"] = net.layer_dims;
    doc["head"] = to_string(net.head);
    return doc;
}

Mlp mlp_from_json(const json& doc) {
    Mlp net;
    net.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
    if (net.layer_dims.size() < 2) throw ShapeError("layer_dims needs at least two entries");
    net.head = output_head_from_string(doc.at("head").get<std::string>());
    net.layers = layers_from_json(doc, net.layer_dims);
    return net;
}

json to_json(const AdamState& s) {
    return {{"step", s.step},
            {"beta1", s.beta1},
            {"beta2", s.beta2},
            {"epsilon", s.epsilon},
            {"first", layers_to_json(s.first)},
            {"second", layers_to_json(s.second)}};
}

AdamState adam_from_json(const json& doc, const Mlp& shape) {
    AdamState s;
    s.step = doc.at("step").get<std::int64_t>();
    s.beta1 = doc.at("beta1").get<double>();
    s.beta2 = doc.at("beta2").get<double>();
    s.epsilon = doc.at("epsilon").get<double>();
    s.first = layers_from_json(doc.at("first"), shape.layer_dims);
    s.second = layers_from_json(doc.at("second"), shape.layer_dims);
    return s;
}

json to_json(const ScalarAdam& s) {
    return {{"first", s.first}, {"second", s.second}, {"step", s.step},
            {"beta1", s.beta1}, {"beta2", s.beta2},   {"epsilon", s.epsilon}};
}

ScalarAdam scalar_adam_from_json(const json& doc) {
    ScalarAdam s;
    s.first = doc.at("first").get<double>();
    s.second = doc.at("second").get<double>();
    s.step = doc.at("step").get<std::int64_t>();
    s.beta1 = doc.at("beta1").get<double>();
    s.beta2 = doc.at("beta2").get<double>();
    s.epsilon = doc.at("epsilon").get<double>();
    return s;
}

}  // namespace rangenav::nn
