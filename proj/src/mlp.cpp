#include "volclass/mlp.hpp"

#include "volclass/errors.hpp"
#include "volclass/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace volclass {

namespace {

template <class T>
using Matrices = std::vector<std::vector<T>>;

// The same kernels run on the float-32 network during training and on a
// double copy during gradient checking.
template <class T>
void forward_pass(const std::vector<std::size_t>& sizes, const Matrices<T>& weights, const Matrices<T>& biases,
                  std::span<const float> input, Matrices<double>& acts) {
    acts.resize(sizes.size());
    acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        const std::size_t prev = sizes[l - 1];
        const std::vector<T>& w = weights[l - 1];
        const std::vector<T>& b = biases[l - 1];
        const std::vector<double>& a_prev = acts[l - 1];
        std::vector<double>& a = acts[l];
        a.resize(sizes[l]);
        for (std::size_t i = 0; i < sizes[l]; ++i) {
            const T* row = w.data() + i * prev;
            double sum = static_cast<double>(b[i]);
            for (std::size_t j = 0; j < prev; ++j) sum += static_cast<double>(row[j]) * a_prev[j];
            a[i] = sigmoid(sum);
        }
    }
}

// deltas[l] is dLoss/d(pre-activation) of layer l+1, for loss ½·Σ(o - t)².
template <class T>
void backward_pass(const std::vector<std::size_t>& sizes, const Matrices<T>& weights, const Matrices<double>& acts,
                   std::span<const double> target, Matrices<double>& deltas) {
    const std::size_t transitions = sizes.size() - 1;
    deltas.resize(transitions);
    const std::vector<double>& out = acts.back();
    deltas[transitions - 1].resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        deltas[transitions - 1][i] = (out[i] - target[i]) * out[i] * (1.0 - out[i]);

    for (std::size_t t = transitions - 1; t > 0; --t) {
        const std::size_t n_next = sizes[t + 1];
        const std::size_t n_here = sizes[t];
        const std::vector<T>& w = weights[t];
        const std::vector<double>& d_next = deltas[t];
        const std::vector<double>& a = acts[t];
        std::vector<double>& d = deltas[t - 1];
        d.assign(n_here, 0.0);
        for (std::size_t i = 0; i < n_next; ++i) {
            const T* row = w.data() + i * n_here;
            for (std::size_t j = 0; j < n_here; ++j) d[j] += static_cast<double>(row[j]) * d_next[i];
        }
        for (std::size_t j = 0; j < n_here; ++j) d[j] *= a[j] * (1.0 - a[j]);
    }
}

template <class T>
double sample_loss(const std::vector<std::size_t>& sizes, const Matrices<T>& weights, const Matrices<T>& biases,
                   std::span<const float> input, std::span<const double> target) {
    Matrices<double> acts;
    forward_pass(sizes, weights, biases, input, acts);
    double loss = 0.0;
    for (std::size_t i = 0; i < acts.back().size(); ++i) {
        const double e = acts.back()[i] - target[i];
        loss += e * e;
    }
    return 0.5 * loss;
}

Matrices<double> widen(const Matrices<float>& m) {
    Matrices<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i].assign(m[i].begin(), m[i].end());
    return out;
}

void check_input(const Network& net, std::span<const float> input) {
    if (input.size() != net.input_size())
        throw Error(Errc::ShapeMismatch, "network expects " + std::to_string(net.input_size()) + " inputs, got " +
                                             std::to_string(input.size()));
}

void check_target(const Network& net, std::size_t target_size) {
    if (target_size != net.output_size())
        throw Error(Errc::ShapeMismatch, "network has " + std::to_string(net.output_size()) + " outputs, target has " +
                                             std::to_string(target_size));
}

} // namespace

void TrainingConfig::validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw Error(Errc::BadConfig, "learning rate must be > 0");
    if (!(momentum >= 0 && momentum < 1)) throw Error(Errc::BadConfig, "momentum must be in [0, 1)");
    if (!(mse_target > 0)) throw Error(Errc::BadConfig, "MSE target must be > 0");
    if (max_epochs == 0) throw Error(Errc::BadConfig, "max epochs must be positive");
}

double sigmoid(double x) {
    x = std::clamp(x, -30.0, 30.0);
    return 1.0 / (1.0 + std::exp(-x));
}

Network::Network(std::vector<std::size_t> layer_sizes, std::vector<std::vector<float>> weights,
                 std::vector<std::vector<float>> biases, std::uint64_t seed)
    : layer_sizes_(std::move(layer_sizes)), weights_(std::move(weights)), biases_(std::move(biases)), seed_(seed) {
    if (layer_sizes_.size() < 3 || layer_sizes_.size() > 4)
        throw Error(Errc::BadShape, "network needs 3 or 4 layers, got " + std::to_string(layer_sizes_.size()));
    for (std::size_t n : layer_sizes_)
        if (n == 0) throw Error(Errc::BadShape, "layer sizes must be positive");
    const std::size_t transitions = layer_sizes_.size() - 1;
    if (weights_.size() != transitions || biases_.size() != transitions)
        throw Error(Errc::BadShape, "parameter blocks do not match layer count");
    for (std::size_t t = 0; t < transitions; ++t) {
        if (weights_[t].size() != layer_sizes_[t + 1] * layer_sizes_[t])
            throw Error(Errc::BadShape, "weight matrix " + std::to_string(t) + " has wrong size");
        if (biases_[t].size() != layer_sizes_[t + 1])
            throw Error(Errc::BadShape, "bias vector " + std::to_string(t) + " has wrong size");
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < weights_.size(); ++t) n += weights_[t].size() + biases_[t].size();
    return n;
}

std::vector<double> Network::forward(std::span<const float> input) const {
    check_input(*this, input);
    Matrices<double> acts;
    forward_pass(layer_sizes_, weights_, biases_, input, acts);
    return std::move(acts.back());
}

Network init_network(std::size_t input_size, std::span<const std::size_t> hidden_sizes, std::size_t output_size,
                     std::uint64_t seed) {
    if (hidden_sizes.empty() || hidden_sizes.size() > 2)
        throw Error(Errc::BadShape, "need 1 or 2 hidden layers, got " + std::to_string(hidden_sizes.size()));
    std::vector<std::size_t> sizes;
    sizes.push_back(input_size);
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(output_size);
    for (std::size_t n : sizes)
        if (n == 0) throw Error(Errc::BadShape, "layer sizes must be positive");

    Rng rng(seed);
    Matrices<float> weights(sizes.size() - 1);
    Matrices<float> biases(sizes.size() - 1);
    for (std::size_t t = 0; t + 1 < sizes.size(); ++t) {
        weights[t].resize(sizes[t + 1] * sizes[t]);
        for (float& w : weights[t]) w = static_cast<float>(rng.uniform(-0.5, 0.5));
        biases[t].resize(sizes[t + 1]);
        for (float& b : biases[t]) b = static_cast<float>(rng.uniform(-0.5, 0.5));
    }
    return Network(std::move(sizes), std::move(weights), std::move(biases), seed);
}

double mean_squared_error(const Network& net, std::span<const TrainingSample> samples) {
    if (samples.empty()) throw Error(Errc::EmptySampleSet, "no samples");
    double sum = 0.0;
    for (const auto& s : samples) {
        check_target(net, s.target.size());
        const auto out = net.forward(s.input);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double e = out[i] - static_cast<double>(s.target[i]);
            sum += e * e;
        }
    }
    return sum / static_cast<double>(samples.size() * net.output_size());
}

TrainingReport train(Network& net, std::span<const TrainingSample> samples, const TrainingConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw Error(Errc::EmptySampleSet, "training needs at least one sample");
    for (const auto& s : samples) {
        check_input(net, s.input);
        check_target(net, s.target.size());
    }

    const auto& sizes = net.layer_sizes();
    auto& weights = net.mutable_weights();
    auto& biases = net.mutable_biases();
    const std::size_t transitions = weights.size();

    Matrices<double> w_velocity(transitions), b_velocity(transitions);
    for (std::size_t t = 0; t < transitions; ++t) {
        w_velocity[t].assign(weights[t].size(), 0.0);
        b_velocity[t].assign(biases[t].size(), 0.0);
    }

    const double lr = cfg.learning_rate;
    const double mu = cfg.momentum;
    Matrices<double> acts, deltas;
    std::vector<double> target;
    TrainingReport report;
    while (report.epochs_run < cfg.max_epochs) {
        for (const auto& s : samples) {
            target.assign(s.target.begin(), s.target.end());
            forward_pass(sizes, weights, biases, s.input, acts);
            backward_pass(sizes, weights, acts, target, deltas);
            for (std::size_t t = 0; t < transitions; ++t) {
                const std::size_t prev = sizes[t];
                const std::vector<double>& a_prev = acts[t];
                const std::vector<double>& d = deltas[t];
                std::vector<float>& w = weights[t];
                std::vector<double>& vw = w_velocity[t];
                for (std::size_t i = 0; i < d.size(); ++i) {
                    const double step = lr * d[i];
                    float* row = w.data() + i * prev;
                    double* vrow = vw.data() + i * prev;
                    for (std::size_t j = 0; j < prev; ++j) {
                        vrow[j] = mu * vrow[j] - step * a_prev[j];
                        row[j] = static_cast<float>(static_cast<double>(row[j]) + vrow[j]);
                    }
                    double& vb = b_velocity[t][i];
                    vb = mu * vb - step;
                    biases[t][i] = static_cast<float>(static_cast<double>(biases[t][i]) + vb);
                }
            }
        }
        ++report.epochs_run;
        report.final_mse = mean_squared_error(net, samples);
        if (report.final_mse < cfg.mse_target) break;
    }
    report.converged = report.final_mse < cfg.mse_target;
    return report;
}

Network add_output(const Network& net, std::uint64_t seed) {
    auto sizes = net.layer_sizes();
    auto weights = net.weights();
    auto biases = net.biases();
    const std::size_t last_hidden = sizes[sizes.size() - 2];

    Rng rng(seed);
    for (std::size_t j = 0; j < last_hidden; ++j) weights.back().push_back(static_cast<float>(rng.uniform(-0.5, 0.5)));
    biases.back().push_back(static_cast<float>(rng.uniform(-0.5, 0.5)));
    sizes.back() += 1;
    return Network(std::move(sizes), std::move(weights), std::move(biases), net.seed());
}

Gradients analytic_gradients(const Network& net, std::span<const float> input, std::span<const double> target) {
    check_input(net, input);
    check_target(net, target.size());
    const auto& sizes = net.layer_sizes();
    Matrices<double> acts, deltas;
    forward_pass(sizes, net.weights(), net.biases(), input, acts);
    backward_pass(sizes, net.weights(), acts, target, deltas);

    Gradients g;
    g.weights.resize(net.transition_count());
    g.biases.resize(net.transition_count());
    for (std::size_t t = 0; t < net.transition_count(); ++t) {
        const std::size_t prev = sizes[t];
        g.weights[t].resize(sizes[t + 1] * prev);
        for (std::size_t i = 0; i < sizes[t + 1]; ++i)
            for (std::size_t j = 0; j < prev; ++j) g.weights[t][i * prev + j] = deltas[t][i] * acts[t][j];
        g.biases[t] = deltas[t];
    }
    return g;
}

Gradients numeric_gradients(const Network& net, std::span<const float> input, std::span<const double> target,
                            double epsilon) {
    check_input(net, input);
    check_target(net, target.size());
    const auto& sizes = net.layer_sizes();
    Matrices<double> weights = widen(net.weights());
    Matrices<double> biases = widen(net.biases());

    auto central = [&](double& param) {
        const double saved = param;
        param = saved + epsilon;
        const double up = sample_loss(sizes, weights, biases, input, target);
        param = saved - epsilon;
        const double down = sample_loss(sizes, weights, biases, input, target);
        param = saved;
        return (up - down) / (2.0 * epsilon);
    };

    Gradients g;
    g.weights.resize(weights.size());
    g.biases.resize(biases.size());
    for (std::size_t t = 0; t < weights.size(); ++t) {
        g.weights[t].resize(weights[t].size());
        for (std::size_t k = 0; k < weights[t].size(); ++k) g.weights[t][k] = central(weights[t][k]);
        g.biases[t].resize(biases[t].size());
        for (std::size_t k = 0; k < biases[t].size(); ++k) g.biases[t][k] = central(biases[t][k]);
    }
    return g;
}

double max_relative_error(const Gradients& analytic, const Gradients& numeric) {
    double worst = 0.0;
    auto compare = [&worst](const Matrices<double>& a, const Matrices<double>& n) {
        if (a.size() != n.size()) throw Error(Errc::ShapeMismatch, "gradient layouts differ");
        for (std::size_t t = 0; t < a.size(); ++t) {
            if (a[t].size() != n[t].size()) throw Error(Errc::ShapeMismatch, "gradient layouts differ");
            for (std::size_t k = 0; k < a[t].size(); ++k) {
                const double ga = a[t][k];
                const double gn = n[t][k];
                const double scale = std::max({std::abs(ga), std::abs(gn), 1e-12});
                worst = std::max(worst, std::abs(ga - gn) / scale);
            }
        }
    };
    compare(analytic.weights, numeric.weights);
    compare(analytic.biases, numeric.biases);
    return worst;
}

double gradient_check(const Network& net, std::span<const float> input, std::span<const double> target,
                      double epsilon) {
    return max_relative_error(analytic_gradients(net, input, target), numeric_gradients(net, input, target, epsilon));
}

} // namespace volclass
