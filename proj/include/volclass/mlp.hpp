#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace volclass {

inline constexpr std::size_t kDefaultHidden = 64;

struct TrainingSample {
    std::vector<float> input;
    std::vector<float> target; // one-hot
    std::string label;
    std::string source_id;

    friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

struct TrainingConfig {
    double learning_rate = 0.2;
    double momentum = 0.9;
    double mse_target = 0.003;
    std::size_t max_epochs = 10000;
    // Initialization seed for networks and new outputs; training itself visits
    // samples in a fixed order and draws no random numbers.
    std::uint64_t seed = 0;

    /// Throws BadConfig on out-of-range values.
    void validate() const;
};

struct TrainingReport {
    std::size_t epochs_run = 0;
    double final_mse = 0.0;
    bool converged = false;
};

/// Fully connected sigmoid perceptron with 3 or 4 layers (input, one or two
/// hidden, output). Weights are float-32, row-major (next × previous);
/// dot products accumulate in double.
class Network {
public:
    /// Throws BadShape when the parts are inconsistent with layer_sizes.
    Network(std::vector<std::size_t> layer_sizes, std::vector<std::vector<float>> weights,
            std::vector<std::vector<float>> biases, std::uint64_t seed = 0);

    const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
    std::size_t input_size() const { return layer_sizes_.front(); }
    std::size_t output_size() const { return layer_sizes_.back(); }
    /// Number of weight matrices (layers - 1).
    std::size_t transition_count() const { return weights_.size(); }
    std::size_t parameter_count() const;
    std::uint64_t seed() const { return seed_; }

    const std::vector<std::vector<float>>& weights() const { return weights_; }
    const std::vector<std::vector<float>>& biases() const { return biases_; }
    std::vector<std::vector<float>>& mutable_weights() { return weights_; }
    std::vector<std::vector<float>>& mutable_biases() { return biases_; }

    /// Output activations, each in (0, 1). Throws ShapeMismatch.
    std::vector<double> forward(std::span<const float> input) const;

    friend bool operator==(const Network&, const Network&) = default;

private:
    std::vector<std::size_t> layer_sizes_;
    std::vector<std::vector<float>> weights_;
    std::vector<std::vector<float>> biases_;
    std::uint64_t seed_;
};

/// Parameters drawn uniformly from [-0.5, 0.5] in layer order (weights row by
/// row, then biases). Throws BadShape unless 1 or 2 hidden layers are given
/// and every size is at least 1.
Network init_network(std::size_t input_size, std::span<const std::size_t> hidden_sizes, std::size_t output_size,
                     std::uint64_t seed);

/// Logistic function with the argument clamped to ±30 so the result stays
/// strictly inside (0, 1) in double precision.
double sigmoid(double x);

/// Online back-propagation with momentum over `samples` in their given order.
/// Mutates `net`; deterministic for fixed inputs.
TrainingReport train(Network& net, std::span<const TrainingSample> samples, const TrainingConfig& cfg);

/// Mean of (output - target)² over samples and output components.
double mean_squared_error(const Network& net, std::span<const TrainingSample> samples);

/// Copy of `net` with one more output neuron. Existing parameters are kept
/// bit-for-bit; the new weight row and bias come from `seed`.
Network add_output(const Network& net, std::uint64_t seed);

/// Gradient of the per-sample loss ½·Σ(output - target)² with respect to
/// every weight and bias, laid out like Network::weights()/biases().
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

Gradients analytic_gradients(const Network& net, std::span<const float> input, std::span<const double> target);
/// Central differences with step `epsilon`, evaluated on a double-precision
/// copy of the parameters.
Gradients numeric_gradients(const Network& net, std::span<const float> input, std::span<const double> target,
                            double epsilon);
/// max |a - n| / max(|a|, |n|, 1e-12) over all parameters.
double max_relative_error(const Gradients& analytic, const Gradients& numeric);
double gradient_check(const Network& net, std::span<const float> input, std::span<const double> target,
                      double epsilon = 1e-4);

} // namespace volclass
