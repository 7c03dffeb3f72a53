#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pwppe/dataset.hpp"

namespace pwppe {

/// F(x) = 2 / (1 + exp(-2x)) - 1, evaluated without overflow for any finite x.
double activation(double x) noexcept;

/// Derivative expressed through the activation value: F' = 1 - F^2.
inline double activation_slope(double fx) noexcept { return 1.0 - fx * fx; }

struct Layer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> biases;   // outputs

  Layer() = default;
  Layer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), biases(out, 0.0) {}

  double& w(std::size_t o, std::size_t i) noexcept { return weights[o * inputs + i]; }
  double w(std::size_t o, std::size_t i) const noexcept { return weights[o * inputs + i]; }
};

struct NetOutput {
  double sin = 0.0;
  double cos = 0.0;
};

/// Fully connected network; every layer, the output layer included, uses the activation.
class Network {
public:
  Network() = default;
  explicit Network(std::vector<std::size_t> layer_dims);

  /// N inputs, three hidden layers of twelve, two outputs.
  static Network standard(std::size_t n_inputs) { return Network({n_inputs, 12, 12, 12, 2}); }

  /// Uniform Glorot initialisation in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  void initialize(std::uint64_t seed);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t input_width() const noexcept { return dims_.front(); }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t parameter_count() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Network& a, const Network& b) {
    if (a.dims_ != b.dims_) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l)
      if (a.layers_[l].weights != b.layers_[l].weights || a.layers_[l].biases != b.layers_[l].biases) return false;
    return true;
  }

private:
  std::vector<std::size_t> dims_;
  std::vector<Layer> layers_;
};

NetOutput forward(const Network& net, std::span<const double> input);

/// Reusable forward pass over one network; avoids per-call allocation in pixel loops.
class Evaluator {
public:
  explicit Evaluator(const Network& net);
  ~Evaluator();
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  NetOutput operator()(std::span<const double> input);

private:
  struct State;
  const Network& net_;
  std::unique_ptr<State> state_;
};

/// Gradients with the same layout as the network parameters.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  explicit Gradients(const Network& net);
  void zero();
};

/// Gradient of 0.5 * ((O_s - t_s)^2 + (O_c - t_c)^2) for one sample, added into `grads`.
/// Returns that loss value.
double accumulate_gradients(const Network& net, std::span<const double> input, TargetPair target,
                            Gradients& grads);

Gradients backward(const Network& net, std::span<const double> input, TargetPair target);

/// Mean over samples and both outputs of the squared error.
double mean_squared_error(const Network& net, const Dataset& data);

enum class Optimizer { Sgd, Momentum, Adam };
std::string to_string(Optimizer opt);
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
  std::size_t iterations = 10000;  // full passes over the training set
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::Adam;
  double target_mse = 5e-4;
  double momentum = 0.9;  // Momentum optimizer only

  void validate() const;
};

struct TrainResult {
  Network net;
  std::vector<double> loss_history;  // training MSE after each pass
};

TrainResult train(const Dataset& data, const TrainConfig& cfg);

/// Weight file: "PWNN", version, layer count, dims, then float64 weights and biases per layer.
void save_weights(const std::string& path, const Network& net);
Network load_weights(const std::string& path);
std::vector<char> serialize_weights(const Network& net);
Network deserialize_weights(std::vector<char> bytes, const std::string& source);

}  // namespace pwppe
