#include "pwppe/neural_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "pwppe/binary_io.hpp"

namespace pwppe {

double activation(double x) noexcept {
  // (1 - e^{-2|x|}) / (1 + e^{-2|x|}); e^{-2|x|} never overflows. Near zero the
  // subtraction cancels, so expm1 takes over there.
  const double ax = std::abs(x);
  if (ax < 0.25) {
    const double e = std::expm1(-2.0 * ax);
    return std::copysign(-e / (2.0 + e), x);
  }
  const double e = std::exp(-2.0 * ax);
  return std::copysign((1.0 - e) / (1.0 + e), x);
}

Network::Network(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ShapeError("network needs at least an input and an output layer");
  if (dims_.back() != 2) throw ShapeError("network must have two outputs (sin, cos)");
  for (auto d : dims_)
    if (d == 0) throw ShapeError("network layer widths must be positive");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) layers_.emplace_back(dims_[l], dims_[l + 1]);
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / double(layer.inputs + layer.outputs));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : layer.weights) w = dist(rng);
    std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
  }
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

bool Network::all_finite() const noexcept {
  const auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers_.begin(), layers_.end(), [&](const Layer& l) {
    return std::all_of(l.weights.begin(), l.weights.end(), finite) &&
           std::all_of(l.biases.begin(), l.biases.end(), finite);
  });
}

namespace {

// Per-layer activations (index 0 is the input) and back-propagated deltas.
struct Workspace {
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> delta;

  explicit Workspace(const Network& net) {
    for (auto d : net.layer_dims()) act.emplace_back(d, 0.0);
    for (std::size_t l = 1; l < net.layer_dims().size(); ++l) delta.emplace_back(net.layer_dims()[l], 0.0);
  }
};

void check_input(const Network& net, std::span<const double> input) {
  if (input.size() != net.input_width())
    throw ShapeError("network expects " + std::to_string(net.input_width()) + " inputs, got " +
                     std::to_string(input.size()));
}

void run_forward(const Network& net, std::span<const double> input, Workspace& ws) {
  std::copy(input.begin(), input.end(), ws.act[0].begin());
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const double* in = ws.act[l].data();
    double* out = ws.act[l + 1].data();
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weights.data() + o * layer.inputs;
      double z = layer.biases[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
      out[o] = activation(z);
    }
  }
}

double run_backward(const Network& net, std::span<const double> input, TargetPair target, Workspace& ws,
                    Gradients& grads) {
  run_forward(net, input, ws);
  const auto& layers = net.layers();
  const std::size_t L = layers.size();
  const auto& out = ws.act[L];
  const double es = out[0] - target.sin;
  const double ec = out[1] - target.cos;
  ws.delta[L - 1][0] = es * activation_slope(out[0]);
  ws.delta[L - 1][1] = ec * activation_slope(out[1]);

  for (std::size_t l = L; l-- > 0;) {
    const Layer& layer = layers[l];
    const auto& delta = ws.delta[l];
    const auto& in = ws.act[l];
    auto& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      gb[o] += delta[o];
      double* g = gw.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) g[i] += delta[o] * in[i];
    }
    if (l == 0) break;
    auto& prev = ws.delta[l - 1];
    for (std::size_t i = 0; i < layer.inputs; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < layer.outputs; ++o) s += layer.w(o, i) * delta[o];
      prev[i] = s * activation_slope(in[i]);
    }
  }
  return 0.5 * (es * es + ec * ec);
}

double sample_loss(const Network& net, const PixelSample& s, Workspace& ws) {
  run_forward(net, s.input, ws);
  const auto& out = ws.act.back();
  const double es = out[0] - s.target_sin;
  const double ec = out[1] - s.target_cos;
  return 0.5 * (es * es + ec * ec);
}

}  // namespace

NetOutput forward(const Network& net, std::span<const double> input) {
  check_input(net, input);
  Workspace ws(net);
  run_forward(net, input, ws);
  return {ws.act.back()[0], ws.act.back()[1]};
}

struct Evaluator::State {
  Workspace ws;
};

Evaluator::Evaluator(const Network& net) : net_(net), state_(std::make_unique<State>(State{Workspace(net)})) {}
Evaluator::~Evaluator() = default;

NetOutput Evaluator::operator()(std::span<const double> input) {
  check_input(net_, input);
  run_forward(net_, input, state_->ws);
  return {state_->ws.act.back()[0], state_->ws.act.back()[1]};
}

Gradients::Gradients(const Network& net) {
  for (const auto& l : net.layers()) {
    weights.emplace_back(l.weights.size(), 0.0);
    biases.emplace_back(l.biases.size(), 0.0);
  }
}

void Gradients::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

double accumulate_gradients(const Network& net, std::span<const double> input, TargetPair target,
                            Gradients& grads) {
  check_input(net, input);
  Workspace ws(net);
  return run_backward(net, input, target, ws, grads);
}

Gradients backward(const Network& net, std::span<const double> input, TargetPair target) {
  Gradients g(net);
  accumulate_gradients(net, input, target, g);
  return g;
}

double mean_squared_error(const Network& net, const Dataset& data) {
  if (data.empty()) throw EmptyInputError("mean_squared_error on an empty dataset");
  Workspace ws(net);
  double total = 0.0;
  for (const auto& s : data.samples) {
    check_input(net, s.input);
    total += sample_loss(net, s, ws);
  }
  // per-sample loss is already the mean over the two outputs
  return total / double(data.size());
}

std::string to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::Sgd: return "sgd";
    case Optimizer::Momentum: return "momentum";
    case Optimizer::Adam: return "adam";
  }
  return "adam";
}

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "momentum") return Optimizer::Momentum;
  if (name == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd, momentum or adam)");
}

void TrainConfig::validate() const {
  if (iterations == 0) throw ConfigError("train iterations must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be > 0");
  if (!(target_mse >= 0.0)) throw ConfigError("target_mse must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

namespace {

class ParameterUpdater {
public:
  ParameterUpdater(const Network& net, const TrainConfig& cfg) : cfg_(cfg), first_(net), second_(net) {}

  void apply(Network& net, const Gradients& g, double scale) {
    ++step_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, double(step_));
    const double c2 = 1.0 - std::pow(b2, double(step_));
    const double lr = cfg_.learning_rate;
    auto update = [&](std::vector<double>& p, const std::vector<double>& grad, std::vector<double>& m,
                      std::vector<double>& v) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double gk = grad[k] * scale;
        switch (cfg_.optimizer) {
          case Optimizer::Sgd:
            p[k] -= lr * gk;
            break;
          case Optimizer::Momentum:
            m[k] = cfg_.momentum * m[k] + gk;
            p[k] -= lr * m[k];
            break;
          case Optimizer::Adam:
            m[k] = b1 * m[k] + (1.0 - b1) * gk;
            v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
            break;
        }
      }
    };
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weights, g.weights[l], first_.weights[l], second_.weights[l]);
      update(layers[l].biases, g.biases[l], first_.biases[l], second_.biases[l]);
    }
  }

private:
  const TrainConfig& cfg_;
  Gradients first_;
  Gradients second_;
  std::uint64_t step_ = 0;
};

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw EmptyInputError("cannot train on an empty dataset");

  TrainResult result{Network::standard(static_cast<std::size_t>(data.n_steps)), {}};
  Network& net = result.net;
  net.initialize(cfg.seed);
  for (const auto& s : data.samples) check_input(net, s.input);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Workspace ws(net);
  Gradients grads(net);
  ParameterUpdater updater(net, cfg);

  for (std::size_t epoch = 0; epoch < cfg.iterations; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      grads.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = data.samples[order[k]];
        run_backward(net, s.input, {s.target_sin, s.target_cos}, ws, grads);
      }
      updater.apply(net, grads, 1.0 / double(stop - start));
    }
    double mse = 0.0;
    for (const auto& s : data.samples) mse += sample_loss(net, s, ws);
    mse /= double(data.size());
    if (!std::isfinite(mse) || !net.all_finite()) throw TrainingDivergedError(epoch + 1);
    result.loss_history.push_back(mse);
    if (mse <= cfg.target_mse) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// weight files

namespace {
constexpr std::array<char, 4> kWeightMagic{'P', 'W', 'N', 'N'};
constexpr std::uint32_t kWeightVersion = 1;
}  // namespace

std::vector<char> serialize_weights(const Network& net) {
  ByteWriter w;
  w.bytes(kWeightMagic.data(), kWeightMagic.size());
  w.u32(kWeightVersion);
  w.u32(static_cast<std::uint32_t>(net.layer_dims().size()));
  for (auto d : net.layer_dims()) w.u32(static_cast<std::uint32_t>(d));
  for (const auto& l : net.layers()) {
    for (double v : l.weights) w.f64(v);
    for (double v : l.biases) w.f64(v);
  }
  return w.buffer();
}

Network deserialize_weights(std::vector<char> bytes, const std::string& source) {
  ByteReader r(std::move(bytes), source);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kWeightMagic) throw FormatError(source + ": bad weight-file magic", 0);
  const std::uint32_t version = r.u32();
  if (version != kWeightVersion) throw VersionMismatchError(source, version, kWeightVersion);
  const std::uint32_t count = r.u32();
  if (count < 2 || count > 64) throw FormatError(source + ": implausible layer count", 8);
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto offset = r.offset();
    const std::uint32_t d = r.u32();
    if (d == 0 || d > 4096) throw FormatError(source + ": implausible layer width", offset);
    dims.push_back(d);
  }
  Network net;
  try {
    net = Network(dims);
  } catch (const ShapeError& e) {
    throw FormatError(source + ": " + e.what(), 12);
  }
  for (auto& l : net.layers()) {
    for (auto& v : l.weights) v = r.f64();
    for (auto& v : l.biases) v = r.f64();
  }
  if (!r.at_end()) throw FormatError(source + ": trailing bytes after weights", r.offset());
  return net;
}

void save_weights(const std::string& path, const Network& net) { write_file_bytes(path, serialize_weights(net)); }

Network load_weights(const std::string& path) { return deserialize_weights(read_file_bytes(path), path); }

}  // namespace pwppe
