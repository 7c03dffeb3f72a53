#include "pwppe/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace pwppe {

namespace {

std::optional<PixelEstimate> estimate(Evaluator& eval, std::span<const double> raw, bool accelerated) {
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (!(*hi > *lo)) return std::nullopt;
  const auto normalized = normalize(raw);
  if (!accelerated) {
    const auto out = eval(normalized);
    return PixelEstimate{wrap_phase(std::atan2(out.sin, out.cos)), std::hypot(out.sin, out.cos)};
  }
  const auto rotated = rotate_to_max(normalized, 0.0);
  const auto out = eval(rotated.input);
  const int n = static_cast<int>(raw.size());
  const double phase = std::atan2(out.sin, out.cos) - rotated.rotation * kTwoPi / n;
  return PixelEstimate{wrap_phase(phase), std::hypot(out.sin, out.cos)};
}

}  // namespace

std::optional<PixelEstimate> pwppe_pixel(const Network& net, std::span<const double> raw, bool accelerated) {
  Evaluator eval(net);
  return estimate(eval, raw, accelerated);
}

PwppeSolution pwppe_solve(const FringeStack& stack, const Network& net, const InferenceOptions& opts) {
  stack.validate();
  if (static_cast<std::size_t>(stack.n_steps()) != net.input_width())
    throw ShapeError("network expects " + std::to_string(net.input_width()) + " phase steps, stack has " +
                     std::to_string(stack.n_steps()));
  const std::size_t W = stack.width();
  const std::size_t H = stack.height();
  PwppeSolution sol{PhaseMap(W, H, PhaseKind::Wrapped), SelfTestMap{Image(W, H), Mask(W, H, 0)}};
  std::vector<double> raw(static_cast<std::size_t>(stack.n_steps()));
  Evaluator eval(net);
  for (std::size_t p = 0; p < W * H; ++p) {
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = stack.images[i][p];
    const auto est = estimate(eval, raw, opts.accelerated);
    if (!est) {
      sol.phase.mask[p] = 0;
      continue;
    }
    sol.phase.values[p] = est->phase;
    sol.self_test.values[p] = est->self_test;
    sol.self_test.mask[p] = 1;
    if (opts.self_test_threshold && std::abs(est->self_test - 1.0) > *opts.self_test_threshold)
      sol.phase.mask[p] = 0;
  }
  return sol;
}

std::vector<double> self_test_histogram(const SelfTestMap& map, const std::vector<double>& bands) {
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (!(bands[i] > 0.0)) throw ConfigError("self-test bands must be positive");
    if (i > 0 && !(bands[i] > bands[i - 1])) throw ConfigError("self-test bands must be ascending");
  }
  std::vector<double> deviations;
  for (std::size_t p = 0; p < map.values.size(); ++p)
    if (map.mask[p]) deviations.push_back(std::abs(map.values[p] - 1.0));
  if (deviations.empty()) throw EmptyInputError("self-test map has no valid pixels");
  std::sort(deviations.begin(), deviations.end());
  std::vector<double> proportions;
  for (double t : bands) {
    const auto inside = std::upper_bound(deviations.begin(), deviations.end(), t) - deviations.begin();
    proportions.push_back(double(inside) / double(deviations.size()));
  }
  return proportions;
}

void save_self_test_map(const std::string& path, const SelfTestMap& map) {
  PhaseMap container;
  container.values = map.values;
  container.mask = map.mask;
  container.kind = PhaseKind::SelfTest;
  save_phase_map(path, container);
}

SelfTestMap load_self_test_map(const std::string& path) {
  PhaseMap container = load_phase_map(path);
  if (container.kind != PhaseKind::SelfTest) throw FormatError(path + ": not a self-test map", 16);
  return {std::move(container.values), std::move(container.mask)};
}

}  // namespace pwppe
