#pragma once

#include <optional>
#include <vector>

#include "pwppe/dataset.hpp"
#include "pwppe/fringe_synth.hpp"
#include "pwppe/neural_net.hpp"
#include "pwppe/phase_map.hpp"

namespace pwppe {

/// Per-pixel sqrt(O_s^2 + O_c^2); ideally 1.
struct SelfTestMap {
  Image values;
  Mask mask;
};

struct InferenceOptions {
  // Accelerated networks see rotate-to-max inputs; the rotation is undone on the decoded phase.
  bool accelerated = false;
  // When set, pixels with |self-test - 1| above this are masked in the phase output.
  std::optional<double> self_test_threshold;
};

struct PwppeSolution {
  PhaseMap phase;
  SelfTestMap self_test;
};

/// Phase of one raw intensity vector; nullopt when it has no modulation.
struct PixelEstimate {
  double phase = 0.0;
  double self_test = 0.0;
};
std::optional<PixelEstimate> pwppe_pixel(const Network& net, std::span<const double> raw, bool accelerated);

PwppeSolution pwppe_solve(const FringeStack& stack, const Network& net, const InferenceOptions& opts = {});

/// Fraction of valid pixels with |value - 1| <= t, for each tolerance t.
std::vector<double> self_test_histogram(const SelfTestMap& map, const std::vector<double>& bands);

void save_self_test_map(const std::string& path, const SelfTestMap& map);
SelfTestMap load_self_test_map(const std::string& path);

}  // namespace pwppe
