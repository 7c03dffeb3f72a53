#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pwppe/common.hpp"
#include "pwppe/keyvalue.hpp"
#include "pwppe/phase_map.hpp"

namespace pwppe {

struct Harmonic {
  int order = 0;
  double amplitude = 0.0;  // relative to the fundamental modulation B
};

/// Ground-truth unwrapped phase Phi(x, y) = a*x + b*y + c, radians.
struct PhasePlane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double x, double y) const noexcept { return a * x + b * y + c; }
};

/// Gaussian blur std-dev, linearly interpolated from the first to the last column.
struct DefocusProfile {
  double left = 0.0;
  double right = 0.0;

  double at(std::size_t column, std::size_t width) const noexcept;
};

/// Synthetic calibration-plane scene.
struct SceneSpec {
  std::size_t width = 512;
  std::size_t height = 512;
  double period = 32.0;  // camera pixels per fringe
  int n_steps = 6;
  PhasePlane phase_plane{kTwoPi / 32.0, 0.003, 0.3};
  DefocusProfile defocus{0.5, 4.0};
  double noise_sigma = 0.01;
  double background = 0.5;  // A
  double modulation = 0.45;  // B
  std::vector<Harmonic> harmonics;
  int seam_gap = 0;  // dark camera columns at each projector-pixel boundary; 0 disables
  double projector_pitch = 4.0;  // camera pixels per projector pixel, used by seams
  bool quantize_8bit = false;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  /// Carrier along x with the given period; b and c as supplied.
  static PhasePlane carrier(double period, double tilt_y = 0.0, double offset = 0.0) {
    return {kTwoPi / period, tilt_y, offset};
  }
};

struct FringeStack {
  std::vector<Image> images;
  std::vector<double> shifts;  // theta_i = 2*pi*i/N, i = 1..N
  std::optional<SceneSpec> scene;
  std::uint64_t seed = 0;

  int n_steps() const noexcept { return static_cast<int>(images.size()); }
  std::size_t width() const noexcept { return images.empty() ? 0 : images.front().width(); }
  std::size_t height() const noexcept { return images.empty() ? 0 : images.front().height(); }

  /// Checks equal dimensions and the 2*pi/N shift spacing; throws ShapeError.
  void validate() const;
};

std::vector<double> standard_shifts(int n_steps);

FringeStack synth_sinusoidal(const SceneSpec& scene, std::uint64_t seed);
FringeStack synth_binary_defocused(const SceneSpec& scene, std::uint64_t seed);

struct AnalyticTruth {
  PhaseMap wrapped;
  PhaseMap unwrapped;
};

AnalyticTruth ground_truth_phase(const SceneSpec& scene);

/// Scene fields as `<prefix>field` keys; absent keys keep the values in `defaults`.
void write_scene(KeyValues& kv, const SceneSpec& scene, const std::string& prefix);
SceneSpec read_scene(const KeyValues& kv, const std::string& prefix, SceneSpec defaults = {});
std::vector<std::string> scene_keys(const std::string& prefix);

// Stack directory: step_01.pgm ... step_NN.pgm plus stack.meta.
void save_stack(const std::string& dir, const FringeStack& stack);
FringeStack load_stack(const std::string& dir);

}  // namespace pwppe
