#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pwppe/estimator.hpp"
#include "pwppe/fringe_synth.hpp"
#include "pwppe/neural_net.hpp"
#include "pwppe/phase_map.hpp"

namespace pwppe {

enum class Method { Pwls, Pwppe };
std::string to_string(Method m);

/// Wrapped difference estimate - truth in [-pi, pi); masked where either input is invalid.
PhaseMap phase_error(const PhaseMap& estimate, const PhaseMap& truth);

struct ErrorStats {
  double mse = 0.0;  // rad^2
  double rms = 0.0;  // rad
  double max_abs = 0.0;
  std::size_t count = 0;
};
ErrorStats error_stats(const PhaseMap& error);

/// Amplitude of the row's error spectrum at `harmonic` times the fringe frequency, divided by the
/// median amplitude of the non-DC half spectrum. Invalid pixels contribute zero after mean removal.
double spectral_peak(const PhaseMap& error, std::size_t row, double fringe_period, int harmonic = 6);

struct EvalReport {
  Method method = Method::Pwls;
  double mse = 0.0;
  double rms = 0.0;
  double max_abs = 0.0;
  double output_mse = 0.0;  // mean squared (sin, cos) error against the encoded truth
  std::size_t valid_pixels = 0;
  std::size_t profile_row = 0;
  double spectrum_peak_at_6f = 0.0;
  std::vector<double> selftest_bands;  // PWPPE only
  PhaseMap error;
  std::optional<SelfTestMap> self_test;

  std::vector<double> row_profile() const;  // NaN at invalid pixels
};

struct ReportPair {
  EvalReport pwls;
  EvalReport pwppe;
};

struct CompareOptions {
  bool accelerated = false;
  std::optional<std::size_t> profile_row;  // default: middle row
  double fringe_period = 0.0;              // 0: take it from the stack's scene
  std::vector<double> bands{0.01, 0.05, 0.1, 0.12};
};

ReportPair compare(const FringeStack& stack, const PhaseMap& truth, const Network& net,
                   const CompareOptions& opts = {});

enum class SynthMode { Sinusoidal, BinaryDefocused };
std::string to_string(SynthMode m);
SynthMode parse_synth_mode(const std::string& name);
FringeStack synthesize(const SceneSpec& scene, SynthMode mode, std::uint64_t seed);

struct SceneVariation {
  std::string name;
  std::function<SceneSpec(const SceneSpec&)> apply;
};

/// identity, focus shift, two plate poses, halved exposure.
std::vector<SceneVariation> standard_variations();
SceneVariation variation_by_name(const std::string& name);

struct SweepEntry {
  std::string name;
  SceneSpec scene;
  ReportPair reports;
};

struct SweepOptions {
  SynthMode synth = SynthMode::BinaryDefocused;
  std::uint64_t seed = 7;
  CompareOptions compare;
};

/// Each variation is synthesized and scored against its analytic truth with the same network.
std::vector<SweepEntry> generalization_sweep(const SceneSpec& base, const std::vector<SceneVariation>& variations,
                                             const Network& net, const SweepOptions& opts = {});

struct NamedReport {
  std::string scene;
  ReportPair reports;
};

/// table1.csv covers every entry; table2.csv, row_profile.csv and the error maps use the first.
void emit(const std::vector<NamedReport>& reports, const std::string& out_dir);
void emit(const ReportPair& pair, const std::string& out_dir);

}  // namespace pwppe
