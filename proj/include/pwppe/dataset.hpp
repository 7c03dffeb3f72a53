#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pwppe/fringe_synth.hpp"
#include "pwppe/phase_map.hpp"

namespace pwppe {

enum class DatasetMode { Plain, Augmented, Accelerated };

std::string to_string(DatasetMode mode);
DatasetMode parse_dataset_mode(const std::string& name);

struct SampleOrigin {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  // 0..N-1: rotation by i; N..2N-1: reversal with offset i - N; accelerated: rotation j.
  std::int32_t aug_id = 0;
};

struct PixelSample {
  std::vector<double> input;
  double target_sin = 0.0;
  double target_cos = 1.0;
  SampleOrigin origin;
};

struct Dataset {
  int n_steps = 0;
  DatasetMode mode = DatasetMode::Plain;
  std::uint64_t seed = 0;
  std::vector<PixelSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

struct TargetPair {
  double sin = 0.0;
  double cos = 1.0;
};

/// Maps the vector's extremes to -1 and +1; throws ZeroModulationError when max == min.
std::vector<double> normalize(std::span<const double> d);

struct LabelledVector {
  std::vector<double> input;
  double phase = 0.0;
};

/// N cyclic rotations then N reversals, labels compensated so that PWLS on each
/// transformed vector reproduces its label.
std::vector<LabelledVector> augment(std::span<const double> d, double truth_phase);

/// Rotation that moves the first maximum into the zero-shift slot (the last one, shift 2*pi).
struct Acceleration {
  std::vector<double> input;
  double phase = 0.0;
  int rotation = 0;  // j, 1-based index of the maximum
};
Acceleration rotate_to_max(std::span<const double> d, double truth_phase);

/// Cyclic left rotation: out[k] = d[(k + shift) mod N].
std::vector<double> rotate_left(std::span<const double> d, int shift);

TargetPair encode_target(double phase) noexcept;

struct BuildOptions {
  DatasetMode mode = DatasetMode::Augmented;
  double sample_fraction = 0.01;  // of the training pool
  double train_fraction = 0.5;   // of valid pixels
  std::uint64_t seed = 1;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Augmentation is applied to the training pool only; accelerated mode rotates both sides.
DatasetSplit build_dataset(const FringeStack& stack, const PhaseMap& truth, const BuildOptions& opts);

/// Header lines, a blank line, then little-endian float64 records
/// [input x N, sin, cos, x, y, aug_id].
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);
void export_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace pwppe
