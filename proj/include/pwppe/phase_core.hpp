#pragma once

#include <span>

#include "pwppe/fringe_synth.hpp"
#include "pwppe/phase_map.hpp"

namespace pwppe {

/// Pixels whose sine and cosine sums both fall below this magnitude carry no phase.
inline constexpr double kModulationEpsilon = 1e-6;

struct PlaneFit {
  double a = 0.0;  // rad / pixel along x
  double b = 0.0;  // rad / pixel along y
  double c = 0.0;  // rad
  double rms_residual = 0.0;

  double operator()(double x, double y) const noexcept { return a * x + b * y + c; }
};

/// Least-squares phase of one pixel's N samples with shifts 2*pi*i/N, i = 1..N.
/// Returns nullopt when the pixel has no modulation.
std::optional<double> pwls_phase(std::span<const double> samples);

PhaseMap pwls_solve(const FringeStack& stack);

/// Row-wise Itoh unwrapping followed by 2*pi alignment of each row to the row above.
PhaseMap unwrap_rows(const PhaseMap& wrapped);

PlaneFit fit_plane(const PhaseMap& unwrapped);

PhaseMap evaluate_plane(const PlaneFit& plane, const Mask& mask);

PhaseMap rewrap(const PhaseMap& unwrapped);

/// pwls_solve -> unwrap_rows -> fit_plane -> evaluate -> rewrap: smoothed wrapped labels.
PhaseMap make_ground_truth(const FringeStack& stack);

}  // namespace pwppe
