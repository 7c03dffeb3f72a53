#include "pwppe/phase_core.hpp"

#include <cmath>
#include <vector>

namespace pwppe {
namespace {

struct ShiftTable {
  std::vector<double> sin;
  std::vector<double> cos;
};

ShiftTable shift_table(std::size_t n) {
  ShiftTable t{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = kTwoPi * double(i + 1) / double(n);
    t.sin[i] = std::sin(theta);
    t.cos[i] = std::cos(theta);
  }
  return t;
}

std::optional<double> pwls_with_table(std::span<const double> samples, const ShiftTable& t) {
  double s = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    s += samples[i] * t.sin[i];
    c += samples[i] * t.cos[i];
  }
  if (std::abs(s) < kModulationEpsilon && std::abs(c) < kModulationEpsilon) return std::nullopt;
  return wrap_phase(-std::atan2(s, c));
}

void require_steps(std::size_t n) {
  if (n < 4)
    throw ConfigError("unsupported configuration: phase shifting needs at least 4 steps, got " +
                      std::to_string(n));
}

}  // namespace

std::optional<double> pwls_phase(std::span<const double> samples) {
  require_steps(samples.size());
  return pwls_with_table(samples, shift_table(samples.size()));
}

PhaseMap pwls_solve(const FringeStack& stack) {
  require_steps(stack.images.size());
  stack.validate();
  const std::size_t n = stack.images.size();
  const auto table = shift_table(n);
  PhaseMap out(stack.width(), stack.height(), PhaseKind::Wrapped);
  std::vector<double> samples(n);
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i) samples[i] = stack.images[i][p];
    const auto phi = pwls_with_table(samples, table);
    out.values[p] = phi.value_or(0.0);
    out.mask[p] = phi.has_value() ? 1 : 0;
  }
  return out;
}

PhaseMap unwrap_rows(const PhaseMap& wrapped) {
  if (wrapped.kind != PhaseKind::Wrapped) throw ShapeError("unwrap_rows expects a wrapped phase map");
  PhaseMap out = wrapped;
  out.kind = PhaseKind::Unwrapped;
  const std::size_t W = wrapped.width();
  const std::size_t H = wrapped.height();

  long reference_row = -1;
  for (std::size_t y = 0; y < H; ++y) {
    std::size_t valid = 0;
    long prev = -1;
    for (std::size_t x = 0; x < W; ++x) {
      if (!wrapped.valid(x, y)) continue;
      ++valid;
      if (prev >= 0) {
        const double step = wrap_phase(wrapped.values(x, y) - wrapped.values(std::size_t(prev), y));
        out.values(x, y) = out.values(std::size_t(prev), y) + step;
      }
      prev = static_cast<long>(x);
    }
    if (valid < 2) {
      for (std::size_t x = 0; x < W; ++x) out.mask(x, y) = 0;
      continue;
    }
    if (reference_row >= 0) {
      const auto ry = static_cast<std::size_t>(reference_row);
      long col = -1;
      for (std::size_t x = 0; x < W && col < 0; ++x)
        if (out.valid(x, y) && out.valid(x, ry)) col = static_cast<long>(x);
      double here = 0.0;
      double there = 0.0;
      if (col >= 0) {
        here = out.values(std::size_t(col), y);
        there = out.values(std::size_t(col), ry);
      } else {
        for (std::size_t x = 0; x < W; ++x)
          if (out.valid(x, y)) { here = out.values(x, y); break; }
        for (std::size_t x = 0; x < W; ++x)
          if (out.valid(x, ry)) { there = out.values(x, ry); break; }
      }
      const double k = std::round((there - here) / kTwoPi);
      if (k != 0.0)
        for (std::size_t x = 0; x < W; ++x)
          if (out.valid(x, y)) out.values(x, y) += k * kTwoPi;
    }
    reference_row = static_cast<long>(y);
  }
  return out;
}

PlaneFit fit_plane(const PhaseMap& map) {
  if (map.kind != PhaseKind::Unwrapped) throw ShapeError("fit_plane expects an unwrapped phase map");
  const std::size_t W = map.width();
  const std::size_t H = map.height();

  std::size_t n = 0;
  double mx = 0.0, my = 0.0, mz = 0.0;
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      if (map.valid(x, y)) {
        ++n;
        mx += double(x);
        my += double(y);
        mz += map.values(x, y);
      }
  if (n < 3) throw DegenerateFitError("fewer than 3 valid pixels");
  mx /= double(n);
  my /= double(n);
  mz /= double(n);

  // centred normal equations; the offset decouples from the slopes
  double sxx = 0.0, sxy = 0.0, syy = 0.0, sxz = 0.0, syz = 0.0;
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      if (map.valid(x, y)) {
        const double dx = double(x) - mx;
        const double dy = double(y) - my;
        const double dz = map.values(x, y) - mz;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
      }
  const double det = sxx * syy - sxy * sxy;
  if (!(det > 1e-10 * sxx * syy) || sxx <= 0.0 || syy <= 0.0)
    throw DegenerateFitError("valid pixels are collinear");

  PlaneFit fit;
  fit.a = (sxz * syy - syz * sxy) / det;
  fit.b = (syz * sxx - sxz * sxy) / det;
  fit.c = mz - fit.a * mx - fit.b * my;

  double ss = 0.0;
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      if (map.valid(x, y)) {
        const double r = map.values(x, y) - fit(double(x), double(y));
        ss += r * r;
      }
  fit.rms_residual = std::sqrt(ss / double(n));
  return fit;
}

PhaseMap evaluate_plane(const PlaneFit& plane, const Mask& mask) {
  PhaseMap out(mask.width(), mask.height(), PhaseKind::Unwrapped);
  out.mask = mask;
  for (std::size_t y = 0; y < mask.height(); ++y)
    for (std::size_t x = 0; x < mask.width(); ++x) out.values(x, y) = plane(double(x), double(y));
  return out;
}

PhaseMap rewrap(const PhaseMap& map) {
  PhaseMap out = map;
  out.kind = PhaseKind::Wrapped;
  for (auto& v : out.values.data()) v = wrap_phase(v);
  return out;
}

PhaseMap make_ground_truth(const FringeStack& stack) {
  const PhaseMap unwrapped = unwrap_rows(pwls_solve(stack));
  const PlaneFit plane = fit_plane(unwrapped);
  return rewrap(evaluate_plane(plane, unwrapped.mask));
}

}  // namespace pwppe
