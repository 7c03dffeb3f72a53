#pragma once

#include <string>

#include "pwppe/common.hpp"

namespace pwppe {

enum class PhaseKind : std::uint32_t { Wrapped = 0, Unwrapped = 1, SelfTest = 2 };

struct PhaseMap {
  Image values;
  PhaseKind kind = PhaseKind::Wrapped;
  Mask mask;  // 1 = valid

  PhaseMap() = default;
  PhaseMap(std::size_t width, std::size_t height, PhaseKind kind)
      : values(width, height, 0.0), kind(kind), mask(width, height, 1) {}

  std::size_t width() const noexcept { return values.width(); }
  std::size_t height() const noexcept { return values.height(); }
  bool valid(std::size_t x, std::size_t y) const noexcept { return mask(x, y) != 0; }
  std::size_t valid_count() const noexcept;
};

// Container: 24-byte header ("PMAP", version, width, height, kind, reserved)
// followed by little-endian float64 values; mask goes to "<path>.mask.pgm".
void save_phase_map(const std::string& path, const PhaseMap& map);
PhaseMap load_phase_map(const std::string& path);
std::string mask_path_for(const std::string& path);

}  // namespace pwppe
