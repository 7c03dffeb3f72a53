#pragma once

// Test-only oracles and fixtures. Nothing here calls into the code under test.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testkit {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Samples A + B cos(phase + 2 pi i / n), i = 1..n.
inline std::vector<double> sinusoid(double phase, int n, double A = 0.5, double B = 0.4) {
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) d[i - 1] = A + B * std::cos(phase + kTwoPi * i / n);
  return d;
}

/// Angular distance in [0, pi].
inline double angle_between(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

/// Solves the 3x3 system by Gaussian elimination with partial pivoting.
inline std::optional<std::array<double, 3>> solve3(std::array<std::array<double, 4>, 3> m) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-14) return std::nullopt;
    std::swap(m[c], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return std::array<double, 3>{m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

/// Least-squares fit of I_i = A + C cos(theta_i) - S sin(theta_i) through the normal equations,
/// with (C, S) = B (cos phi, sin phi); returns phi.
inline std::optional<double> brute_force_phase(const std::vector<double>& samples) {
  const int n = static_cast<int>(samples.size());
  std::array<std::array<double, 4>, 3> m{};
  for (int i = 1; i <= n; ++i) {
    const double t = kTwoPi * i / n;
    const std::array<double, 3> basis{1.0, std::cos(t), -std::sin(t)};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
      m[r][3] += basis[r] * samples[i - 1];
    }
  }
  const auto sol = solve3(m);
  if (!sol) return std::nullopt;
  return std::atan2((*sol)[2], (*sol)[1]);
}

/// Plain O(n^2) DFT magnitude |X_k| for k = 0..n-1.
inline std::vector<double> dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mag(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -kTwoPi * double(k) * double(t) / double(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    mag[k] = std::abs(acc);
  }
  return mag;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pwppe_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace testkit
