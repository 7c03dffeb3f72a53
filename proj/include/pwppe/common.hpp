#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwppe {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { Config, Shape, Data, Numerical, Io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct ZeroModulationError : DataError {
  ZeroModulationError() : DataError("zero modulation: max equals min, vector cannot be normalized") {}
};

struct EmptyInputError : DataError {
  explicit EmptyInputError(const std::string& what) : DataError(what) {}
};

/// Malformed binary or text file; offset is the byte position where parsing failed.
struct FormatError : DataError {
  FormatError(const std::string& what, std::uint64_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset(offset) {}
  std::uint64_t offset;
};

struct VersionMismatchError : FormatError {
  VersionMismatchError(const std::string& what, std::uint32_t found, std::uint32_t expected)
      : FormatError(what + ": incompatible version " + std::to_string(found) + " (expected " +
                        std::to_string(expected) + ")",
                    4),
        found(found) {}
  std::uint32_t found;
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

struct DegenerateFitError : NumericalError {
  explicit DegenerateFitError(const std::string& what) : NumericalError("degenerate fit: " + what) {}
};

struct TrainingDivergedError : NumericalError {
  explicit TrainingDivergedError(std::size_t iteration)
      : NumericalError("training diverged at iteration " + std::to_string(iteration)),
        iteration(iteration) {}
  std::size_t iteration;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

int exit_code(ErrorKind kind) noexcept;

/// Wraps an angle into [-pi, pi); +pi maps to -pi.
inline double wrap_phase(double phi) noexcept {
  double w = std::remainder(phi, kTwoPi);  // in [-pi, pi]
  if (w >= kPi) w -= kTwoPi;
  if (w < -kPi) w += kTwoPi;
  return w;
}

/// Dense row-major 2-D array.
template <class T>
class Grid {
public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> row(std::size_t y) noexcept { return {data_.data() + y * width_, width_}; }
  std::span<const T> row(std::size_t y) const noexcept { return {data_.data() + y * width_, width_}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(std::size_t w, std::size_t h) const noexcept { return width_ == w && height_ == h; }
  template <class U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using Image = Grid<double>;
using Mask = Grid<std::uint8_t>;

}  // namespace pwppe
