#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "pwppe/binary_io.hpp"
#include "pwppe/fringe_synth.hpp"
#include "pwppe/phase_core.hpp"
#include "support.hpp"

using namespace pwppe;

namespace {

PhaseMap wrapped_map(std::size_t w, std::size_t h, auto&& f) {
  PhaseMap m(w, h, PhaseKind::Wrapped);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) m.values(x, y) = wrap_phase(f(double(x), double(y)));
  return m;
}

PhaseMap unwrapped_map(std::size_t w, std::size_t h, auto&& f) {
  PhaseMap m(w, h, PhaseKind::Unwrapped);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) m.values(x, y) = f(double(x), double(y));
  return m;
}

// Magnitude of the row-averaged error spectrum at `bin`, error = map - plane.
double error_energy_at(const PhaseMap& map, const PhasePlane& plane, std::size_t bin) {
  double total = 0.0;
  for (std::size_t y = 0; y < map.height(); ++y) {
    std::vector<double> row(map.width());
    double mean = 0.0;
    for (std::size_t x = 0; x < map.width(); ++x) {
      row[x] = wrap_phase(map.values(x, y) - plane(double(x), double(y)));
      mean += row[x];
    }
    mean /= double(row.size());
    for (auto& v : row) v -= mean;
    const double m = testkit::dft_magnitude(row)[bin];
    total += m * m;
  }
  return total;
}

}  // namespace

TEST_CASE("least-squares phase of single pixels") {
  CHECK(std::abs(*pwls_phase(testkit::sinusoid(0.0, 6))) <= 1e-12);
  CHECK(*pwls_phase(testkit::sinusoid(kPi / 3, 6)) == doctest::Approx(kPi / 3).epsilon(1e-12));
  CHECK_FALSE(pwls_phase(std::vector<double>(6, 0.42)).has_value());
  CHECK_THROWS_AS(pwls_phase(std::vector<double>{0.1, 0.5, 0.9}), ConfigError);
}

TEST_CASE("PWLS equals a brute-force three-parameter fit") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n : {4, 5, 6, 8, 12}) {
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> d(static_cast<std::size_t>(n));
      for (auto& v : d) v = u(rng);
      const auto fast = pwls_phase(d);
      const auto slow = testkit::brute_force_phase(d);
      REQUIRE(fast.has_value());
      REQUIRE(slow.has_value());
      CHECK(testkit::angle_between(*fast, *slow) <= 1e-9);
    }
  }
}

TEST_CASE("PWLS ignores affine intensity changes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> d(6), e(6);
    for (auto& v : d) v = u(rng);
    const double s = 0.01 + 10.0 * u(rng);
    const double t = 5.0 * (u(rng) - 0.5);
    for (int i = 0; i < 6; ++i) e[i] = s * d[i] + t;
    CHECK(testkit::angle_between(*pwls_phase(d), *pwls_phase(e)) <= 1e-12);
  }
}

TEST_CASE("clean sinusoid stacks decode exactly") {
  SceneSpec s;
  s.width = 96;
  s.height = 16;
  s.noise_sigma = 0.0;
  const PhaseMap est = pwls_solve(synth_sinusoidal(s, 0));
  const AnalyticTruth t = ground_truth_phase(s);
  for (std::size_t p = 0; p < est.values.size(); ++p) {
    REQUIRE(est.mask[p]);
    CHECK(testkit::angle_between(est.values[p], t.wrapped.values[p]) <= 1e-10);
    CHECK(est.values[p] >= -kPi);
    CHECK(est.values[p] < kPi);
  }
}

TEST_CASE("zero-modulation pixels are masked") {
  SceneSpec s;
  s.width = 16;
  s.height = 4;
  s.modulation = 0.0;
  s.noise_sigma = 0.0;
  CHECK(pwls_solve(synth_sinusoidal(s, 0)).valid_count() == 0);
}

TEST_CASE("row unwrapping") {
  const double a = kTwoPi / 32.0;
  SUBCASE("ramp recovers the plane") {
    const PhaseMap u = unwrap_rows(wrapped_map(64, 3, [&](double x, double) { return a * x; }));
    CHECK(u.kind == PhaseKind::Unwrapped);
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 64; ++x) CHECK(u.values(x, y) == doctest::Approx(a * double(x)).epsilon(1e-9));
  }
  SUBCASE("constant map is unchanged") {
    const PhaseMap w = wrapped_map(20, 4, [](double, double) { return 1.25; });
    CHECK(unwrap_rows(w).values == w.values);
  }
  SUBCASE("a single jump is removed") {
    const PhaseMap w = wrapped_map(64, 1, [](double x, double) { return x < 32 ? 3.0 + 0.001 * x : 3.0 + 0.001 * x - kTwoPi; });
    const PhaseMap u = unwrap_rows(w);
    for (std::size_t x = 1; x < 64; ++x) CHECK(std::abs(u.values(x, 0) - u.values(x - 1, 0)) < kPi);
  }
  SUBCASE("rows follow the row above across a tilt") {
    const PhaseMap u = unwrap_rows(wrapped_map(48, 40, [&](double x, double y) { return a * x + 0.3 * y; }));
    for (std::size_t y = 1; y < 40; ++y) CHECK(std::abs(u.values(0, y) - u.values(0, y - 1)) < kPi);
  }
  SUBCASE("sparse rows are masked") {
    PhaseMap w = wrapped_map(10, 3, [&](double x, double) { return a * x; });
    for (std::size_t x = 1; x < 10; ++x) w.mask(x, 1) = 0;
    const PhaseMap u = unwrap_rows(w);
    for (std::size_t x = 0; x < 10; ++x) CHECK_FALSE(u.valid(x, 1));
    CHECK(u.valid(3, 2));
  }
}

TEST_CASE("unwrap then rewrap reproduces any wrapped map") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  std::bernoulli_distribution keep(0.9);
  PhaseMap w(37, 23, PhaseKind::Wrapped);
  for (std::size_t p = 0; p < w.values.size(); ++p) {
    w.values[p] = u(rng);
    w.mask[p] = keep(rng) ? 1 : 0;
  }
  const PhaseMap back = rewrap(unwrap_rows(w));
  CHECK(back.kind == PhaseKind::Wrapped);
  for (std::size_t p = 0; p < w.values.size(); ++p)
    if (back.mask[p]) CHECK(testkit::angle_between(back.values[p], w.values[p]) <= 1e-9);
}

TEST_CASE("plane fitting") {
  SUBCASE("exact plane") {
    const PlaneFit f = fit_plane(unwrapped_map(50, 30, [](double x, double y) { return 0.2 * x - 0.1 * y + 1.0; }));
    CHECK(f.a == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(f.b == doctest::Approx(-0.1).epsilon(1e-10));
    CHECK(f.c == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(f.rms_residual <= 1e-10);
  }
  SUBCASE("ripple averages out") {
    // 10 ripple periods across 320 columns
    const auto plane = [](double x, double y) { return 0.15 * x + 0.02 * y - 0.4; };
    const PlaneFit f = fit_plane(unwrapped_map(
        320, 64, [&](double x, double y) { return plane(x, y) + 0.05 * std::cos(kTwoPi * x / 32.0); }));
    CHECK(std::abs(f.a - 0.15) < 1e-3);
    CHECK(std::abs(f.b - 0.02) < 1e-3);
    CHECK(std::abs(f.c + 0.4) < 1e-3);
    CHECK(f.rms_residual == doctest::Approx(0.05 / std::sqrt(2.0)).epsilon(0.1));
  }
  SUBCASE("degenerate inputs") {
    PhaseMap m = unwrapped_map(8, 8, [](double x, double) { return x; });
    for (auto& v : m.mask.data()) v = 0;
    CHECK_THROWS_AS(fit_plane(m), DegenerateFitError);
    // one valid row only: collinear
    for (std::size_t x = 0; x < 8; ++x) m.mask(x, 3) = 1;
    CHECK_THROWS_AS(fit_plane(m), DegenerateFitError);
    CHECK_THROWS_AS(fit_plane(wrapped_map(4, 4, [](double, double) { return 0.0; })), ShapeError);
  }
}

TEST_CASE("rewrap convention") {
  const PhaseMap r = rewrap(unwrapped_map(3, 1, [](double x, double) {
    return x == 0 ? 3.0 * kPi : x == 1 ? 0.0 : -kPi - 0.1;
  }));
  CHECK(r.values(0, 0) == doctest::Approx(-kPi));
  CHECK(r.values(1, 0) == 0.0);
  CHECK(r.values(2, 0) == doctest::Approx(kPi - 0.1));
  CHECK(wrap_phase(kPi) == -kPi);
}

TEST_CASE("ground truth from a clean sinusoid matches the analytic plane") {
  SceneSpec s;
  s.width = 128;
  s.height = 64;
  s.noise_sigma = 0.0;
  const PhaseMap truth = make_ground_truth(synth_sinusoidal(s, 0));
  const AnalyticTruth t = ground_truth_phase(s);
  for (std::size_t p = 0; p < truth.values.size(); ++p)
    CHECK(testkit::angle_between(truth.values[p], t.wrapped.values[p]) <= 1e-9);
}

TEST_CASE("plane-fitted labels carry no harmonic ripple") {
  SceneSpec s;
  s.width = 256;
  s.height = 24;
  s.defocus = {0.8, 1.2};
  s.noise_sigma = 0.0;
  const FringeStack stack = synth_binary_defocused(s, 0);
  const std::size_t bin = 6 * 256 / 32;
  const double raw = error_energy_at(pwls_solve(stack), s.phase_plane, bin);
  const double labels = error_energy_at(make_ground_truth(stack), s.phase_plane, bin);
  CHECK(raw > 0.0);
  CHECK(labels <= 0.01 * raw);
}

TEST_CASE("flat stacks cannot produce ground truth") {
  SceneSpec s;
  s.width = 16;
  s.height = 8;
  s.modulation = 0.0;
  s.noise_sigma = 0.0;
  CHECK_THROWS_AS(make_ground_truth(synth_sinusoidal(s, 0)), DegenerateFitError);
}

TEST_CASE("phase map file format") {
  testkit::TempDir dir("pmap");
  PhaseMap m = wrapped_map(7, 5, [](double x, double y) { return 0.3 * x - 0.7 * y; });
  m.mask(2, 2) = 0;
  save_phase_map(dir.file("a.pmap"), m);
  const PhaseMap back = load_phase_map(dir.file("a.pmap"));
  CHECK(back.values == m.values);
  CHECK(back.mask == m.mask);
  CHECK(back.kind == PhaseKind::Wrapped);

  auto bytes = read_file_bytes(dir.file("a.pmap"));
  CHECK(bytes.size() == 24 + 7 * 5 * 8);
  CHECK(std::string(bytes.data(), 4) == "PMAP");

  auto truncated = bytes;
  truncated.resize(100);
  write_file_bytes(dir.file("t.pmap"), truncated);
  std::filesystem::copy_file(mask_path_for(dir.file("a.pmap")), mask_path_for(dir.file("t.pmap")));
  CHECK_THROWS_AS(load_phase_map(dir.file("t.pmap")), FormatError);

  auto versioned = bytes;
  versioned[4] = 9;
  write_file_bytes(dir.file("v.pmap"), versioned);
  std::filesystem::copy_file(mask_path_for(dir.file("a.pmap")), mask_path_for(dir.file("v.pmap")));
  CHECK_THROWS_AS(load_phase_map(dir.file("v.pmap")), VersionMismatchError);

  auto bad = bytes;
  bad[0] = 'X';
  write_file_bytes(dir.file("b.pmap"), bad);
  try {
    load_phase_map(dir.file("b.pmap"));
    FAIL("bad magic accepted");
  } catch (const FormatError& e) {
    CHECK(e.offset == 0);
  }
}
