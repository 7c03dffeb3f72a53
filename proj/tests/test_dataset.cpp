#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "pwppe/binary_io.hpp"
#include "pwppe/dataset.hpp"
#include "pwppe/phase_core.hpp"
#include "support.hpp"

using namespace pwppe;

namespace {

SceneSpec small_scene() {
  SceneSpec s;
  s.width = 48;
  s.height = 32;
  s.period = 16;
  s.phase_plane = SceneSpec::carrier(16, 0.01, 0.2);
  s.defocus = {1.0, 2.0};
  return s;
}

DatasetSplit small_split(DatasetMode mode, double fraction, std::uint64_t seed) {
  const FringeStack stack = synth_binary_defocused(small_scene(), 3);
  return build_dataset(stack, make_ground_truth(stack), {mode, fraction, 0.5, seed});
}

}  // namespace

TEST_CASE("normalization maps extremes onto -1 and 1") {
  CHECK(normalize(std::vector<double>{0.0, 255.0}) == std::vector<double>{-1.0, 1.0});
  CHECK(normalize(std::vector<double>{10.0, 20.0, 30.0}) == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK_THROWS_AS(normalize(std::vector<double>(6, 0.3)), ZeroModulationError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> d(6);
    for (auto& v : d) v = u(rng);
    const auto n = normalize(d);
    CHECK(*std::max_element(n.begin(), n.end()) == 1.0);
    CHECK(*std::min_element(n.begin(), n.end()) == -1.0);
    const auto twice = normalize(n);
    for (std::size_t i = 0; i < n.size(); ++i) CHECK(std::abs(twice[i] - n[i]) <= 1e-12);
  }
}

TEST_CASE("augmentation yields 2N variants with the identity first") {
  const auto d = normalize(testkit::sinusoid(0.7, 6));
  const auto out = augment(d, 0.7);
  REQUIRE(out.size() == 12);
  CHECK(out[0].input == d);
  CHECK(out[0].phase == doctest::Approx(0.7));
  for (const auto& v : out) {
    CHECK(v.phase >= -kPi);
    CHECK(v.phase < kPi);
    CHECK(std::is_permutation(v.input.begin(), v.input.end(), d.begin()));
  }
}

TEST_CASE("every augmented label agrees with least squares on its vector") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  for (int n : {4, 6, 7}) {
    for (int trial = 0; trial < (n == 6 ? 10000 : 1000); ++trial) {
      const double phi = phase(rng);
      const auto variants = augment(normalize(testkit::sinusoid(phi, n)), wrap_phase(phi));
      REQUIRE(variants.size() == static_cast<std::size_t>(2 * n));
      for (const auto& v : variants) {
        const auto solved = testkit::brute_force_phase(v.input);
        REQUIRE(solved.has_value());
        CHECK(testkit::angle_between(*solved, v.phase) <= 1e-9);
      }
    }
  }
}

TEST_CASE("normalization commutes with rotation and reversal") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(6);
    for (auto& v : d) v = u(rng);
    const auto a = augment(normalize(d), 0.1);
    const auto raw = augment(d, 0.1);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const auto b = normalize(raw[k].input);
      for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(a[k].input[i] - b[i]) <= 1e-12);
      CHECK(a[k].phase == raw[k].phase);
    }
  }
}

TEST_CASE("rotate-to-max") {
  SUBCASE("maximum already in the zero-shift slot is left alone") {
    const std::vector<double> d{-1.0, -0.5, 0.0, 0.2, 0.5, 1.0};
    const auto r = rotate_to_max(d, 0.3);
    CHECK(r.input == d);
    CHECK(r.phase == doctest::Approx(0.3));
    CHECK(r.rotation == 6);
  }
  SUBCASE("ties go to the lowest index") {
    const std::vector<double> d{1.0, -1.0, 1.0, 0.0, -0.5, 0.3};
    CHECK(rotate_to_max(d, 0.0).rotation == 1);
  }
  SUBCASE("clean labels stay within one step of zero") {
    for (int k = 0; k < 1000; ++k) {
      const double phi = -kPi + kTwoPi * (k + 0.5) / 1000.0;
      const auto r = rotate_to_max(normalize(testkit::sinusoid(phi, 6)), phi);
      CHECK(std::abs(r.phase) <= kTwoPi / 6 + 1e-9);
      CHECK(testkit::angle_between(*testkit::brute_force_phase(r.input), r.phase) <= 1e-9);
    }
  }
  SUBCASE("noise lets labels leave the band without failing") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.05);
    int outside = 0;
    for (int k = 0; k < 1000; ++k) {
      const double phi = -kPi + kTwoPi * (k + 0.5) / 1000.0;
      auto d = testkit::sinusoid(phi, 6, 0.5, 0.1);
      for (auto& v : d) v += noise(rng);
      const auto r = rotate_to_max(normalize(d), phi);
      if (std::abs(r.phase) > kTwoPi / 6 + 1e-9) ++outside;
    }
    CHECK(outside > 0);
  }
}

TEST_CASE("target encoding") {
  CHECK(encode_target(0.0).sin == 0.0);
  CHECK(encode_target(0.0).cos == 1.0);
  CHECK(encode_target(kPi / 2).sin == doctest::Approx(1.0));
  CHECK(std::abs(encode_target(kPi / 2).cos) < 1e-15);
  const auto a = encode_target(-kPi);
  const auto b = encode_target(kPi - 1e-15);
  CHECK(std::abs(a.sin - b.sin) < 1e-14);
  CHECK(std::abs(a.cos - b.cos) < 1e-14);
  for (int k = 0; k < 4096; ++k) {
    const double phi = -kPi + kTwoPi * k / 4096.0;
    const auto t = encode_target(phi);
    CHECK(std::abs(std::atan2(t.sin, t.cos) - phi) <= 1e-12 + (k == 0 ? kTwoPi : 0.0));
    CHECK(std::abs(t.sin * t.sin + t.cos * t.cos - 1.0) <= 1e-12);
  }
}

TEST_CASE("dataset build") {
  SUBCASE("augmented pool has 2N samples per training pixel") {
    const DatasetSplit s = small_split(DatasetMode::Augmented, 1.0, 1);
    const std::size_t pixels = s.test.size() + s.train.size() / 12;
    CHECK(s.train.size() % 12 == 0);
    CHECK(pixels <= 48 * 32);
    CHECK(s.train.size() == 12 * (pixels / 2));
    CHECK(s.test.mode == DatasetMode::Plain);
  }
  SUBCASE("sample fraction subsamples the pool") {
    const DatasetSplit full = small_split(DatasetMode::Augmented, 1.0, 1);
    const DatasetSplit one = small_split(DatasetMode::Augmented, 0.01, 1);
    const double expected = 0.01 * double(full.train.size());
    CHECK(std::abs(double(one.train.size()) - expected) <= 1.0);
    CHECK(one.test.size() == full.test.size());
  }
  SUBCASE("seed determines the split") {
    const DatasetSplit a = small_split(DatasetMode::Plain, 1.0, 5);
    const DatasetSplit b = small_split(DatasetMode::Plain, 1.0, 5);
    const DatasetSplit c = small_split(DatasetMode::Plain, 1.0, 6);
    REQUIRE(a.train.size() == b.train.size());
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      same = same && a.train.samples[i].input == b.train.samples[i].input;
      differs = differs || a.train.samples[i].origin.x != c.train.samples[i].origin.x ||
                a.train.samples[i].origin.y != c.train.samples[i].origin.y;
    }
    CHECK(same);
    CHECK(differs);
  }
  SUBCASE("train and test pixels are disjoint") {
    for (auto mode : {DatasetMode::Plain, DatasetMode::Augmented, DatasetMode::Accelerated}) {
      const DatasetSplit s = small_split(mode, 1.0, 9);
      std::set<std::pair<std::uint32_t, std::uint32_t>> train;
      for (const auto& p : s.train.samples) train.insert({p.origin.x, p.origin.y});
      for (const auto& p : s.test.samples) CHECK(train.count({p.origin.x, p.origin.y}) == 0);
    }
  }
  SUBCASE("samples are normalized and labels lie on the unit circle") {
    const DatasetSplit s = small_split(DatasetMode::Accelerated, 0.5, 2);
    CHECK(s.test.mode == DatasetMode::Accelerated);
    for (const auto* d : {&s.train, &s.test})
      for (const auto& p : d->samples) {
        REQUIRE(p.input.size() == 6);
        CHECK(*std::max_element(p.input.begin(), p.input.end()) == 1.0);
        CHECK(*std::min_element(p.input.begin(), p.input.end()) == -1.0);
        CHECK(std::abs(p.target_sin * p.target_sin + p.target_cos * p.target_cos - 1.0) <= 1e-12);
        // accelerated inputs keep their maximum in the last slot
        CHECK(p.input.back() == 1.0);
      }
  }
  SUBCASE("no valid pixels") {
    const FringeStack stack = synth_binary_defocused(small_scene(), 3);
    PhaseMap truth = make_ground_truth(stack);
    for (auto& m : truth.mask.data()) m = 0;
    CHECK_THROWS_AS(build_dataset(stack, truth, {}), EmptyInputError);
  }
  SUBCASE("mismatched truth") {
    const FringeStack stack = synth_binary_defocused(small_scene(), 3);
    CHECK_THROWS_AS(build_dataset(stack, PhaseMap(10, 10, PhaseKind::Wrapped), {}), ShapeError);
  }
}

TEST_CASE("dataset files") {
  testkit::TempDir dir("ds");
  const DatasetSplit s = small_split(DatasetMode::Augmented, 0.1, 4);
  save_dataset(dir.file("train.pwds"), s.train);
  const Dataset back = load_dataset(dir.file("train.pwds"));
  CHECK(back.n_steps == 6);
  CHECK(back.mode == DatasetMode::Augmented);
  CHECK(back.seed == 4);
  REQUIRE(back.size() == s.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.samples[i].input == s.train.samples[i].input);
    CHECK(back.samples[i].target_sin == s.train.samples[i].target_sin);
    CHECK(back.samples[i].origin.aug_id == s.train.samples[i].origin.aug_id);
  }

  auto bytes = read_file_bytes(dir.file("train.pwds"));
  CHECK(std::string(bytes.data(), 5) == "PWDS\n");
  bytes.resize(bytes.size() - 3);
  write_file_bytes(dir.file("cut.pwds"), bytes);
  CHECK_THROWS_AS(load_dataset(dir.file("cut.pwds")), FormatError);

  export_dataset_csv(dir.file("train.csv"), s.train);
  std::ifstream csv(dir.file("train.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "in1,in2,in3,in4,in5,in6,sin,cos,x,y,aug_id");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == s.train.size());
}
