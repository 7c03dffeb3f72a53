#include "pwppe/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pwppe/pgm.hpp"
#include "pwppe/phase_core.hpp"

namespace pwppe {

std::string to_string(Method m) { return m == Method::Pwls ? "PWLS" : "PWPPE"; }

PhaseMap phase_error(const PhaseMap& estimate, const PhaseMap& truth) {
  if (!estimate.values.same_shape(truth.values)) throw ShapeError("phase_error: dimension mismatch");
  if (estimate.kind != PhaseKind::Wrapped || truth.kind != PhaseKind::Wrapped)
    throw ShapeError("phase_error expects wrapped phase maps");
  PhaseMap err(truth.width(), truth.height(), PhaseKind::Wrapped);
  for (std::size_t p = 0; p < err.values.size(); ++p) {
    const bool ok = estimate.mask[p] && truth.mask[p];
    err.mask[p] = ok ? 1 : 0;
    err.values[p] = ok ? wrap_phase(estimate.values[p] - truth.values[p]) : 0.0;
  }
  return err;
}

ErrorStats error_stats(const PhaseMap& error) {
  ErrorStats s;
  double ss = 0.0;
  for (std::size_t p = 0; p < error.values.size(); ++p) {
    if (!error.mask[p]) continue;
    const double e = error.values[p];
    ss += e * e;
    s.max_abs = std::max(s.max_abs, std::abs(e));
    ++s.count;
  }
  if (s.count == 0) throw EmptyInputError("error map has no valid pixels");
  s.mse = ss / double(s.count);
  s.rms = std::sqrt(s.mse);
  return s;
}

double spectral_peak(const PhaseMap& error, std::size_t row, double fringe_period, int harmonic) {
  const std::size_t W = error.width();
  if (row >= error.height()) throw ShapeError("profile row outside the image");
  if (!(fringe_period > 0.0)) throw ConfigError("spectral analysis needs a positive fringe period");
  if (W < 8) throw ShapeError("row too short for spectral analysis");

  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t x = 0; x < W; ++x)
    if (error.valid(x, row)) {
      mean += error.values(x, row);
      ++n;
    }
  if (n == 0) throw EmptyInputError("profile row has no valid pixels");
  mean /= double(n);
  std::vector<double> signal(W, 0.0);
  for (std::size_t x = 0; x < W; ++x)
    if (error.valid(x, row)) signal[x] = error.values(x, row) - mean;

  const std::size_t half = W / 2;
  std::vector<double> amplitude(half + 1, 0.0);
  for (std::size_t k = 1; k <= half; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t x = 0; x < W; ++x) acc += signal[x] * std::polar(1.0, -kTwoPi * double(k * x % W) / double(W));
    amplitude[k] = std::abs(acc);
  }
  auto bin = static_cast<std::size_t>(std::llround(double(harmonic) * double(W) / fringe_period)) % W;
  if (bin > half) bin = W - bin;
  if (bin == 0) throw ConfigError("harmonic frequency aliases onto DC");

  std::vector<double> rest(amplitude.begin() + 1, amplitude.end());
  std::nth_element(rest.begin(), rest.begin() + rest.size() / 2, rest.end());
  const double median = rest[rest.size() / 2];
  if (!(median > 0.0)) return amplitude[bin] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return amplitude[bin] / median;
}

std::vector<double> EvalReport::row_profile() const {
  std::vector<double> out(error.width(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t x = 0; x < error.width(); ++x)
    if (error.valid(x, profile_row)) out[x] = error.values(x, profile_row);
  return out;
}

namespace {

double fringe_period_for(const FringeStack& stack, const PhaseMap& truth, const CompareOptions& opts) {
  if (opts.fringe_period > 0.0) return opts.fringe_period;
  if (stack.scene) return stack.scene->period;
  const PlaneFit fit = fit_plane(unwrap_rows(truth));
  if (std::abs(fit.a) < 1e-12) throw ConfigError("cannot infer the fringe period from the truth map");
  return kTwoPi / std::abs(fit.a);
}

EvalReport score(Method method, const PhaseMap& estimate, const Image* radius, const PhaseMap& truth,
                 std::size_t row, double period) {
  EvalReport r;
  r.method = method;
  r.error = phase_error(estimate, truth);
  const ErrorStats s = error_stats(r.error);
  r.mse = s.mse;
  r.rms = s.rms;
  r.max_abs = s.max_abs;
  r.valid_pixels = s.count;
  r.profile_row = row;
  r.spectrum_peak_at_6f = spectral_peak(r.error, row, period, 6);
  // |rho e^{i est} - e^{i truth}|^2 / 2, averaged
  double acc = 0.0;
  for (std::size_t p = 0; p < r.error.values.size(); ++p) {
    if (!r.error.mask[p]) continue;
    const double rho = radius ? (*radius)[p] : 1.0;
    acc += 0.5 * (rho * rho + 1.0 - 2.0 * rho * std::cos(r.error.values[p]));
  }
  r.output_mse = acc / double(s.count);
  return r;
}

}  // namespace

ReportPair compare(const FringeStack& stack, const PhaseMap& truth, const Network& net, const CompareOptions& opts) {
  stack.validate();
  if (!truth.values.same_shape(stack.width(), stack.height()))
    throw ShapeError("truth dimensions differ from the fringe stack");
  const std::size_t row = opts.profile_row.value_or(stack.height() / 2);
  if (row >= stack.height()) throw ConfigError("profile row " + std::to_string(row) + " is outside the image");
  const double period = fringe_period_for(stack, truth, opts);

  ReportPair pair;
  pair.pwls = score(Method::Pwls, pwls_solve(stack), nullptr, truth, row, period);

  InferenceOptions inf;
  inf.accelerated = opts.accelerated;
  PwppeSolution sol = pwppe_solve(stack, net, inf);
  pair.pwppe = score(Method::Pwppe, sol.phase, &sol.self_test.values, truth, row, period);
  SelfTestMap restricted = sol.self_test;
  for (std::size_t p = 0; p < restricted.mask.size(); ++p)
    restricted.mask[p] = restricted.mask[p] && truth.mask[p] ? 1 : 0;
  pair.pwppe.selftest_bands = self_test_histogram(restricted, opts.bands);
  pair.pwppe.self_test = std::move(restricted);
  return pair;
}

std::string to_string(SynthMode m) { return m == SynthMode::Sinusoidal ? "sinusoidal" : "binary"; }

SynthMode parse_synth_mode(const std::string& name) {
  if (name == "sinusoidal") return SynthMode::Sinusoidal;
  if (name == "binary") return SynthMode::BinaryDefocused;
  throw ConfigError("unknown synthesis mode '" + name + "' (expected sinusoidal or binary)");
}

FringeStack synthesize(const SceneSpec& scene, SynthMode mode, std::uint64_t seed) {
  return mode == SynthMode::Sinusoidal ? synth_sinusoidal(scene, seed) : synth_binary_defocused(scene, seed);
}

std::vector<SceneVariation> standard_variations() {
  std::vector<SceneVariation> v;
  for (const char* name : {"trained", "group1_focus", "group2_pose", "group3_pose", "group4_exposure"})
    v.push_back(variation_by_name(name));
  return v;
}

SceneVariation variation_by_name(const std::string& name) {
  if (name == "trained") return {name, [](const SceneSpec& s) { return s; }};
  if (name == "group1_focus")
    // focal change: sharp end softens, blurred end sharpens
    return {name, [](SceneSpec s) {
              s.defocus = {s.defocus.left * 2.0, s.defocus.right * 0.75};
              return s;
            }};
  if (name == "group2_pose")
    return {name, [](SceneSpec s) {
              s.phase_plane.b += 0.004;
              s.phase_plane.c += 1.0;
              return s;
            }};
  if (name == "group3_pose")
    // plate moved closer: shorter fringe period and a different tilt
    return {name, [](SceneSpec s) {
              s.period *= 0.9;
              s.phase_plane.a = kTwoPi / s.period;
              s.phase_plane.b -= 0.002;
              s.phase_plane.c -= 0.7;
              return s;
            }};
  if (name == "group4_exposure")
    return {name, [](SceneSpec s) {
              s.background *= 0.5;
              s.modulation *= 0.5;
              return s;
            }};
  throw ConfigError("unknown scene variation '" + name + "'");
}

std::vector<SweepEntry> generalization_sweep(const SceneSpec& base, const std::vector<SceneVariation>& variations,
                                             const Network& net, const SweepOptions& opts) {
  std::vector<SweepEntry> out;
  for (const auto& v : variations) {
    SceneSpec scene = v.apply(base);
    const FringeStack stack = synthesize(scene, opts.synth, opts.seed);
    const PhaseMap truth = ground_truth_phase(scene).wrapped;
    out.push_back({v.name, scene, compare(stack, truth, net, opts.compare)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// emission

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_error_map(const std::filesystem::path& dir, const EvalReport& r) {
  std::string method = to_string(r.method);
  std::transform(method.begin(), method.end(), method.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto base = dir / ("error_map_" + method);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < r.error.values.size(); ++p)
    if (r.error.mask[p]) {
      lo = std::min(lo, r.error.values[p]);
      hi = std::max(hi, r.error.values[p]);
    }
  if (!(hi > lo)) hi = lo + 1e-12;
  Image gray(r.error.width(), r.error.height(), 0.0);
  for (std::size_t p = 0; p < gray.size(); ++p)
    if (r.error.mask[p]) gray[p] = (r.error.values[p] - lo) / (hi - lo);
  write_pgm16(base.string() + ".pgm", gray);

  auto scale = open_csv(base.string() + ".scale");
  scale << "min=" << fmt(lo) << "\nmax=" << fmt(hi) << "\n";
  if (!scale) throw IoError("write failed: " + base.string() + ".scale");
  save_phase_map(base.string() + ".pmap", r.error);
}

}  // namespace

void emit(const std::vector<NamedReport>& reports, const std::string& out_dir) {
  if (reports.empty()) throw EmptyInputError("nothing to emit");
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

  {
    auto t1 = open_csv(dir / "table1.csv");
    t1 << "scene,method,mse_rad2,rms_rad,max_abs_rad,output_mse,spectrum_peak_6f,valid_pixels\n";
    for (const auto& nr : reports)
      for (const EvalReport* r : {&nr.reports.pwls, &nr.reports.pwppe})
        t1 << nr.scene << ',' << to_string(r->method) << ',' << fmt(r->mse) << ',' << fmt(r->rms) << ','
           << fmt(r->max_abs) << ',' << fmt(r->output_mse) << ',' << fmt(r->spectrum_peak_at_6f) << ','
           << r->valid_pixels << '\n';
    if (!t1) throw IoError("write failed: table1.csv");
  }

  const ReportPair& first = reports.front().reports;
  {
    auto t2 = open_csv(dir / "table2.csv");
    t2 << "band,proportion\n";
    const std::vector<double> bands{0.01, 0.05, 0.1, 0.12};
    const auto& props = first.pwppe.selftest_bands;
    for (std::size_t i = 0; i < props.size() && i < bands.size(); ++i)
      t2 << fmt(bands[i]) << ',' << fmt(props[i]) << '\n';
    if (!t2) throw IoError("write failed: table2.csv");
  }
  {
    auto rp = open_csv(dir / "row_profile.csv");
    rp << "column,pwls_error_rad,pwppe_error_rad\n";
    const auto a = first.pwls.row_profile();
    const auto b = first.pwppe.row_profile();
    for (std::size_t x = 0; x < a.size(); ++x) rp << x << ',' << fmt(a[x]) << ',' << fmt(b[x]) << '\n';
    if (!rp) throw IoError("write failed: row_profile.csv");
  }
  write_error_map(dir, first.pwls);
  write_error_map(dir, first.pwppe);
}

void emit(const ReportPair& pair, const std::string& out_dir) { emit({NamedReport{"trained", pair}}, out_dir); }

}  // namespace pwppe
