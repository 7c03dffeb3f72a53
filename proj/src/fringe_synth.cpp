#include "pwppe/fringe_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "pwppe/pgm.hpp"

namespace pwppe {
namespace {

void require(bool ok, const std::string& invariant) {
  if (!ok) throw ConfigError("invalid scene: " + invariant);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Independent stream per image so images can be regenerated in any order.
std::mt19937_64 image_rng(std::uint64_t seed, int image) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(image), 0x5eedu};
  return std::mt19937_64(seq);
}

void add_noise_and_clamp(Image& img, const SceneSpec& scene, std::uint64_t seed, int image) {
  if (scene.noise_sigma > 0.0) {
    auto rng = image_rng(seed, image);
    std::normal_distribution<double> noise(0.0, scene.noise_sigma);
    for (auto& v : img.data()) v += noise(rng);
  }
  for (auto& v : img.data()) {
    v = clamp01(v);
    if (scene.quantize_8bit) v = std::round(v * 255.0) / 255.0;
  }
}

bool is_seam(long column, const SceneSpec& scene) {
  if (scene.seam_gap <= 0) return false;
  const double pos = std::fmod(static_cast<double>(column), scene.projector_pitch);
  const double wrapped = pos < 0.0 ? pos + scene.projector_pitch : pos;
  return wrapped < static_cast<double>(scene.seam_gap);
}

// Mean of sign(cos(psi)) over the camera pixel [x - 1/2, x + 1/2] along x.
// asin(sin(t)) is the antiderivative of sign(cos(t)).
double pixel_square_wave(double psi_center, double slope) {
  if (std::abs(slope) < 1e-9) return std::cos(psi_center) >= 0.0 ? 1.0 : -1.0;
  const double hi = std::asin(std::sin(psi_center + 0.5 * slope));
  const double lo = std::asin(std::sin(psi_center - 0.5 * slope));
  return std::clamp((hi - lo) / slope, -1.0, 1.0);
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  const double s = sigma * std::numbers::sqrt2;
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    // pixel-binned Gaussian so sub-pixel sigmas keep unit mass
    const double w = 0.5 * (std::erf((k + 0.5) / s) - std::erf((k - 0.5) / s));
    taps[k + radius] = w;
    total += w;
  }
  for (auto& w : taps) w /= total;
  return taps;
}

}  // namespace

double DefocusProfile::at(std::size_t column, std::size_t width) const noexcept {
  if (width <= 1) return left;
  return left + (right - left) * static_cast<double>(column) / static_cast<double>(width - 1);
}

void SceneSpec::validate() const {
  require(width >= 1 && height >= 1, "width and height must be positive");
  require(n_steps >= 4, "n_steps >= 4 (four unknowns need four samples)");
  require(std::isfinite(period) && period > 4.0, "period > 4 pixels (carrier Nyquist)");
  require(std::isfinite(phase_plane.a) && std::isfinite(phase_plane.b) && std::isfinite(phase_plane.c),
          "phase_plane coefficients must be finite");
  require(std::hypot(phase_plane.a, phase_plane.b) < kTwoPi / 4.0,
          "phase_plane gradient must stay below the 4-pixel Nyquist limit");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma >= 0");
  require(modulation >= 0.0, "modulation B >= 0");
  require(background - modulation >= 0.0, "A - B >= 0");
  require(background + modulation <= 1.0, "A + B <= 1");
  require(defocus.left >= 0.0 && defocus.right >= 0.0, "defocus sigma >= 0");
  for (const auto& h : harmonics) {
    require(h.order >= 2, "harmonic order >= 2");
    require(std::isfinite(h.amplitude), "harmonic amplitude must be finite");
  }
  require(projector_pitch > 0.0, "projector_pitch > 0");
  require(seam_gap >= 0, "seam_gap >= 0");
  require(seam_gap == 0 || seam_gap < projector_pitch, "seam_gap < projector_pitch");
}

std::vector<double> standard_shifts(int n_steps) {
  std::vector<double> shifts(static_cast<std::size_t>(n_steps));
  for (int i = 1; i <= n_steps; ++i) shifts[i - 1] = kTwoPi * i / n_steps;
  return shifts;
}

void FringeStack::validate() const {
  if (images.empty()) throw ShapeError("fringe stack has no images");
  if (shifts.size() != images.size())
    throw ShapeError("fringe stack has " + std::to_string(images.size()) + " images but " +
                     std::to_string(shifts.size()) + " shifts");
  for (const auto& img : images)
    if (!img.same_shape(images.front())) throw ShapeError("fringe stack images differ in size");
  const auto expected = standard_shifts(n_steps());
  for (std::size_t i = 0; i < shifts.size(); ++i)
    if (std::abs(shifts[i] - expected[i]) > 1e-9)
      throw ShapeError("fringe stack shifts must be 2*pi*i/N, i = 1..N");
}

FringeStack synth_sinusoidal(const SceneSpec& scene, std::uint64_t seed) {
  scene.validate();
  FringeStack stack;
  stack.shifts = standard_shifts(scene.n_steps);
  stack.scene = scene;
  stack.seed = seed;
  const double A = scene.background;
  const double B = scene.modulation;
  for (int i = 0; i < scene.n_steps; ++i) {
    Image img(scene.width, scene.height);
    const double theta = stack.shifts[i];
    for (std::size_t y = 0; y < scene.height; ++y) {
      for (std::size_t x = 0; x < scene.width; ++x) {
        const double psi = scene.phase_plane(double(x), double(y)) + theta;
        double v = A + B * std::cos(psi);
        for (const auto& h : scene.harmonics) v += B * h.amplitude * std::cos(h.order * psi);
        img(x, y) = v;
      }
    }
    add_noise_and_clamp(img, scene, seed, i);
    stack.images.push_back(std::move(img));
  }
  return stack;
}

FringeStack synth_binary_defocused(const SceneSpec& scene, std::uint64_t seed) {
  scene.validate();
  if (!(scene.defocus.left > 0.0 && scene.defocus.right > 0.0))
    throw ConfigError("invalid scene: binary defocus requires sigma > 0 at both ends");

  FringeStack stack;
  stack.shifts = standard_shifts(scene.n_steps);
  stack.scene = scene;
  stack.seed = seed;

  const std::size_t W = scene.width;
  const std::size_t H = scene.height;
  std::vector<std::vector<double>> column_taps(W);
  int margin = 0;
  for (std::size_t x = 0; x < W; ++x) {
    column_taps[x] = gaussian_taps(scene.defocus.at(x, W));
    margin = std::max(margin, static_cast<int>(column_taps[x].size() / 2));
  }

  const double lo = scene.background - scene.modulation;
  const double hi = scene.background + scene.modulation;
  const double mid = scene.background;
  const std::size_t ext_width = W + 2 * static_cast<std::size_t>(margin);
  std::vector<double> binary_row(ext_width);

  for (int i = 0; i < scene.n_steps; ++i) {
    Image img(W, H);
    const double theta = stack.shifts[i];
    for (std::size_t y = 0; y < H; ++y) {
      // binary pattern on the margin-extended row so the blur needs no edge handling
      for (std::size_t u = 0; u < ext_width; ++u) {
        const long column = static_cast<long>(u) - margin;
        if (is_seam(column, scene)) {
          binary_row[u] = lo;
          continue;
        }
        const double psi = scene.phase_plane(double(column), double(y)) + theta;
        binary_row[u] = mid + (hi - mid) * pixel_square_wave(psi, scene.phase_plane.a);
      }
      for (std::size_t x = 0; x < W; ++x) {
        const auto& taps = column_taps[x];
        const int radius = static_cast<int>(taps.size() / 2);
        const std::size_t centre = x + static_cast<std::size_t>(margin);
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * binary_row[centre - k];
        img(x, y) = acc;
      }
    }
    add_noise_and_clamp(img, scene, seed, i);
    stack.images.push_back(std::move(img));
  }
  return stack;
}

AnalyticTruth ground_truth_phase(const SceneSpec& scene) {
  AnalyticTruth truth{PhaseMap(scene.width, scene.height, PhaseKind::Wrapped),
                      PhaseMap(scene.width, scene.height, PhaseKind::Unwrapped)};
  for (std::size_t y = 0; y < scene.height; ++y) {
    for (std::size_t x = 0; x < scene.width; ++x) {
      const double phi = scene.phase_plane(double(x), double(y));
      truth.unwrapped.values(x, y) = phi;
      truth.wrapped.values(x, y) = wrap_phase(phi);
    }
  }
  return truth;
}

// ---------------------------------------------------------------------------
// metadata

namespace {

std::string format_harmonics(const std::vector<Harmonic>& harmonics) {
  std::string out;
  for (const auto& h : harmonics) {
    if (!out.empty()) out += ',';
    out += std::to_string(h.order) + ":" + format_double(h.amplitude);
  }
  return out;
}

std::vector<Harmonic> parse_harmonics(const std::string& text) {
  std::vector<Harmonic> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("harmonic entry '" + item + "' must be order:amplitude");
    try {
      out.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw ConfigError("harmonic entry '" + item + "' must be order:amplitude");
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> scene_keys(const std::string& prefix) {
  std::vector<std::string> keys;
  for (const char* k : {"width", "height", "period", "n_steps", "plane_a", "plane_b", "plane_c",
                        "sigma_left", "sigma_right", "noise_sigma", "background", "modulation", "harmonics",
                        "seam_gap", "projector_pitch", "quantize_8bit"})
    keys.push_back(prefix + k);
  return keys;
}

void write_scene(KeyValues& kv, const SceneSpec& s, const std::string& prefix) {
  kv.set(prefix + "width", s.width);
  kv.set(prefix + "height", s.height);
  kv.set(prefix + "period", s.period);
  kv.set(prefix + "n_steps", s.n_steps);
  kv.set(prefix + "plane_a", s.phase_plane.a);
  kv.set(prefix + "plane_b", s.phase_plane.b);
  kv.set(prefix + "plane_c", s.phase_plane.c);
  kv.set(prefix + "sigma_left", s.defocus.left);
  kv.set(prefix + "sigma_right", s.defocus.right);
  kv.set(prefix + "noise_sigma", s.noise_sigma);
  kv.set(prefix + "background", s.background);
  kv.set(prefix + "modulation", s.modulation);
  kv.set(prefix + "harmonics", format_harmonics(s.harmonics));
  kv.set(prefix + "seam_gap", s.seam_gap);
  kv.set(prefix + "projector_pitch", s.projector_pitch);
  kv.set(prefix + "quantize_8bit", s.quantize_8bit);
}

SceneSpec read_scene(const KeyValues& kv, const std::string& prefix, SceneSpec s) {
  const auto dim = [&](const char* key, std::size_t fallback) {
    const auto v = kv.get_int_or(prefix + key, static_cast<std::int64_t>(fallback));
    if (v <= 0) throw ConfigError("invalid scene: " + prefix + key + " must be positive");
    return static_cast<std::size_t>(v);
  };
  s.width = dim("width", s.width);
  s.height = dim("height", s.height);
  const bool period_given = kv.has(prefix + "period");
  s.period = kv.get_double_or(prefix + "period", s.period);
  s.n_steps = static_cast<int>(kv.get_int_or(prefix + "n_steps", s.n_steps));
  // a defaults to the carrier implied by the period
  s.phase_plane.a = kv.get_double_or(prefix + "plane_a", period_given ? kTwoPi / s.period : s.phase_plane.a);
  s.phase_plane.b = kv.get_double_or(prefix + "plane_b", s.phase_plane.b);
  s.phase_plane.c = kv.get_double_or(prefix + "plane_c", s.phase_plane.c);
  s.defocus.left = kv.get_double_or(prefix + "sigma_left", s.defocus.left);
  s.defocus.right = kv.get_double_or(prefix + "sigma_right", s.defocus.right);
  s.noise_sigma = kv.get_double_or(prefix + "noise_sigma", s.noise_sigma);
  s.background = kv.get_double_or(prefix + "background", s.background);
  s.modulation = kv.get_double_or(prefix + "modulation", s.modulation);
  if (kv.has(prefix + "harmonics")) s.harmonics = parse_harmonics(kv.get(prefix + "harmonics"));
  s.seam_gap = static_cast<int>(kv.get_int_or(prefix + "seam_gap", s.seam_gap));
  s.projector_pitch = kv.get_double_or(prefix + "projector_pitch", s.projector_pitch);
  s.quantize_8bit = kv.get_bool_or(prefix + "quantize_8bit", s.quantize_8bit);
  return s;
}

namespace {

std::string step_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%02d.pgm", i);
  return buf;
}

}  // namespace

void save_stack(const std::string& dir, const FringeStack& stack) {
  stack.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  for (int i = 0; i < stack.n_steps(); ++i)
    write_pgm16((std::filesystem::path(dir) / step_name(i + 1)).string(), stack.images[i]);

  KeyValues meta;
  meta.set("n_steps", stack.n_steps());
  meta.set("width", stack.width());
  meta.set("height", stack.height());
  if (stack.scene) meta.set("period", stack.scene->period);
  std::string shifts;
  for (double s : stack.shifts) shifts += (shifts.empty() ? "" : ",") + format_double(s);
  meta.set("shifts", shifts);
  meta.set("seed", stack.seed);
  if (stack.scene) write_scene(meta, *stack.scene, "scene.");
  meta.save((std::filesystem::path(dir) / "stack.meta").string());
}

FringeStack load_stack(const std::string& dir) {
  const auto meta = KeyValues::load((std::filesystem::path(dir) / "stack.meta").string());
  FringeStack stack;
  const auto n = meta.get_int("n_steps");
  if (n < 1 || n > 99) throw FormatError(dir + "/stack.meta: n_steps out of range", 0);
  stack.shifts = meta.get_doubles("shifts");
  stack.seed = meta.get_uint_or("seed", 0);
  if (meta.has("scene.width")) stack.scene = read_scene(meta, "scene.");
  for (int i = 1; i <= n; ++i)
    stack.images.push_back(read_pgm((std::filesystem::path(dir) / step_name(i)).string()));
  const auto w = static_cast<std::size_t>(meta.get_int("width"));
  const auto h = static_cast<std::size_t>(meta.get_int("height"));
  if (!stack.images.front().same_shape(w, h)) throw ShapeError(dir + ": image size differs from stack.meta");
  stack.validate();
  return stack;
}

}  // namespace pwppe
