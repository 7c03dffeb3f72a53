#include "pwppe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "pwppe/binary_io.hpp"
#include "pwppe/keyvalue.hpp"

namespace pwppe {

std::string to_string(DatasetMode mode) {
  switch (mode) {
    case DatasetMode::Plain: return "plain";
    case DatasetMode::Augmented: return "augmented";
    case DatasetMode::Accelerated: return "accelerated";
  }
  return "plain";
}

DatasetMode parse_dataset_mode(const std::string& name) {
  if (name == "plain") return DatasetMode::Plain;
  if (name == "augmented") return DatasetMode::Augmented;
  if (name == "accelerated") return DatasetMode::Accelerated;
  throw ConfigError("unknown dataset mode '" + name + "' (expected plain, augmented or accelerated)");
}

std::vector<double> normalize(std::span<const double> d) {
  if (d.empty()) throw ZeroModulationError();
  const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw ZeroModulationError();
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = (2.0 * d[i] - hi - lo) / (hi - lo);
  // extremes land on -1/+1 exactly
  out[static_cast<std::size_t>(lo_it - d.begin())] = -1.0;
  out[static_cast<std::size_t>(hi_it - d.begin())] = 1.0;
  return out;
}

std::vector<double> rotate_left(std::span<const double> d, int shift) {
  const int n = static_cast<int>(d.size());
  std::vector<double> out(d.size());
  for (int k = 0; k < n; ++k) out[k] = d[static_cast<std::size_t>(((k + shift) % n + n) % n)];
  return out;
}

namespace {

// Reversal with offset i: D'(k) = D(i - k) in 1-based indices, taken modulo N.
std::vector<double> reverse_with_offset(std::span<const double> d, int offset) {
  const int n = static_cast<int>(d.size());
  std::vector<double> out(d.size());
  for (int k = 0; k < n; ++k) out[k] = d[static_cast<std::size_t>((((offset - k - 2) % n) + n) % n)];
  return out;
}

double rotation_label(double phase, int i, int n) { return wrap_phase(phase + i * kTwoPi / n); }
double reversal_label(double phase, int i, int n) { return wrap_phase(kTwoPi - (phase + i * kTwoPi / n)); }

LabelledVector variant(std::span<const double> d, double phase, int aug_id) {
  const int n = static_cast<int>(d.size());
  if (aug_id < n) return {rotate_left(d, aug_id), rotation_label(phase, aug_id, n)};
  const int i = aug_id - n;
  return {reverse_with_offset(d, i), reversal_label(phase, i, n)};
}

}  // namespace

std::vector<LabelledVector> augment(std::span<const double> d, double truth_phase) {
  const int n = static_cast<int>(d.size());
  std::vector<LabelledVector> out;
  out.reserve(2 * d.size());
  for (int id = 0; id < 2 * n; ++id) out.push_back(variant(d, truth_phase, id));
  return out;
}

Acceleration rotate_to_max(std::span<const double> d, double truth_phase) {
  const int n = static_cast<int>(d.size());
  // max_element returns the first maximum: lowest index wins ties
  const int j = static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin()) + 1;
  return {rotate_left(d, j), rotation_label(truth_phase, j, n), j};
}

TargetPair encode_target(double phase) noexcept { return {std::sin(phase), std::cos(phase)}; }

DatasetSplit build_dataset(const FringeStack& stack, const PhaseMap& truth, const BuildOptions& opts) {
  stack.validate();
  if (!truth.values.same_shape(stack.width(), stack.height()))
    throw ShapeError("truth phase map dimensions differ from the fringe stack");
  if (truth.kind != PhaseKind::Wrapped) throw ShapeError("dataset labels must come from a wrapped phase map");
  if (!(opts.sample_fraction > 0.0 && opts.sample_fraction <= 1.0))
    throw ConfigError("sample_fraction must lie in (0, 1]");
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");

  const int n = stack.n_steps();
  const std::size_t W = stack.width();

  struct Pixel {
    std::uint32_t x, y;
    std::vector<double> input;
    double phase;
  };
  std::vector<Pixel> pixels;
  std::vector<double> raw(static_cast<std::size_t>(n));
  for (std::size_t p = 0; p < truth.values.size(); ++p) {
    if (!truth.mask[p]) continue;
    for (int i = 0; i < n; ++i) raw[i] = stack.images[i][p];
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    if (!(*hi > *lo)) continue;
    pixels.push_back({static_cast<std::uint32_t>(p % W), static_cast<std::uint32_t>(p / W), normalize(raw),
                      truth.values[p]});
  }
  if (pixels.empty()) throw EmptyInputError("empty dataset: no valid pixels");

  std::mt19937_64 rng(opts.seed);
  std::shuffle(pixels.begin(), pixels.end(), rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(opts.train_fraction * double(pixels.size()))), 1, pixels.size());

  DatasetSplit split;
  split.train.n_steps = split.test.n_steps = n;
  split.train.seed = split.test.seed = opts.seed;
  split.train.mode = opts.mode;
  split.test.mode = opts.mode == DatasetMode::Accelerated ? DatasetMode::Accelerated : DatasetMode::Plain;

  const auto make_sample = [](std::vector<double> input, double phase, std::uint32_t x, std::uint32_t y,
                              int aug_id) {
    const auto t = encode_target(phase);
    return PixelSample{std::move(input), t.sin, t.cos, {x, y, aug_id}};
  };

  // training pool: each pixel contributes `per_pixel` variants; subsample without replacement
  const std::size_t per_pixel = opts.mode == DatasetMode::Augmented ? 2 * static_cast<std::size_t>(n) : 1;
  const std::size_t pool = n_train * per_pixel;
  std::size_t take = pool;
  if (opts.sample_fraction < 1.0)
    take = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(opts.sample_fraction * double(pool))),
                                   1, pool);
  std::vector<std::uint32_t> order(pool);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  split.train.samples.reserve(take);
  for (std::size_t s = 0; s < take; ++s) {
    const Pixel& px = pixels[order[s] / per_pixel];
    const int id = static_cast<int>(order[s] % per_pixel);
    switch (opts.mode) {
      case DatasetMode::Plain:
        split.train.samples.push_back(make_sample(px.input, px.phase, px.x, px.y, 0));
        break;
      case DatasetMode::Augmented: {
        auto v = variant(px.input, px.phase, id);
        split.train.samples.push_back(make_sample(std::move(v.input), v.phase, px.x, px.y, id));
        break;
      }
      case DatasetMode::Accelerated: {
        auto a = rotate_to_max(px.input, px.phase);
        split.train.samples.push_back(make_sample(std::move(a.input), a.phase, px.x, px.y, a.rotation));
        break;
      }
    }
  }

  split.test.samples.reserve(pixels.size() - n_train);
  for (std::size_t i = n_train; i < pixels.size(); ++i) {
    const Pixel& px = pixels[i];
    if (opts.mode == DatasetMode::Accelerated) {
      auto a = rotate_to_max(px.input, px.phase);
      split.test.samples.push_back(make_sample(std::move(a.input), a.phase, px.x, px.y, a.rotation));
    } else {
      split.test.samples.push_back(make_sample(px.input, px.phase, px.x, px.y, 0));
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// persistence

namespace {
constexpr const char* kDatasetMagic = "PWDS";
constexpr std::int64_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
  KeyValues header;
  header.set("version", kDatasetVersion);
  header.set("n_steps", data.n_steps);
  header.set("mode", to_string(data.mode));
  header.set("count", data.samples.size());
  header.set("seed", data.seed);
  const std::string text = std::string(kDatasetMagic) + "\n" + header.to_string() + "\n";

  ByteWriter w;
  w.bytes(text.data(), text.size());
  for (const auto& s : data.samples) {
    if (static_cast<int>(s.input.size()) != data.n_steps) throw ShapeError("sample width differs from n_steps");
    for (double v : s.input) w.f64(v);
    w.f64(s.target_sin);
    w.f64(s.target_cos);
    w.f64(double(s.origin.x));
    w.f64(double(s.origin.y));
    w.f64(double(s.origin.aug_id));
  }
  write_file_bytes(path, w.buffer());
}

Dataset load_dataset(const std::string& path) {
  auto bytes = read_file_bytes(path);
  const std::string_view view(bytes.data(), bytes.size());
  if (view.substr(0, 5) != "PWDS\n") throw FormatError(path + ": bad dataset magic", 0);
  const auto end = view.find("\n\n");
  if (end == std::string_view::npos) throw FormatError(path + ": unterminated dataset header", bytes.size());
  const auto header = KeyValues::parse(std::string(view.substr(5, end - 4)), path);
  if (const auto version = header.get_int("version"); version != kDatasetVersion)
    throw VersionMismatchError(path, static_cast<std::uint32_t>(version), kDatasetVersion);

  Dataset data;
  data.n_steps = static_cast<int>(header.get_int("n_steps"));
  data.mode = parse_dataset_mode(header.get("mode"));
  data.seed = header.get_uint_or("seed", 0);
  const auto count = static_cast<std::size_t>(header.get_int("count"));
  if (data.n_steps < 1) throw FormatError(path + ": n_steps must be positive", 5);

  ByteReader r(std::move(bytes), path, end + 2);
  const std::size_t record = (static_cast<std::size_t>(data.n_steps) + 5) * 8;
  if (r.remaining() != count * record)
    throw FormatError(path + ": payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(count * record),
                      r.offset());
  data.samples.resize(count);
  for (auto& s : data.samples) {
    s.input.resize(static_cast<std::size_t>(data.n_steps));
    for (auto& v : s.input) v = r.f64();
    s.target_sin = r.f64();
    s.target_cos = r.f64();
    s.origin.x = static_cast<std::uint32_t>(r.f64());
    s.origin.y = static_cast<std::uint32_t>(r.f64());
    s.origin.aug_id = static_cast<std::int32_t>(r.f64());
  }
  return data;
}

void export_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (int i = 1; i <= data.n_steps; ++i) out << "in" << i << ',';
  out << "sin,cos,x,y,aug_id\n";
  char buf[32];
  for (const auto& s : data.samples) {
    for (double v : s.input) {
      std::snprintf(buf, sizeof(buf), "%.9g,", v);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.9g,", s.target_sin);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.9g,", s.target_cos);
    out << buf << s.origin.x << ',' << s.origin.y << ',' << s.origin.aug_id << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace pwppe
