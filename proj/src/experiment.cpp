#include "pwppe/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pwppe/phase_core.hpp"

namespace pwppe {

namespace {

std::vector<std::string> known_keys() {
  auto keys = scene_keys("scene.");
  for (const char* k : {"scene.synth", "scene.seed", "dataset.mode", "dataset.sample_fraction",
                        "dataset.train_fraction", "dataset.seed", "train.iterations", "train.learning_rate",
                        "train.batch_size", "train.seed", "train.optimizer", "train.target_mse", "train.momentum",
                        "eval.variations", "eval.seed", "eval.profile_row", "eval.output_dir"})
    keys.emplace_back(k);
  return keys;
}

std::size_t positive_size(const KeyValues& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int_or(key, static_cast<std::int64_t>(fallback));
  if (v <= 0) throw ConfigError(key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_keyvalues(const KeyValues& kv) {
  const auto unknown = kv.unknown_keys(known_keys());
  if (!unknown.empty()) throw ConfigError("unknown configuration key '" + unknown.front() + "'");

  ExperimentConfig cfg;
  cfg.scene = read_scene(kv, "scene.");
  cfg.scene.validate();
  cfg.synth = parse_synth_mode(kv.get_or("scene.synth", to_string(cfg.synth)));
  cfg.synth_seed = kv.get_uint_or("scene.seed", cfg.synth_seed);

  cfg.dataset.mode = parse_dataset_mode(kv.get_or("dataset.mode", to_string(cfg.dataset.mode)));
  cfg.dataset.sample_fraction = kv.get_double_or("dataset.sample_fraction", cfg.dataset.sample_fraction);
  cfg.dataset.train_fraction = kv.get_double_or("dataset.train_fraction", cfg.dataset.train_fraction);
  cfg.dataset.seed = kv.get_uint_or("dataset.seed", cfg.dataset.seed);
  if (!(cfg.dataset.sample_fraction > 0.0 && cfg.dataset.sample_fraction <= 1.0))
    throw ConfigError("dataset.sample_fraction must lie in (0, 1]");
  if (!(cfg.dataset.train_fraction > 0.0 && cfg.dataset.train_fraction < 1.0))
    throw ConfigError("dataset.train_fraction must lie in (0, 1)");

  cfg.train.iterations = positive_size(kv, "train.iterations", cfg.train.iterations);
  cfg.train.learning_rate = kv.get_double_or("train.learning_rate", cfg.train.learning_rate);
  cfg.train.batch_size = positive_size(kv, "train.batch_size", cfg.train.batch_size);
  cfg.train.seed = kv.get_uint_or("train.seed", cfg.train.seed);
  cfg.train.optimizer = parse_optimizer(kv.get_or("train.optimizer", to_string(cfg.train.optimizer)));
  cfg.train.target_mse = kv.get_double_or("train.target_mse", cfg.train.target_mse);
  cfg.train.momentum = kv.get_double_or("train.momentum", cfg.train.momentum);
  cfg.train.validate();

  if (kv.has("eval.variations")) {
    cfg.variations = split_names(kv.get("eval.variations"));
    if (cfg.variations.empty()) throw ConfigError("eval.variations is empty");
    for (const auto& name : cfg.variations) variation_by_name(name);
  }
  cfg.eval_seed = kv.get_uint_or("eval.seed", cfg.eval_seed);
  if (kv.has("eval.profile_row")) {
    const auto row = kv.get_int("eval.profile_row");
    if (row < 0 || static_cast<std::size_t>(row) >= cfg.scene.height)
      throw ConfigError("eval.profile_row is outside the image");
    cfg.profile_row = static_cast<std::size_t>(row);
  }
  cfg.output_dir = kv.get_or("eval.output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) throw ConfigError("eval.output_dir is empty");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_keyvalues(KeyValues::load(path));
}

KeyValues ExperimentConfig::to_keyvalues() const {
  KeyValues kv;
  write_scene(kv, scene, "scene.");
  kv.set("scene.synth", to_string(synth));
  kv.set("scene.seed", synth_seed);
  kv.set("dataset.mode", to_string(dataset.mode));
  kv.set("dataset.sample_fraction", dataset.sample_fraction);
  kv.set("dataset.train_fraction", dataset.train_fraction);
  kv.set("dataset.seed", dataset.seed);
  kv.set("train.iterations", static_cast<std::uint64_t>(train.iterations));
  kv.set("train.learning_rate", train.learning_rate);
  kv.set("train.batch_size", static_cast<std::uint64_t>(train.batch_size));
  kv.set("train.seed", train.seed);
  kv.set("train.optimizer", to_string(train.optimizer));
  kv.set("train.target_mse", train.target_mse);
  kv.set("train.momentum", train.momentum);
  std::string names;
  for (const auto& v : variations) names += (names.empty() ? "" : ",") + v;
  kv.set("eval.variations", names);
  kv.set("eval.seed", eval_seed);
  if (profile_row) kv.set("eval.profile_row", static_cast<std::uint64_t>(*profile_row));
  kv.set("eval.output_dir", output_dir);
  return kv;
}

void save_training_log(const std::string& weights_path, const Dataset& data, const TrainConfig& cfg,
                       const TrainResult& result) {
  {
    std::ofstream out(weights_path + ".loss.csv", std::ios::trunc);
    if (!out) throw IoError("cannot open " + weights_path + ".loss.csv for writing");
    out << "epoch,train_mse\n";
    char buf[40];
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%.9g", result.loss_history[e]);
      out << e + 1 << ',' << buf << '\n';
    }
    if (!out) throw IoError("write failed: " + weights_path + ".loss.csv");
  }
  KeyValues meta;
  meta.set("train.iterations", static_cast<std::uint64_t>(cfg.iterations));
  meta.set("train.learning_rate", cfg.learning_rate);
  meta.set("train.batch_size", static_cast<std::uint64_t>(cfg.batch_size));
  meta.set("train.seed", cfg.seed);
  meta.set("train.optimizer", to_string(cfg.optimizer));
  meta.set("train.target_mse", cfg.target_mse);
  meta.set("train.momentum", cfg.momentum);
  meta.set("dataset.mode", to_string(data.mode));
  meta.set("dataset.seed", data.seed);
  meta.set("dataset.samples", static_cast<std::uint64_t>(data.size()));
  meta.set("epochs_run", static_cast<std::uint64_t>(result.loss_history.size()));
  meta.set("final_mse", result.loss_history.empty() ? 0.0 : result.loss_history.back());
  meta.save(weights_path + ".meta");
}

void run_repro(const ExperimentConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path root(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + cfg.output_dir + ": " + ec.message());
  cfg.to_keyvalues().save((root / "config.used").string());

  log << "synth: " << to_string(cfg.synth) << " scene, seed " << cfg.synth_seed << std::endl;
  const FringeStack stack = synthesize(cfg.scene, cfg.synth, cfg.synth_seed);
  save_stack((root / "stack").string(), stack);

  log << "truth: unwrap and plane fit" << std::endl;
  const PhaseMap truth = make_ground_truth(stack);
  save_phase_map((root / "truth.pmap").string(), truth);

  log << "build: " << to_string(cfg.dataset.mode) << " dataset, seed " << cfg.dataset.seed << std::endl;
  const DatasetSplit split = build_dataset(stack, truth, cfg.dataset);
  save_dataset((root / "train.pwds").string(), split.train);
  save_dataset((root / "test.pwds").string(), split.test);
  log << "       " << split.train.size() << " training samples, " << split.test.size() << " test samples"
      << std::endl;

  log << "train: " << cfg.train.iterations << " iterations max, seed " << cfg.train.seed << std::endl;
  const TrainResult trained = train(split.train, cfg.train);
  const std::string weights = (root / "weights.pwnn").string();
  save_weights(weights, trained.net);
  save_training_log(weights, split.train, cfg.train, trained);
  log << "       " << trained.loss_history.size() << " iterations run, final mse " << trained.loss_history.back()
      << std::endl;

  log << "eval: " << cfg.variations.size() << " scenes, seed " << cfg.eval_seed << std::endl;
  std::vector<SceneVariation> variations;
  for (const auto& name : cfg.variations) variations.push_back(variation_by_name(name));
  SweepOptions sweep;
  sweep.synth = cfg.synth;
  sweep.seed = cfg.eval_seed;
  sweep.compare.accelerated = cfg.dataset.mode == DatasetMode::Accelerated;
  sweep.compare.profile_row = cfg.profile_row;
  std::vector<NamedReport> named;
  for (auto& entry : generalization_sweep(cfg.scene, variations, trained.net, sweep))
    named.push_back({entry.name, std::move(entry.reports)});
  emit(named, cfg.output_dir);
  for (const auto& n : named)
    log << "       " << n.scene << ": PWLS mse " << n.reports.pwls.mse << ", PWPPE mse " << n.reports.pwppe.mse
        << std::endl;
}

}  // namespace pwppe
