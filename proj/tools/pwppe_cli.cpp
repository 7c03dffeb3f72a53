#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "pwppe/dataset.hpp"
#include "pwppe/estimator.hpp"
#include "pwppe/eval_report.hpp"
#include "pwppe/experiment.hpp"
#include "pwppe/phase_core.hpp"

using namespace pwppe;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : ExperimentConfig::load(path);
}

void require_distinct(const std::vector<std::string>& inputs, const std::string& output) {
  namespace fs = std::filesystem;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    std::error_code ec;
    if (fs::exists(output) && fs::equivalent(in, output, ec))
      throw ConfigError("output '" + output + "' would overwrite input '" + in + "'");
    const auto a = fs::absolute(in).lexically_normal();
    const auto b = fs::absolute(output).lexically_normal();
    if (a == b) throw ConfigError("output '" + output + "' would overwrite input '" + in + "'");
    if (fs::is_directory(a)) {
      const auto rel = b.lexically_relative(a);
      if (!rel.empty() && *rel.begin() != "..")
        throw ConfigError("output '" + output + "' lies inside input directory '" + in + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-wise phase estimation for phase-shifted fringe images"};
  app.require_subcommand(1);

  std::string config_path, out, stack_dir, truth_path, weights_path, data_path;

  auto* synth = app.add_subcommand("synth", "Synthesize a phase-shifted fringe stack directory");
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("-c,--config", config_path, "Experiment config (scene.* keys are used)")->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Noise seed (overrides scene.seed)");
  synth->add_option("-o,--out", out, "Output stack directory")->required();

  auto* truth = app.add_subcommand("truth", "Build plane-fitted ground truth from a stack");
  truth->add_option("-s,--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
  truth->add_option("-o,--out", out, "Output phase map")->required();

  auto* build = app.add_subcommand("build", "Write train.pwds and test.pwds from a stack and its truth");
  BuildOptions build_opts;
  std::string mode_name = to_string(build_opts.mode);
  bool build_csv = false;
  build->add_option("-s,--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
  build->add_option("-t,--truth", truth_path, "Ground-truth phase map")->required()->check(CLI::ExistingFile);
  build->add_option("-m,--mode", mode_name, "plain, augmented or accelerated")->capture_default_str();
  build->add_option("-f,--fraction", build_opts.sample_fraction, "Fraction of the training pool kept")
      ->capture_default_str();
  build->add_option("--train-fraction", build_opts.train_fraction, "Fraction of valid pixels used for training")
      ->capture_default_str();
  build->add_option("--seed", build_opts.seed, "Split and subsampling seed")->capture_default_str();
  build->add_flag("--csv", build_csv, "Also export both datasets as CSV");
  build->add_option("-o,--out", out, "Output directory")->required();

  auto* trn = app.add_subcommand("train", "Train a network; writes weights, <weights>.loss.csv and <weights>.meta");
  TrainConfig train_cfg;
  std::string optimizer_name = to_string(train_cfg.optimizer);
  trn->add_option("-d,--data", data_path, "Training dataset")->required()->check(CLI::ExistingFile);
  trn->add_option("-c,--config", config_path, "Experiment config (train.* keys are used)")->check(CLI::ExistingFile);
  auto* it_opt = trn->add_option("--iterations", train_cfg.iterations, "Maximum passes over the data");
  auto* lr_opt = trn->add_option("--lr", train_cfg.learning_rate, "Learning rate");
  auto* batch_opt = trn->add_option("--batch", train_cfg.batch_size, "Mini-batch size");
  auto* seed_opt = trn->add_option("--seed", train_cfg.seed, "Initialisation and shuffling seed");
  auto* opt_opt = trn->add_option("--optimizer", optimizer_name, "sgd, momentum or adam");
  auto* target_opt = trn->add_option("--target-mse", train_cfg.target_mse, "Stop once training mse is at or below");
  trn->add_option("-o,--out", out, "Output weight file")->required();

  auto* solve = app.add_subcommand("solve", "Wrapped phase of a stack; PWPPE also writes <out>.selftest");
  std::string method = "pwppe";
  bool accelerated = false;
  std::optional<double> threshold;
  solve->add_option("-s,--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
  solve->add_option("-w,--weights", weights_path, "Network weights (pwppe only)")->check(CLI::ExistingFile);
  solve->add_option("--method", method, "pwls or pwppe")
      ->check(CLI::IsMember({"pwls", "pwppe"}))
      ->capture_default_str();
  solve->add_flag("--accelerated", accelerated, "Network was trained on rotate-to-max inputs");
  solve->add_option("--self-test-threshold", threshold, "Mask pixels with |self-test - 1| above this");
  solve->add_option("-o,--out", out, "Output phase map")->required();

  auto* eval = app.add_subcommand("eval", "Compare PWLS and PWPPE against a truth map; writes the report set");
  std::optional<std::size_t> row;
  double period = 0.0;
  eval->add_option("-s,--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("-t,--truth", truth_path, "Ground-truth phase map")->required()->check(CLI::ExistingFile);
  eval->add_option("-w,--weights", weights_path, "Network weights")->required()->check(CLI::ExistingFile);
  eval->add_flag("--accelerated", accelerated, "Network was trained on rotate-to-max inputs");
  eval->add_option("--row", row, "Row used for the error profile (default: middle)");
  eval->add_option("--period", period, "Fringe period in pixels (default: from the stack)");
  eval->add_option("-o,--out", out, "Output directory")->required();

  auto* repro = app.add_subcommand("repro", "synth, truth, build, train and eval in one run");
  repro->add_option("-c,--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  repro->add_option("-o,--out", out, "Output directory (overrides eval.output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::Config);
  }

  try {
    if (*synth) {
      ExperimentConfig cfg = config_or_default(config_path);
      const FringeStack stack = synthesize(cfg.scene, cfg.synth, synth_seed.value_or(cfg.synth_seed));
      save_stack(out, stack);
    } else if (*truth) {
      require_distinct({stack_dir}, out);
      save_phase_map(out, make_ground_truth(load_stack(stack_dir)));
    } else if (*build) {
      require_distinct({stack_dir, truth_path}, out);
      build_opts.mode = parse_dataset_mode(mode_name);
      if (!(build_opts.sample_fraction > 0.0 && build_opts.sample_fraction <= 1.0))
        throw ConfigError("--fraction must lie in (0, 1]");
      if (!(build_opts.train_fraction > 0.0 && build_opts.train_fraction < 1.0))
        throw ConfigError("--train-fraction must lie in (0, 1)");
      const DatasetSplit split = build_dataset(load_stack(stack_dir), load_phase_map(truth_path), build_opts);
      std::error_code ec;
      std::filesystem::create_directories(out, ec);
      if (ec) throw IoError("cannot create directory " + out + ": " + ec.message());
      const std::filesystem::path dir(out);
      save_dataset((dir / "train.pwds").string(), split.train);
      save_dataset((dir / "test.pwds").string(), split.test);
      if (build_csv) {
        export_dataset_csv((dir / "train.csv").string(), split.train);
        export_dataset_csv((dir / "test.csv").string(), split.test);
      }
    } else if (*trn) {
      require_distinct({data_path}, out);
      TrainConfig cfg = config_path.empty() ? TrainConfig{} : ExperimentConfig::load(config_path).train;
      // explicit flags win over the config file
      if (it_opt->count()) cfg.iterations = train_cfg.iterations;
      if (lr_opt->count()) cfg.learning_rate = train_cfg.learning_rate;
      if (batch_opt->count()) cfg.batch_size = train_cfg.batch_size;
      if (seed_opt->count()) cfg.seed = train_cfg.seed;
      if (opt_opt->count()) cfg.optimizer = parse_optimizer(optimizer_name);
      if (target_opt->count()) cfg.target_mse = train_cfg.target_mse;
      cfg.validate();
      const Dataset data = load_dataset(data_path);
      const TrainResult result = train(data, cfg);
      save_weights(out, result.net);
      save_training_log(out, data, cfg, result);
      std::cout << "iterations " << result.loss_history.size() << ", final mse " << result.loss_history.back()
                << "\n";
    } else if (*solve) {
      require_distinct({stack_dir, weights_path}, out);
      const FringeStack stack = load_stack(stack_dir);
      if (method == "pwls") {
        save_phase_map(out, pwls_solve(stack));
      } else {
        if (weights_path.empty()) throw ConfigError("--weights is required for --method pwppe");
        InferenceOptions opts;
        opts.accelerated = accelerated;
        opts.self_test_threshold = threshold;
        const PwppeSolution sol = pwppe_solve(stack, load_weights(weights_path), opts);
        save_phase_map(out, sol.phase);
        save_self_test_map(out + ".selftest", sol.self_test);
      }
    } else if (*eval) {
      require_distinct({stack_dir, truth_path, weights_path}, out);
      CompareOptions opts;
      opts.accelerated = accelerated;
      opts.profile_row = row;
      opts.fringe_period = period;
      const ReportPair pair = compare(load_stack(stack_dir), load_phase_map(truth_path), load_weights(weights_path), opts);
      emit(pair, out);
      std::cout << "PWLS  mse " << pair.pwls.mse << " rms " << pair.pwls.rms << "\n"
                << "PWPPE mse " << pair.pwppe.mse << " rms " << pair.pwppe.rms << "\n";
    } else if (*repro) {
      ExperimentConfig cfg = ExperimentConfig::load(config_path);
      if (!out.empty()) cfg.output_dir = out;
      run_repro(cfg, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  }
  return 0;
}
