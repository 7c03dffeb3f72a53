#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pwppe/dataset.hpp"
#include "pwppe/eval_report.hpp"
#include "pwppe/fringe_synth.hpp"
#include "pwppe/keyvalue.hpp"
#include "pwppe/neural_net.hpp"

namespace pwppe {

/// Flat key=value experiment description. Keys live under scene., dataset., train. and eval.;
/// anything else is rejected.
struct ExperimentConfig {
  SceneSpec scene;
  SynthMode synth = SynthMode::BinaryDefocused;
  std::uint64_t synth_seed = 1;

  BuildOptions dataset;
  TrainConfig train;

  std::vector<std::string> variations{"trained", "group1_focus", "group2_pose", "group3_pose", "group4_exposure"};
  std::uint64_t eval_seed = 7;  // noise realisation of the evaluation scenes
  std::optional<std::size_t> profile_row;
  std::string output_dir = "repro_out";

  static ExperimentConfig from_keyvalues(const KeyValues& kv);
  static ExperimentConfig load(const std::string& path);
  KeyValues to_keyvalues() const;
};

/// Training metadata written next to a weight file: every train.* setting plus the outcome.
void save_training_log(const std::string& weights_path, const Dataset& data, const TrainConfig& cfg,
                       const TrainResult& result);

/// synth -> truth -> build -> train -> eval under cfg.output_dir. Progress lines go to `log`.
void run_repro(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace pwppe
