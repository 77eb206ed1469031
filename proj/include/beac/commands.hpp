#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "beac/config.hpp"
#include "beac/eval.hpp"

namespace beac::app {

// Writes paths.dataset with demo.kind. When demo.kind is switching and
// paths.noswitch_dataset is set, the no-switch dataset is written too from
// the same episode seeds.
struct CollectOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<double> success_rates;  // fraction, one per file
};
CollectOutcome cmd_collect(const ExperimentConfig& config, std::ostream& log);

// Trains every planned run on the training part of its dataset split. Writes
// "<stem>.ckpt", "<stem>.log.csv" and "<stem>.time.json" under
// paths.checkpoints. The checkpoint and log are deterministic; timing lives
// only in the sidecar.
std::vector<std::filesystem::path> cmd_train(const ExperimentConfig& config, std::ostream& log);

struct EvalOutcome {
  eval::EvalReport report;
  std::vector<std::filesystem::path> files;
};

struct EvalOptions {
  bool export_beliefs = false;
  eval::Execution execution = eval::Execution::parallel;
};

// Evaluates every planned run. Missing checkpoints raise MissingCheckpoints
// before any rollout. Writes eval_report.csv, eval_summary.csv and
// eval_table.txt under paths.reports; with a k sweep also ksweep_table.txt
// (which carries training times and is therefore not reproducible byte for
// byte).
EvalOutcome cmd_eval(const ExperimentConfig& config, const EvalOptions& options, std::ostream& log);

class MissingCheckpoints : public std::runtime_error {
 public:
  explicit MissingCheckpoints(std::vector<std::filesystem::path> missing);
  const std::vector<std::filesystem::path>& missing() const { return missing_; }

 private:
  std::vector<std::filesystem::path> missing_;
};

// Split shared by cmd_train and cmd_eval.
demo::Split training_split(const demo::Dataset& dataset, const ExperimentConfig& config);

std::filesystem::path checkpoint_path(const ExperimentConfig& config, const RunSpec& run);
std::filesystem::path timing_path(const ExperimentConfig& config, const RunSpec& run);

}  // namespace beac::app
