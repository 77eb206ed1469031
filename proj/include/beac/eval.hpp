#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beac/demonstrator.hpp"
#include "beac/model.hpp"

namespace beac::eval {

struct PolicyDecision {
  demo::Mode mode = demo::Mode::task;
  env::Action action;  // consulted only in task mode
};

// Closed-loop controller interface used by rollout(). Implementations see
// observations only.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() = 0;
  virtual bool switching() const = 0;
  virtual PolicyDecision decide(const env::Observation& obs) = 0;
  // The action actually sent to the environment this step (after clipping).
  virtual void executed(const env::Action& action) = 0;
};

class ModelPolicy final : public Policy {
 public:
  explicit ModelPolicy(const model::BeacModel& model);
  void reset() override;
  bool switching() const override { return model_->variant().mode_switching; }
  PolicyDecision decide(const env::Observation& obs) override;
  void executed(const env::Action& action) override { prev_action_ = action; }

 private:
  const model::BeacModel* model_;
  model::BeliefTracker tracker_;
  env::Action prev_action_;
};

struct RolloutResult {
  demo::Trajectory trajectory;  // modes are the policy's decisions
  bool success = false;
  int switch_step = -1;  // first step in task mode, -1 if never
  double final_distance = 0.0;
};

// Testing phase: observe, update belief, pick a mode; mode 0 runs the
// exploration script from its own step counter (which resumes, not restarts,
// on re-entry), mode 1 runs the policy's action. Stops on success or horizon.
RolloutResult rollout(Policy& policy, env::PushEnv& env, std::uint64_t env_seed);
RolloutResult rollout(const model::BeacModel& model, const model::MethodVariant& variant,
                      const env::EnvConfig& config, std::uint64_t env_seed);

// Teacher-forced percent of steps whose thresholded mode matches c_t.
double mode_accuracy(const model::BeacModel& model, const demo::Dataset& heldout);
// Teacher-forced mean squared action error in normalized space over c_t = 1
// steps (every step for variants without switching).
double action_pred_loss(const model::BeacModel& model, const demo::Dataset& heldout);

// Seed of rollout `episode` for models trained with `model_seed`. Shared by
// every variant so they face the same object placements.
std::uint64_t rollout_seed(std::uint64_t eval_seed, std::uint64_t model_seed, int episode);

struct GridEntry {
  std::string label;  // checkpoint file name or similar
  const model::BeacModel* model = nullptr;
  std::uint64_t seed = 0;
  const demo::Dataset* heldout = nullptr;  // optional, for prediction metrics
};

struct EpisodeRecord {
  std::string variant;
  int k = 0;
  std::uint64_t seed = 0;
  int episode = 0;
  bool success = false;
  int switch_step = -1;
  double final_distance = 0.0;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population std over seeds
  bool defined = false;
};

struct VariantSummary {
  std::string variant;
  int k = 0;
  std::size_t n_seeds = 0;
  std::size_t n_rollouts = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> seed_success;  // percent per seed
  Stat success;                      // percent
  Stat mode_acc;                     // percent
  Stat action_loss;
};

struct EvalReport {
  std::vector<EpisodeRecord> episodes;
  std::vector<VariantSummary> summaries;  // table order, then k descending
  const VariantSummary* find(const std::string& variant, int k) const;
};

enum class Execution { serial, parallel };

struct GridOptions {
  int n_rollouts = 10;
  std::uint64_t eval_seed = 20240601;
  Execution execution = Execution::parallel;
};

EvalReport evaluate_grid(const std::vector<GridEntry>& entries, const env::EnvConfig& config,
                         const GridOptions& options);

Stat mean_std(const std::vector<double>& values);

std::string report_csv(const EvalReport& report, const nlohmann::json& provenance);
std::string summary_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);
// Success rate per variant for each k (columns in descending k) plus a
// training-time row (seconds per k).
std::string ksweep_table(const EvalReport& report, const std::vector<int>& ks,
                         const std::vector<std::pair<int, double>>& train_seconds);

// One row per action step: belief columns then the mode label.
std::string belief_csv(const model::BeacModel& model, const demo::Dataset& dataset);
void export_beliefs(const model::BeacModel& model, const demo::Dataset& dataset, const std::filesystem::path& out);

}  // namespace beac::eval
