#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beac/dataset.hpp"
#include "beac/model.hpp"
#include "beac/push_env.hpp"
#include "json.hpp"

namespace beac::app {

inline constexpr int kConfigSchemaVersion = 1;

struct DemoSection {
  std::size_t n_episodes = 100;
  demo::DemonstratorKind kind = demo::DemonstratorKind::switching;
  std::uint64_t seed = 1;
};

struct EvalSection {
  int n_rollouts = 10;
  int n_seeds = 5;
  std::uint64_t eval_seed = 20240601;
  double heldout_fraction = 0.2;
  std::uint64_t split_seed = 7;
  // Extra horizons trained and evaluated for every regularized variant.
  std::vector<int> k_sweep;
};

struct PathsSection {
  std::filesystem::path dataset = "data/demos.jsonl";
  // Used by variants without mode switching when non-empty.
  std::filesystem::path noswitch_dataset = "data/demos_noswitch.jsonl";
  std::filesystem::path checkpoints = "runs/checkpoints";
  std::filesystem::path reports = "runs/reports";
};

struct ExperimentConfig {
  env::EnvConfig env;
  model::TrainConfig train;
  std::vector<std::string> variants{"ours"};
  DemoSection demo;
  EvalSection eval;
  PathsSection paths;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::vector<std::uint64_t> train_seeds() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Missing keys keep their defaults; wrongly typed or unknown keys throw.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);

// One training run: variant, horizon and seed.
struct RunSpec {
  std::string variant;
  int k = 0;
  std::uint64_t seed = 0;

  std::string stem() const;  // "<variant>_k<k>_seed<seed>"
};

// Runs at train.k for every variant, plus every k_sweep horizon for the
// regularized variants, each over train_seeds(). Seed-major, with the
// horizon order rotated by one per seed.
std::vector<RunSpec> planned_runs(const ExperimentConfig& config);

const std::filesystem::path& dataset_for(const ExperimentConfig& config, const model::MethodVariant& variant);

}  // namespace beac::app
