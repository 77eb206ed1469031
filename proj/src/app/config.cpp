#include "beac/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "beac/checkpoint.hpp"

namespace beac::app {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw std::invalid_argument("config field '" + field + "' " + what);
}

void reject_unknown(const json& j, const std::string& section, std::initializer_list<const char*> known) {
  if (!j.is_object()) field_error(section.empty() ? "<root>" : section, "must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!names.contains(key)) field_error(section.empty() ? key : section + "." + key, "is not a known field");
  }
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_unsigned()) field_error(section + "." + key, "must be a non-negative integer");
  return j.at(key).get<std::uint64_t>();
}

int get_int(const json& j, const char* key, int fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) field_error(section + "." + key, "must be an integer");
  return j.at(key).get<int>();
}

double get_num(const json& j, const char* key, double fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) field_error(section + "." + key, "must be a number");
  return j.at(key).get<double>();
}

std::string get_str(const json& j, const char* key, const std::string& fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) field_error(section + "." + key, "must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    env.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config section 'env': ") + e.what());
  }
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config section 'train': ") + e.what());
  }
  if (variants.empty()) field_error("variants", "must list at least one variant");
  for (const auto& v : variants) {
    try {
      model::MethodVariant::from_name(v);
    } catch (const std::invalid_argument&) {
      field_error("variants", "has unknown variant '" + v + "'");
    }
  }
  if (demo.n_episodes < 1) field_error("demo.n_episodes", "must be >= 1");
  if (demo.kind == demo::DemonstratorKind::human) field_error("demo.kind", "must be 'switching' or 'no-switch'");
  if (eval.n_rollouts < 1) field_error("eval.n_rollouts", "must be >= 1");
  if (eval.n_seeds < 1) field_error("eval.n_seeds", "must be >= 1");
  if (!(eval.heldout_fraction > 0.0 && eval.heldout_fraction < 1.0))
    field_error("eval.heldout_fraction", "must lie in (0, 1)");
  for (int k : eval.k_sweep)
    if (k < 1) field_error("eval.k_sweep", "entries must be >= 1");
  if (paths.dataset.empty()) field_error("paths.dataset", "must not be empty");
  if (paths.checkpoints.empty()) field_error("paths.checkpoints", "must not be empty");
  if (paths.reports.empty()) field_error("paths.reports", "must not be empty");
}

std::vector<std::uint64_t> ExperimentConfig::train_seeds() const {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < eval.n_seeds; ++i) seeds.push_back(train.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"schema_version", kConfigSchemaVersion},
           {"env", c.env},
           {"train", c.train},
           {"variants", c.variants},
           {"demo",
            {{"n_episodes", c.demo.n_episodes}, {"kind", demo::to_string(c.demo.kind)}, {"seed", c.demo.seed}}},
           {"eval",
            {{"n_rollouts", c.eval.n_rollouts},
             {"n_seeds", c.eval.n_seeds},
             {"eval_seed", c.eval.eval_seed},
             {"heldout_fraction", c.eval.heldout_fraction},
             {"split_seed", c.eval.split_seed},
             {"k_sweep", c.eval.k_sweep}}},
           {"paths",
            {{"dataset", c.paths.dataset.generic_string()},
             {"noswitch_dataset", c.paths.noswitch_dataset.generic_string()},
             {"checkpoints", c.paths.checkpoints.generic_string()},
             {"reports", c.paths.reports.generic_string()}}}};
}

void from_json(const json& j, ExperimentConfig& c) {
  reject_unknown(j, "", {"schema_version", "env", "train", "variants", "variant", "demo", "eval", "paths"});
  c = ExperimentConfig{};
  if (j.contains("schema_version") && j.at("schema_version") != kConfigSchemaVersion)
    field_error("schema_version", "must be " + std::to_string(kConfigSchemaVersion));
  try {
    if (j.contains("env")) c.env = j.at("env").get<env::EnvConfig>();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config section 'env': ") + e.what());
  }
  try {
    if (j.contains("train")) c.train = j.at("train").get<model::TrainConfig>();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config section 'train': ") + e.what());
  }
  if (j.contains("variant") && j.contains("variants")) field_error("variant", "conflicts with 'variants'");
  if (j.contains("variant")) {
    c.variants = {get_str(j, "variant", "", "")};
  } else if (j.contains("variants")) {
    const auto& v = j.at("variants");
    if (!v.is_array()) field_error("variants", "must be an array of names");
    c.variants.clear();
    for (const auto& name : v) {
      if (!name.is_string()) field_error("variants", "must be an array of names");
      c.variants.push_back(name.get<std::string>());
    }
  }
  if (j.contains("demo")) {
    const auto& d = j.at("demo");
    reject_unknown(d, "demo", {"n_episodes", "kind", "seed"});
    if (d.contains("n_episodes") && !d.at("n_episodes").is_number_integer())
      field_error("demo.n_episodes", "must be an integer");
    if (d.contains("n_episodes") && d.at("n_episodes").get<long long>() < 0)
      field_error("demo.n_episodes", "must be >= 1");
    c.demo.n_episodes = d.value("n_episodes", c.demo.n_episodes);
    try {
      c.demo.kind = demo::demonstrator_kind_from_string(get_str(d, "kind", demo::to_string(c.demo.kind), "demo"));
    } catch (const std::exception&) {
      field_error("demo.kind", "must be 'switching' or 'no-switch'");
    }
    c.demo.seed = get_u64(d, "seed", c.demo.seed, "demo");
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    reject_unknown(e, "eval", {"n_rollouts", "n_seeds", "eval_seed", "heldout_fraction", "split_seed", "k_sweep"});
    c.eval.n_rollouts = get_int(e, "n_rollouts", c.eval.n_rollouts, "eval");
    c.eval.n_seeds = get_int(e, "n_seeds", c.eval.n_seeds, "eval");
    c.eval.eval_seed = get_u64(e, "eval_seed", c.eval.eval_seed, "eval");
    c.eval.heldout_fraction = get_num(e, "heldout_fraction", c.eval.heldout_fraction, "eval");
    c.eval.split_seed = get_u64(e, "split_seed", c.eval.split_seed, "eval");
    if (e.contains("k_sweep")) {
      const auto& ks = e.at("k_sweep");
      if (!ks.is_array()) field_error("eval.k_sweep", "must be an array of integers");
      for (const auto& k : ks) {
        if (!k.is_number_integer()) field_error("eval.k_sweep", "must be an array of integers");
        c.eval.k_sweep.push_back(k.get<int>());
      }
    }
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown(p, "paths", {"dataset", "noswitch_dataset", "checkpoints", "reports"});
    c.paths.dataset = get_str(p, "dataset", c.paths.dataset.string(), "paths");
    c.paths.noswitch_dataset = get_str(p, "noswitch_dataset", c.paths.noswitch_dataset.string(), "paths");
    c.paths.checkpoints = get_str(p, "checkpoints", c.paths.checkpoints.string(), "paths");
    c.paths.reports = get_str(p, "reports", c.paths.reports.string(), "paths");
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ad::read_file(path);
  } catch (const std::exception&) {
    throw std::runtime_error("cannot read config file " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

std::string RunSpec::stem() const { return variant + "_k" + std::to_string(k) + "_seed" + std::to_string(seed); }

std::vector<RunSpec> planned_runs(const ExperimentConfig& config) {
  std::vector<RunSpec> runs;
  for (const auto& name : config.variants) {
    std::vector<int> ks{config.train.k};
    if (model::MethodVariant::from_name(name).uses_regularizer()) {
      for (int k : config.eval.k_sweep)
        if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
    const auto seeds = config.train_seeds();
    for (std::size_t i = 0; i < seeds.size(); ++i)
      for (std::size_t j = 0; j < ks.size(); ++j) runs.push_back(RunSpec{name, ks[(i + j) % ks.size()], seeds[i]});
  }
  return runs;
}

const std::filesystem::path& dataset_for(const ExperimentConfig& config, const model::MethodVariant& variant) {
  if (!variant.mode_switching && !config.paths.noswitch_dataset.empty()) return config.paths.noswitch_dataset;
  return config.paths.dataset;
}

}  // namespace beac::app
