#include "beac/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <memory>
#include <ostream>

#include "beac/checkpoint.hpp"
#include "beac/demonstrator.hpp"
#include "beac/train.hpp"

namespace beac::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json provenance(const ExperimentConfig& config, const std::string& command) {
  return json{{"command", command}, {"config", config}};
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

class DatasetCache {
 public:
  const demo::Dataset& get(const fs::path& path) {
    auto it = cache_.find(path.string());
    if (it == cache_.end()) it = cache_.emplace(path.string(), demo::read_dataset(path)).first;
    return it->second;
  }

 private:
  std::map<std::string, demo::Dataset> cache_;
};

}  // namespace

MissingCheckpoints::MissingCheckpoints(std::vector<fs::path> missing)
    : std::runtime_error([&] {
        std::string msg = "missing checkpoint files:";
        for (const auto& p : missing) msg += "\n  " + p.string();
        return msg;
      }()),
      missing_(std::move(missing)) {}

demo::Split training_split(const demo::Dataset& dataset, const ExperimentConfig& config) {
  return demo::split_dataset(dataset.trajectories, config.eval.heldout_fraction, config.eval.split_seed);
}

fs::path checkpoint_path(const ExperimentConfig& config, const RunSpec& run) {
  return config.paths.checkpoints / (run.stem() + ".ckpt");
}

fs::path timing_path(const ExperimentConfig& config, const RunSpec& run) {
  return config.paths.checkpoints / (run.stem() + ".time.json");
}

CollectOutcome cmd_collect(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  CollectOutcome out;
  auto write_one = [&](demo::DemonstratorKind kind, const fs::path& path) {
    auto result = demo::collect(config.demo.n_episodes, kind, config.demo.seed, config.env);
    result.dataset.provenance = provenance(config, "collect");
    ensure_parent(path);
    demo::write_dataset(path, result.dataset);
    log << "collected " << result.dataset.trajectories.size() << " " << demo::to_string(kind)
        << " episodes, demonstrator success rate " << 100.0 * result.success_rate << "% -> " << path.string()
        << '\n';
    out.files.push_back(path);
    out.success_rates.push_back(result.success_rate);
  };
  write_one(config.demo.kind, config.paths.dataset);
  if (config.demo.kind == demo::DemonstratorKind::switching && !config.paths.noswitch_dataset.empty())
    write_one(demo::DemonstratorKind::no_switch, config.paths.noswitch_dataset);
  return out;
}

std::vector<fs::path> cmd_train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  DatasetCache datasets;
  std::vector<fs::path> written;
  fs::create_directories(config.paths.checkpoints);
  for (const auto& run : planned_runs(config)) {
    const auto variant = model::MethodVariant::from_name(run.variant);
    const auto& data_path = dataset_for(config, variant);
    const auto& dataset = datasets.get(data_path);
    const auto split = training_split(dataset, config);
    auto tc = config.train;
    tc.k = run.k;
    tc.seed = run.seed;

    const auto wall0 = std::chrono::steady_clock::now();
    const double cpu0 = thread_cpu_seconds();
    auto result = model::train(split.train, dataset.stats, variant, tc);
    const double cpu = thread_cpu_seconds() - cpu0;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    auto prov = provenance(config, "train");
    prov["run"] = {{"variant", run.variant}, {"k", run.k}, {"seed", run.seed}};
    prov["dataset"] = data_path.generic_string();
    const auto ckpt = checkpoint_path(config, run);
    ad::save_checkpoint(ckpt, result.model.to_checkpoint(prov));
    const auto log_path = config.paths.checkpoints / (run.stem() + ".log.csv");
    ad::write_file_atomic(log_path, model::training_log_csv(result.log));
    ad::write_file_atomic(timing_path(config, run),
                          json{{"wall_seconds", wall}, {"cpu_seconds", cpu}}.dump(2) + "\n");
    const auto& last = result.log.back().loss;
    log << "trained " << run.stem() << " in " << wall << " s, final L_total " << last.total << " -> "
        << ckpt.string() << '\n';
    written.push_back(ckpt);
  }
  return written;
}

EvalOutcome cmd_eval(const ExperimentConfig& config, const EvalOptions& options, std::ostream& log) {
  config.validate();
  const auto runs = planned_runs(config);
  std::vector<fs::path> missing;
  for (const auto& run : runs)
    if (!fs::exists(checkpoint_path(config, run))) missing.push_back(checkpoint_path(config, run));
  if (!missing.empty()) throw MissingCheckpoints(std::move(missing));

  DatasetCache datasets;
  std::map<std::string, demo::Dataset> heldouts;
  std::vector<std::unique_ptr<model::BeacModel>> models;
  std::vector<eval::GridEntry> entries;
  for (const auto& run : runs) {
    const auto variant = model::MethodVariant::from_name(run.variant);
    auto m = std::make_unique<model::BeacModel>(
        model::BeacModel::from_checkpoint(ad::load_checkpoint(checkpoint_path(config, run))));
    if (!(m->variant() == variant))
      throw std::runtime_error(checkpoint_path(config, run).string() + " holds variant '" + m->variant().name() +
                               "', expected '" + run.variant + "'");
    const auto& data_path = dataset_for(config, variant);
    auto it = heldouts.find(data_path.string());
    if (it == heldouts.end()) {
      auto held = datasets.get(data_path);
      held.trajectories = training_split(held, config).heldout;
      it = heldouts.emplace(data_path.string(), std::move(held)).first;
    }
    entries.push_back(eval::GridEntry{checkpoint_path(config, run).filename().string(), m.get(), run.seed, &it->second});
    models.push_back(std::move(m));
  }

  eval::GridOptions grid;
  grid.n_rollouts = config.eval.n_rollouts;
  grid.eval_seed = config.eval.eval_seed;
  grid.execution = options.execution;

  EvalOutcome out;
  out.report = eval::evaluate_grid(entries, config.env, grid);
  fs::create_directories(config.paths.reports);
  auto emit = [&](const std::string& name, const std::string& text) {
    const auto path = config.paths.reports / name;
    ad::write_file_atomic(path, text);
    out.files.push_back(path);
  };
  emit("eval_report.csv", eval::report_csv(out.report, provenance(config, "eval")));
  emit("eval_summary.csv", eval::summary_csv(out.report));
  const auto table = eval::report_table(out.report);
  emit("eval_table.txt", table);
  log << table;

  if (!config.eval.k_sweep.empty()) {
    std::vector<std::pair<int, double>> seconds;
    const auto timed = std::find_if(config.variants.begin(), config.variants.end(), [](const std::string& v) {
      return model::MethodVariant::from_name(v).uses_regularizer();
    });
    if (timed != config.variants.end()) {
      for (int k : config.eval.k_sweep) {
        double total = 0.0;
        std::size_t n = 0;
        for (const auto& run : runs) {
          if (run.variant != *timed || run.k != k) continue;
          const auto p = timing_path(config, run);
          if (!fs::exists(p)) continue;
          total += json::parse(ad::read_file(p)).at("cpu_seconds").get<double>();
          ++n;
        }
        if (n > 0) seconds.emplace_back(k, total / static_cast<double>(n));
      }
    }
    const auto sweep = eval::ksweep_table(out.report, config.eval.k_sweep, seconds);
    emit("ksweep_table.txt", sweep);
    log << '\n' << sweep;
  }

  if (options.export_beliefs) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& m = *models[i];
      if (!m.variant().mode_switching) continue;
      const auto path = config.paths.reports / ("beliefs_" + runs[i].stem() + ".csv");
      eval::export_beliefs(m, *entries[i].heldout, path);
      out.files.push_back(path);
    }
  }
  for (const auto& f : out.files) log << "wrote " << f.string() << '\n';
  return out;
}

}  // namespace beac::app
