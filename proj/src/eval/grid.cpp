#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

#include "beac/eval.hpp"
#include "beac/rng.hpp"

namespace beac::eval {

std::uint64_t rollout_seed(std::uint64_t eval_seed, std::uint64_t model_seed, int episode) {
  return mix_seed(mix_seed(eval_seed, model_seed), static_cast<std::uint64_t>(episode));
}

Stat mean_std(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (auto v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (auto v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  s.defined = true;
  return s;
}

const VariantSummary* EvalReport::find(const std::string& variant, int k) const {
  for (const auto& s : summaries)
    if (s.variant == variant && s.k == k) return &s;
  return nullptr;
}

namespace {

struct EntryMetrics {
  std::optional<double> mode_acc;
  std::optional<double> action_loss;
};

EntryMetrics entry_metrics(const GridEntry& e) {
  EntryMetrics m;
  if (e.heldout == nullptr) return m;
  if (e.model->variant().mode_switching && e.heldout->kind != demo::DemonstratorKind::no_switch) {
    m.mode_acc = mode_accuracy(*e.model, *e.heldout);
  }
  m.action_loss = action_pred_loss(*e.model, *e.heldout);
  return m;
}

int variant_rank(const std::string& name) {
  const auto& order = model::MethodVariant::table_order();
  return static_cast<int>(std::find(order.begin(), order.end(), name) - order.begin());
}

}  // namespace

EvalReport evaluate_grid(const std::vector<GridEntry>& entries, const env::EnvConfig& config,
                         const GridOptions& options) {
  if (entries.empty()) throw std::invalid_argument("evaluate_grid: no checkpoints");
  if (options.n_rollouts < 1) throw std::invalid_argument("evaluate_grid: n_rollouts must be >= 1");
  const auto n_roll = static_cast<std::size_t>(options.n_rollouts);
  const std::size_t n_tasks = entries.size() * n_roll;

  std::vector<EpisodeRecord> records(n_tasks);
  auto run_task = [&](std::size_t task) {
    const auto& e = entries[task / n_roll];
    const int episode = static_cast<int>(task % n_roll);
    const auto r = rollout(*e.model, e.model->variant(), config, rollout_seed(options.eval_seed, e.seed, episode));
    records[task] = EpisodeRecord{e.model->variant().name(), e.model->k(), e.seed, episode,
                                  r.success, r.switch_step, r.final_distance};
  };
  std::vector<EntryMetrics> metrics(entries.size());

  if (options.execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < static_cast<long>(n_tasks); ++t) run_task(static_cast<std::size_t>(t));
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(entries.size()); ++i)
      metrics[static_cast<std::size_t>(i)] = entry_metrics(entries[static_cast<std::size_t>(i)]);
  } else {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
    for (std::size_t i = 0; i < entries.size(); ++i) metrics[i] = entry_metrics(entries[i]);
  }

  // Group by (variant, k) after a deterministic sort.
  std::vector<std::size_t> idx(entries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto key = [&](std::size_t i) {
    const auto& m = *entries[i].model;
    return std::tuple(variant_rank(m.variant().name()), -m.k(), entries[i].seed, entries[i].label);
  };
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key(a) < key(b); });

  EvalReport report;
  std::map<std::pair<int, int>, std::size_t> group_of;
  std::vector<std::vector<double>> mode_vals, loss_vals;
  for (auto i : idx) {
    const auto& m = *entries[i].model;
    const auto gk = std::pair(variant_rank(m.variant().name()), -m.k());
    auto [it, inserted] = group_of.emplace(gk, report.summaries.size());
    if (inserted) {
      VariantSummary s;
      s.variant = m.variant().name();
      s.k = m.k();
      s.n_rollouts = n_roll;
      report.summaries.push_back(s);
      mode_vals.emplace_back();
      loss_vals.emplace_back();
    }
    auto& s = report.summaries[it->second];
    std::size_t wins = 0;
    for (std::size_t r = 0; r < n_roll; ++r) {
      const auto& rec = records[i * n_roll + r];
      wins += rec.success ? 1 : 0;
      report.episodes.push_back(rec);
    }
    s.seeds.push_back(entries[i].seed);
    s.seed_success.push_back(100.0 * static_cast<double>(wins) / static_cast<double>(n_roll));
    if (metrics[i].mode_acc) mode_vals[it->second].push_back(*metrics[i].mode_acc);
    if (metrics[i].action_loss) loss_vals[it->second].push_back(*metrics[i].action_loss);
  }
  for (std::size_t g = 0; g < report.summaries.size(); ++g) {
    auto& s = report.summaries[g];
    s.n_seeds = s.seeds.size();
    s.success = mean_std(s.seed_success);
    s.mode_acc = mean_std(mode_vals[g]);
    s.action_loss = mean_std(loss_vals[g]);
  }
  return report;
}

namespace {

std::string fmt(double v, int precision = 17) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string display(const std::string& variant) { return model::MethodVariant::from_name(variant).display_name(); }

}  // namespace

std::string report_csv(const EvalReport& report, const nlohmann::json& provenance) {
  std::ostringstream os;
  os << "# schema_version=1 config=" << provenance.dump() << '\n';
  os << "variant,k,seed,episode,success,switch_step,final_distance\n";
  for (const auto& e : report.episodes) {
    os << e.variant << ',' << e.k << ',' << e.seed << ',' << e.episode << ',' << (e.success ? 1 : 0) << ','
       << e.switch_step << ',' << fmt(e.final_distance) << '\n';
  }
  // Aggregate rows: success column holds the mean success rate in percent.
  for (const auto& s : report.summaries) {
    os << s.variant << ',' << s.k << ",all,mean," << fmt(s.success.mean) << ",,\n";
    os << s.variant << ',' << s.k << ",all,std," << fmt(s.success.std) << ",,\n";
  }
  return os.str();
}

std::string summary_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "variant,k,n_seeds,n_rollouts,success_mean,success_std,mode_acc_mean,mode_acc_std,action_loss_mean,"
        "action_loss_std\n";
  auto opt = [](const Stat& s, double v) { return s.defined ? fmt(v) : std::string(); };
  for (const auto& s : report.summaries) {
    os << s.variant << ',' << s.k << ',' << s.n_seeds << ',' << s.n_rollouts << ',' << fmt(s.success.mean) << ','
       << fmt(s.success.std) << ',' << opt(s.mode_acc, s.mode_acc.mean) << ',' << opt(s.mode_acc, s.mode_acc.std)
       << ',' << opt(s.action_loss, s.action_loss.mean) << ',' << opt(s.action_loss, s.action_loss.std) << '\n';
  }
  return os.str();
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Method" << std::setw(6) << "k" << std::setw(20) << "Success rate [%]"
     << std::setw(22) << "Mode pred. acc. [%]" << "Action pred. loss\n";
  for (const auto& s : report.summaries) {
    const auto mode = s.mode_acc.defined ? fixed(s.mode_acc.mean, 1) + " +- " + fixed(s.mode_acc.std, 2) : "--";
    const auto loss =
        s.action_loss.defined ? fixed(s.action_loss.mean, 4) + " +- " + fixed(s.action_loss.std, 4) : "--";
    os << std::left << std::setw(18) << display(s.variant) << std::setw(6) << s.k << std::setw(20)
       << (fixed(s.success.mean, 0) + " +- " + fixed(s.success.std, 1)) << std::setw(22) << mode << loss << '\n';
  }
  return os.str();
}

std::string ksweep_table(const EvalReport& report, const std::vector<int>& ks,
                         const std::vector<std::pair<int, double>>& train_seconds) {
  auto sorted = ks;
  std::sort(sorted.rbegin(), sorted.rend());
  std::ostringstream os;
  os << std::left << std::setw(18) << "Method";
  for (int k : sorted) os << std::setw(16) << ("k=" + std::to_string(k));
  os << '\n';
  for (const auto& name : model::MethodVariant::table_order()) {
    bool any = false;
    for (int k : sorted) any = any || report.find(name, k) != nullptr;
    if (!any || !model::MethodVariant::from_name(name).uses_regularizer()) continue;
    os << std::left << std::setw(18) << display(name);
    for (int k : sorted) {
      const auto* s = report.find(name, k);
      os << std::setw(16) << (s ? fixed(s->success.mean, 0) + " +- " + fixed(s->success.std, 1) : "--");
    }
    os << '\n';
  }
  os << std::left << std::setw(18) << "Training time";
  for (int k : sorted) {
    auto it = std::find_if(train_seconds.begin(), train_seconds.end(), [&](const auto& p) { return p.first == k; });
    os << std::setw(16) << (it != train_seconds.end() ? fixed(it->second, 1) + " [sec]" : "--");
  }
  os << '\n';
  return os.str();
}

}  // namespace beac::eval
