#include "beac/dataset.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "beac/checkpoint.hpp"
#include "beac/rng.hpp"

namespace beac::demo {

using nlohmann::json;

std::string to_string(DemonstratorKind kind) {
  switch (kind) {
    case DemonstratorKind::switching: return "switching";
    case DemonstratorKind::no_switch: return "no-switch";
    case DemonstratorKind::human: return "human";
  }
  return "unknown";
}

DemonstratorKind demonstrator_kind_from_string(const std::string& s) {
  if (s == "switching") return DemonstratorKind::switching;
  if (s == "no-switch") return DemonstratorKind::no_switch;
  if (s == "human") return DemonstratorKind::human;
  throw std::invalid_argument("unknown demonstrator kind '" + s + "'");
}

void Trajectory::validate() const {
  if (actions.empty()) throw std::invalid_argument("trajectory has no steps");
  if (observations.size() != actions.size() + 1) throw std::invalid_argument("trajectory needs |observations| = |actions| + 1");
  if (modes.size() != actions.size()) throw std::invalid_argument("trajectory needs |modes| = |actions|");
}

std::array<double, env::kObsDim> NormalizationStats::normalize(const env::Observation& o) const {
  auto a = o.to_array();
  for (std::size_t i = 0; i < env::kObsDim; ++i) a[i] = (a[i] - obs_mean[i]) / obs_std[i];
  return a;
}

std::array<double, env::kActDim> NormalizationStats::normalize(const env::Action& a) const {
  return {(a.dx - act_mean[0]) / act_std[0], (a.dy - act_mean[1]) / act_std[1]};
}

env::Observation NormalizationStats::denormalize_obs(const std::array<double, env::kObsDim>& z) const {
  std::array<double, env::kObsDim> a{};
  for (std::size_t i = 0; i < env::kObsDim; ++i) a[i] = z[i] * obs_std[i] + obs_mean[i];
  return env::Observation::from_array(a);
}

env::Action NormalizationStats::denormalize_act(const std::array<double, env::kActDim>& z) const {
  return {z[0] * act_std[0] + act_mean[0], z[1] * act_std[1] + act_mean[1]};
}

void to_json(json& j, const NormalizationStats& s) {
  j = json{{"obs_mean", s.obs_mean}, {"obs_std", s.obs_std}, {"act_mean", s.act_mean}, {"act_std", s.act_std}};
}

void from_json(const json& j, NormalizationStats& s) {
  j.at("obs_mean").get_to(s.obs_mean);
  j.at("obs_std").get_to(s.obs_std);
  j.at("act_mean").get_to(s.act_mean);
  j.at("act_std").get_to(s.act_std);
}

NormalizationStats compute_stats(const std::vector<Trajectory>& trajectories) {
  NormalizationStats s;
  std::array<double, env::kObsDim> osum{}, osq{};
  std::array<double, env::kActDim> asum{}, asq{};
  std::size_t on = 0, an = 0;
  for (const auto& tr : trajectories) {
    for (const auto& o : tr.observations) {
      const auto v = o.to_array();
      for (std::size_t i = 0; i < env::kObsDim; ++i) osum[i] += v[i];
      ++on;
    }
    for (const auto& a : tr.actions) {
      asum[0] += a.dx;
      asum[1] += a.dy;
      ++an;
    }
  }
  if (on == 0) return s;
  for (std::size_t i = 0; i < env::kObsDim; ++i) s.obs_mean[i] = osum[i] / static_cast<double>(on);
  if (an > 0)
    for (std::size_t i = 0; i < env::kActDim; ++i) s.act_mean[i] = asum[i] / static_cast<double>(an);
  for (const auto& tr : trajectories) {
    for (const auto& o : tr.observations) {
      const auto v = o.to_array();
      for (std::size_t i = 0; i < env::kObsDim; ++i) osq[i] += (v[i] - s.obs_mean[i]) * (v[i] - s.obs_mean[i]);
    }
    for (const auto& a : tr.actions) {
      asq[0] += (a.dx - s.act_mean[0]) * (a.dx - s.act_mean[0]);
      asq[1] += (a.dy - s.act_mean[1]) * (a.dy - s.act_mean[1]);
    }
  }
  auto fix = [](double var) {
    const double sd = std::sqrt(var);
    return sd < 1e-8 ? 1.0 : sd;
  };
  for (std::size_t i = 0; i < env::kObsDim; ++i) s.obs_std[i] = fix(osq[i] / static_cast<double>(on));
  if (an > 0)
    for (std::size_t i = 0; i < env::kActDim; ++i) s.act_std[i] = fix(asq[i] / static_cast<double>(an));
  return s;
}

std::size_t Dataset::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps();
  return n;
}

DatasetFormatError::DatasetFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("dataset line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

json trajectory_to_json(const Trajectory& tr, std::size_t episode) {
  json obs = json::array();
  for (const auto& o : tr.observations) obs.push_back(o.to_array());
  json acts = json::array();
  for (const auto& a : tr.actions) acts.push_back({a.dx, a.dy});
  json modes = json::array();
  for (auto m : tr.modes) modes.push_back(static_cast<int>(m));
  return json{{"episode", episode}, {"seed", tr.seed},   {"success", tr.success},
              {"observations", obs}, {"actions", acts}, {"modes", modes}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory tr;
  tr.seed = j.at("seed").get<std::uint64_t>();
  tr.success = j.at("success").get<bool>();
  for (const auto& o : j.at("observations")) {
    if (!o.is_array() || o.size() != env::kObsDim) throw std::invalid_argument("observation must have 6 numbers");
    tr.observations.push_back(env::Observation::from_array(o.get<std::array<double, env::kObsDim>>()));
  }
  for (const auto& a : j.at("actions")) {
    if (!a.is_array() || a.size() != env::kActDim) throw std::invalid_argument("action must have 2 numbers");
    tr.actions.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  for (const auto& m : j.at("modes")) {
    const int v = m.get<int>();
    if (v != 0 && v != 1) throw std::invalid_argument("mode label must be 0 or 1");
    tr.modes.push_back(static_cast<Mode>(v));
  }
  tr.validate();
  for (const auto& o : tr.observations)
    for (auto v : o.to_array())
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite observation value");
  return tr;
}

}  // namespace

std::string encode_dataset(const Dataset& ds) {
  json header{{"format", "beac-dataset"},
              {"schema_version", ds.schema_version},
              {"env_config", ds.env_config},
              {"demonstrator_kind", to_string(ds.kind)},
              {"normalization_stats", ds.stats},
              {"n_trajectories", ds.trajectories.size()},
              {"provenance", ds.provenance}};
  std::string out = header.dump();
  out += '\n';
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    out += trajectory_to_json(ds.trajectories[i], i).dump();
    out += '\n';
  }
  return out;
}

Dataset decode_dataset(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (lineno == 1) {
        if (j.value("format", "") != "beac-dataset") throw std::invalid_argument("header is not a beac-dataset header");
        ds.schema_version = j.at("schema_version").get<int>();
        if (ds.schema_version != kDatasetSchemaVersion)
          throw std::invalid_argument("unsupported schema_version " + std::to_string(ds.schema_version));
        ds.env_config = j.at("env_config").get<env::EnvConfig>();
        ds.kind = demonstrator_kind_from_string(j.at("demonstrator_kind").get<std::string>());
        ds.stats = j.at("normalization_stats").get<NormalizationStats>();
        expected = j.at("n_trajectories").get<std::size_t>();
        ds.provenance = j.value("provenance", json::object());
      } else {
        ds.trajectories.push_back(trajectory_from_json(j));
      }
    } catch (const DatasetFormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw DatasetFormatError(lineno, e.what());
    }
  }
  if (lineno == 0) throw DatasetFormatError(1, "empty dataset file");
  if (ds.trajectories.size() != expected) {
    throw DatasetFormatError(lineno, "header declares " + std::to_string(expected) + " trajectories, found " +
                                         std::to_string(ds.trajectories.size()));
  }
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  ad::write_file_atomic(path, encode_dataset(ds));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(ad::read_file(path)); }

Split split_dataset(const std::vector<Trajectory>& trajectories, double heldout_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_held = static_cast<std::size_t>(std::llround(heldout_fraction * static_cast<double>(order.size())));
  Split s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_held ? s.heldout : s.train).push_back(trajectories[order[i]]);
  }
  return s;
}

}  // namespace beac::demo
