#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beac/push_env.hpp"
#include "json.hpp"

namespace beac::demo {

enum class Mode : std::uint8_t { exploration = 0, task = 1 };

enum class DemonstratorKind { switching, no_switch, human };

std::string to_string(DemonstratorKind kind);
DemonstratorKind demonstrator_kind_from_string(const std::string& s);

// (o_1, a_1, c_1, ..., a_{T-1}, c_{T-1}, o_T)
struct Trajectory {
  std::vector<env::Observation> observations;
  std::vector<env::Action> actions;
  std::vector<Mode> modes;
  bool success = false;
  std::uint64_t seed = 0;

  std::size_t steps() const { return actions.size(); }
  // Throws std::invalid_argument if the length invariant is broken.
  void validate() const;
};

struct NormalizationStats {
  std::array<double, env::kObsDim> obs_mean{};
  std::array<double, env::kObsDim> obs_std{1, 1, 1, 1, 1, 1};
  std::array<double, env::kActDim> act_mean{};
  std::array<double, env::kActDim> act_std{1, 1};

  std::array<double, env::kObsDim> normalize(const env::Observation& o) const;
  std::array<double, env::kActDim> normalize(const env::Action& a) const;
  env::Observation denormalize_obs(const std::array<double, env::kObsDim>& z) const;
  env::Action denormalize_act(const std::array<double, env::kActDim>& z) const;
};

void to_json(nlohmann::json& j, const NormalizationStats& s);
void from_json(const nlohmann::json& j, NormalizationStats& s);

// Per-dimension mean and population std over every observation and action;
// dimensions with std below 1e-8 get std 1.
NormalizationStats compute_stats(const std::vector<Trajectory>& trajectories);

inline constexpr int kDatasetSchemaVersion = 1;

struct Dataset {
  int schema_version = kDatasetSchemaVersion;
  env::EnvConfig env_config;
  DemonstratorKind kind = DemonstratorKind::switching;
  NormalizationStats stats;
  std::vector<Trajectory> trajectories;
  // Resolved experiment configuration of the run that produced the file.
  nlohmann::json provenance = nlohmann::json::object();

  void refresh_stats() { stats = compute_stats(trajectories); }
  std::size_t total_steps() const;
};

class DatasetFormatError : public std::runtime_error {
 public:
  DatasetFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// JSON-Lines: line 1 is the header, every further line one trajectory.
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(const std::string& text);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

// Deterministic 80/20 trajectory split (seed-stable shuffle).
struct Split {
  std::vector<Trajectory> train;
  std::vector<Trajectory> heldout;
};
Split split_dataset(const std::vector<Trajectory>& trajectories, double heldout_fraction, std::uint64_t seed);

}  // namespace beac::demo
