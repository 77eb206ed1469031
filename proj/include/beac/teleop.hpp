#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "beac/dataset.hpp"
#include "beac/push_env.hpp"
#include "json.hpp"

namespace beac::app {

inline constexpr int kWireVersion = 1;

// State and bookkeeping of one teleoperation connection.
//
// Inbound messages (JSON objects, "v" optional but must equal 1 if present):
//   {"type":"action","dx":..,"dy":..}  latest action wins; applied on next tick
//   {"type":"toggle_mode"}             flips the mode from the next step on
//   {"type":"reset","seed":n?}         new episode
//   {"type":"save_episode"}            appends the episode to the dataset file
// Outbound: "state" views every tick, "ack" / "saved" / "error" replies.
class TeleopSession {
 public:
  TeleopSession(env::EnvConfig config, std::filesystem::path dataset_path, bool reveal_object,
                std::uint64_t seed);

  // Reply to one raw inbound message (always an object with "type").
  nlohmann::json handle_text(const std::string& text);
  nlohmann::json handle(const nlohmann::json& message);

  // Applies the pending action, if any, and returns the state view.
  nlohmann::json tick();
  nlohmann::json view() const;

  demo::Mode mode() const { return mode_; }
  std::size_t steps() const { return trajectory_.steps(); }
  const demo::Trajectory& trajectory() const { return trajectory_; }
  bool finished() const;

 private:
  nlohmann::json reset(std::optional<std::uint64_t> seed);
  nlohmann::json save();

  env::EnvConfig config_;
  std::filesystem::path dataset_path_;
  bool reveal_;
  std::uint64_t base_seed_;
  std::uint64_t episode_counter_ = 0;
  std::uint64_t episode_seed_ = 0;
  env::PushEnv env_;
  demo::Trajectory trajectory_;
  demo::Mode mode_ = demo::Mode::exploration;
  std::optional<env::Action> pending_;
};

nlohmann::json error_message(const std::string& what);

}  // namespace beac::app
