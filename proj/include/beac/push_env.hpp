#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "json.hpp"

// Planar invisible-object pushing task: a disc end-effector pushes a disc
// object it cannot see toward a fixed goal. Contacts are resolved
// quasi-statically so every outcome has a closed form.
namespace beac::env {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

inline constexpr std::size_t kObsDim = 6;
inline constexpr std::size_t kActDim = 2;

struct EnvConfig {
  double sigma = 0.10;              // half-width of the uniform object noise, per axis
  double success_threshold = 0.10;  // object-goal distance must be strictly below this
  int horizon = 400;                // maximum number of steps per episode
  double obj_radius = 0.03;
  double ee_radius = 0.02;
  Vec2 goal_pos{0.20, 0.0};
  Vec2 nominal_obj_pos{-0.15, 0.0};
  Vec2 home_pos{-0.23, -0.17};
  double a_max = 0.01;
  double workspace_half_width = 0.5;
  double contact_gain = 100.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  double contact_distance() const { return obj_radius + ee_radius; }
  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

struct Action {
  double dx = 0.0;
  double dy = 0.0;
  friend bool operator==(const Action&, const Action&) = default;
};

struct Observation {
  Vec2 ee_pos;
  Vec2 ee_vel;
  Vec2 contact_force;  // reaction force sensed at the end-effector

  std::array<double, kObsDim> to_array() const {
    return {ee_pos.x, ee_pos.y, ee_vel.x, ee_vel.y, contact_force.x, contact_force.y};
  }
  static Observation from_array(const std::array<double, kObsDim>& a) {
    return {{a[0], a[1]}, {a[2], a[3]}, {a[4], a[5]}};
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct EnvState {
  Vec2 ee_pos;
  Vec2 ee_vel;
  Vec2 obj_pos;  // latent: never copied into an Observation
  double obj_radius = 0.03;
  double ee_radius = 0.02;
  Vec2 goal_pos;
  int step_count = 0;
  Vec2 contact_force;  // force sensed during the last step

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

Action clip_action(Action a, double a_max);

EnvState initial_state(const EnvConfig& config, Vec2 obj_pos);
// Home pose plus a seeded object placement (rejection-sampled inside the workspace).
EnvState sample_initial_state(const EnvConfig& config, std::uint64_t seed);
// The observation function: a total map that reads only proprioception and contact.
Observation make_observation(const EnvState& state);
// The transition function. Pure.
EnvState step_dynamics(const EnvState& state, Action action, const EnvConfig& config);
bool is_success(const EnvState& state, const EnvConfig& config);

class PushEnv {
 public:
  explicit PushEnv(EnvConfig config);

  Observation reset(std::uint64_t seed);
  Observation step(Action action);

  const Observation& observation() const { return obs_; }
  bool is_success() const;
  // Scoring only; policies never see it.
  double object_goal_distance() const;
  int step_count() const { return state_.step_count; }
  bool at_horizon() const { return state_.step_count >= config_.horizon; }
  const EnvConfig& config() const { return config_; }

 private:
  friend class OracleAccess;

  EnvConfig config_;
  EnvState state_;
  Observation obs_;
};

}  // namespace beac::env
