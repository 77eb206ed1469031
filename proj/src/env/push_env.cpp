#include "beac/push_env.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

#include "beac/oracle.hpp"
#include "beac/rng.hpp"

namespace beac::env {

namespace {

std::atomic<std::uint64_t> g_oracle_calls{0};

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("env config field '") + field + "' " + what);
}

bool inside(Vec2 p, double half) { return std::abs(p.x) <= half && std::abs(p.y) <= half; }

Vec2 clamp_to(Vec2 p, double half) { return {std::clamp(p.x, -half, half), std::clamp(p.y, -half, half)}; }

}  // namespace

void EnvConfig::validate() const {
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma", "must be >= 0");
  require(success_threshold > 0.0, "success_threshold", "must be > 0");
  require(horizon > 0, "horizon", "must be > 0");
  require(obj_radius > 0.0, "obj_radius", "must be > 0");
  require(ee_radius > 0.0, "ee_radius", "must be > 0");
  require(a_max > 0.0, "a_max", "must be > 0");
  require(workspace_half_width > 0.0, "workspace_half_width", "must be > 0");
  require(contact_gain > 0.0, "contact_gain", "must be > 0");
  require(inside(goal_pos, workspace_half_width), "goal_pos", "must lie inside the workspace");
  require(inside(home_pos, workspace_half_width), "home_pos", "must lie inside the workspace");
  require(inside(nominal_obj_pos, workspace_half_width), "nominal_obj_pos", "must lie inside the workspace");
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{{"sigma", c.sigma},
                     {"success_threshold", c.success_threshold},
                     {"horizon", c.horizon},
                     {"obj_radius", c.obj_radius},
                     {"ee_radius", c.ee_radius},
                     {"goal_pos", {c.goal_pos.x, c.goal_pos.y}},
                     {"nominal_obj_pos", {c.nominal_obj_pos.x, c.nominal_obj_pos.y}},
                     {"home_pos", {c.home_pos.x, c.home_pos.y}},
                     {"a_max", c.a_max},
                     {"workspace_half_width", c.workspace_half_width},
                     {"contact_gain", c.contact_gain},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  EnvConfig d;
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw std::invalid_argument(std::string("env config field '") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  auto vec = [&](const char* key, Vec2 fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw std::invalid_argument(std::string("env config field '") + key + "' must be a 2-element number array");
    return Vec2{v[0].get<double>(), v[1].get<double>()};
  };
  c.sigma = num("sigma", d.sigma);
  c.success_threshold = num("success_threshold", d.success_threshold);
  if (j.contains("horizon") && !j.at("horizon").is_number_integer())
    throw std::invalid_argument("env config field 'horizon' must be an integer");
  c.horizon = j.value("horizon", d.horizon);
  c.obj_radius = num("obj_radius", d.obj_radius);
  c.ee_radius = num("ee_radius", d.ee_radius);
  c.goal_pos = vec("goal_pos", d.goal_pos);
  c.nominal_obj_pos = vec("nominal_obj_pos", d.nominal_obj_pos);
  c.home_pos = vec("home_pos", d.home_pos);
  c.a_max = num("a_max", d.a_max);
  c.workspace_half_width = num("workspace_half_width", d.workspace_half_width);
  c.contact_gain = num("contact_gain", d.contact_gain);
  if (j.contains("seed") && !j.at("seed").is_number_unsigned())
    throw std::invalid_argument("env config field 'seed' must be a non-negative integer");
  c.seed = j.value("seed", d.seed);
}

Action clip_action(Action a, double a_max) {
  auto clip = [&](double v) { return std::isfinite(v) ? std::clamp(v, -a_max, a_max) : 0.0; };
  return {clip(a.dx), clip(a.dy)};
}

EnvState initial_state(const EnvConfig& config, Vec2 obj_pos) {
  EnvState s;
  s.ee_pos = config.home_pos;
  s.obj_pos = obj_pos;
  s.obj_radius = config.obj_radius;
  s.ee_radius = config.ee_radius;
  s.goal_pos = config.goal_pos;
  return s;
}

EnvState sample_initial_state(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double dx = rng.uniform(-config.sigma, config.sigma);
    const double dy = rng.uniform(-config.sigma, config.sigma);
    const Vec2 p = config.nominal_obj_pos + Vec2{dx, dy};
    if (!inside(p, config.workspace_half_width)) continue;
    if ((p - config.home_pos).norm() <= config.contact_distance()) continue;
    return initial_state(config, p);
  }
  throw std::invalid_argument("env config admits no valid object placement");
}

Observation make_observation(const EnvState& state) {
  return Observation{state.ee_pos, state.ee_vel, state.contact_force};
}

EnvState step_dynamics(const EnvState& state, Action action, const EnvConfig& config) {
  const double half = config.workspace_half_width;
  const double reach = state.obj_radius + state.ee_radius;
  const Action a = clip_action(action, config.a_max);

  EnvState next = state;
  next.ee_pos = clamp_to(state.ee_pos + Vec2{a.dx, a.dy}, half);
  next.contact_force = {};

  const Vec2 offset = next.ee_pos - state.obj_pos;
  const double dist = offset.norm();
  const double depth = reach - dist;
  if (depth > 0.0) {
    // Unit normal from end-effector toward the object; the push direction.
    Vec2 n;
    if (dist > 1e-12) {
      n = (-1.0 / dist) * offset;
    } else {
      const Vec2 motion{a.dx, a.dy};
      n = motion.norm() > 0.0 ? (1.0 / motion.norm()) * motion : Vec2{1.0, 0.0};
    }
    next.obj_pos = clamp_to(state.obj_pos + depth * n, half);
    next.contact_force = (-config.contact_gain * depth) * n;

    // Object pinned against the workspace edge: back the end-effector off
    // so the discs end tangent.
    const Vec2 rest = next.ee_pos - next.obj_pos;
    const double rest_dist = rest.norm();
    if (rest_dist < reach) {
      const Vec2 dir = rest_dist > 1e-12 ? (1.0 / rest_dist) * rest : (-1.0) * n;
      next.ee_pos = clamp_to(next.obj_pos + reach * dir, half);
    }
  }
  next.ee_vel = next.ee_pos - state.ee_pos;
  next.step_count = state.step_count + 1;
  return next;
}

bool is_success(const EnvState& state, const EnvConfig& config) {
  return (state.obj_pos - state.goal_pos).norm() < config.success_threshold;
}

PushEnv::PushEnv(EnvConfig config) : config_(config) {
  config_.validate();
  state_ = initial_state(config_, config_.nominal_obj_pos);
  obs_ = make_observation(state_);
}

Observation PushEnv::reset(std::uint64_t seed) {
  state_ = sample_initial_state(config_, seed);
  obs_ = make_observation(state_);
  return obs_;
}

Observation PushEnv::step(Action action) {
  state_ = step_dynamics(state_, action, config_);
  obs_ = make_observation(state_);
  return obs_;
}

bool PushEnv::is_success() const { return env::is_success(state_, config_); }

double PushEnv::object_goal_distance() const { return (state_.obj_pos - state_.goal_pos).norm(); }

EnvState OracleAccess::oracle_state(const PushEnv& env) {
  g_oracle_calls.fetch_add(1, std::memory_order_relaxed);
  return env.state_;
}

std::uint64_t OracleAccess::call_count() { return g_oracle_calls.load(std::memory_order_relaxed); }

}  // namespace beac::env
