#include "beac/demonstrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "beac/oracle.hpp"
#include "beac/rng.hpp"

namespace beac::demo {

using env::Action;
using env::Vec2;

ExplorationScript ExplorationScript::for_config(const env::EnvConfig& c) {
  ExplorationScript s;
  s.a_max = c.a_max;
  const double reach = c.contact_distance();
  // Lane length mirrors the home pose across the nominal object centre.
  s.lane_steps = std::max(1, static_cast<int>(std::lround(2.0 * (c.nominal_obj_pos.y - c.home_pos.y) / c.a_max)));
  // Spacing leaves at least 1 cm of overlap depth for any object between lanes.
  const double spacing = 2.0 * reach - 0.02;
  s.shift_steps = std::max(1, static_cast<int>(std::floor(spacing / c.a_max + 1e-9)));
  const double span = c.nominal_obj_pos.x + c.sigma - (reach - 0.01) - c.home_pos.x;
  s.n_lanes = 1 + std::max(0, static_cast<int>(std::ceil(span / (s.shift_steps * c.a_max) - 1e-9)));
  return s;
}

std::size_t ExplorationScript::period() const {
  const std::size_t lanes_per_cycle = n_lanes > 1 ? 2 * static_cast<std::size_t>(n_lanes - 1) : 2;
  const std::size_t shifts = n_lanes > 1 ? lanes_per_cycle : 0;
  return lanes_per_cycle * static_cast<std::size_t>(lane_steps) + shifts * static_cast<std::size_t>(shift_steps);
}

Action exploration_action(std::size_t step_index, const ExplorationScript& s) {
  const std::size_t i = step_index % s.period();
  const std::size_t segment = static_cast<std::size_t>(s.lane_steps) + (s.n_lanes > 1 ? static_cast<std::size_t>(s.shift_steps) : 0);
  const std::size_t lane_visit = i / segment;
  const std::size_t within = i % segment;
  if (within < static_cast<std::size_t>(s.lane_steps)) {
    return {0.0, lane_visit % 2 == 0 ? s.a_max : -s.a_max};
  }
  // Shift toward the next lane: rightward on the way out, leftward on the way back.
  const bool outward = lane_visit < static_cast<std::size_t>(s.n_lanes - 1);
  return {outward ? s.a_max : -s.a_max, 0.0};
}

bool switch_condition(const env::Observation& obs, const env::EnvState& oracle) {
  const bool touching = obs.contact_force.norm() > 0.0;
  const double dist = (oracle.ee_pos - oracle.obj_pos).norm();
  return touching && dist < oracle.obj_radius + oracle.ee_radius + kSwitchMargin;
}

Mode SwitchLatch::update(const env::Observation& obs, const env::EnvState& oracle) {
  if (mode_ == Mode::exploration && switch_condition(obs, oracle)) mode_ = Mode::task;
  return mode_;
}

namespace {

Vec2 limit(Vec2 v, double a_max) {
  const double n = v.norm();
  return n > a_max ? (a_max / n) * v : v;
}

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

constexpr double kAlignTolerance = 0.3;  // rad; within this the controller pushes
constexpr double kOrbitClearance = 0.015;
constexpr double kOrbitStride = 0.4;     // rad of arc targeted per step

}  // namespace

Action task_action(const env::EnvState& s, const env::EnvConfig& c) {
  const Vec2 to_goal = s.goal_pos - s.obj_pos;
  const double goal_dist = to_goal.norm();
  if (goal_dist < 1e-9) return {};
  const Vec2 u = (1.0 / goal_dist) * to_goal;
  const double reach = s.obj_radius + s.ee_radius;

  const Vec2 rel = s.ee_pos - s.obj_pos;
  const double cur = std::atan2(rel.y, rel.x);
  const double want = std::atan2(-u.y, -u.x);
  const double err = wrap_angle(want - cur);

  Vec2 cmd;
  if (std::abs(err) > kAlignTolerance) {
    const double radius = reach + kOrbitClearance;
    const double next = cur + std::copysign(std::min(std::abs(err), kOrbitStride), err);
    const Vec2 target = s.obj_pos + Vec2{radius * std::cos(next), radius * std::sin(next)};
    cmd = target - s.ee_pos;
  } else {
    const Vec2 contact = s.obj_pos - reach * u;
    cmd = (contact - s.ee_pos) + std::min(c.a_max, goal_dist) * u;
  }
  cmd = limit(cmd, c.a_max);
  return {cmd.x, cmd.y};
}

Trajectory demonstrate_episode(DemonstratorKind kind, std::uint64_t env_seed, const env::EnvConfig& config,
                               double task_noise) {
  if (kind == DemonstratorKind::human) throw std::invalid_argument("the scripted demonstrator cannot produce human episodes");
  env::PushEnv env(config);
  const auto script = ExplorationScript::for_config(config);
  SwitchLatch latch;
  Trajectory tr;
  tr.seed = env_seed;
  tr.observations.push_back(env.reset(env_seed));
  std::size_t explore_steps = 0;
  Rng noise(mix_seed(env_seed, 0xd1ce));
  while (!env.at_horizon()) {
    const auto& obs = env.observation();
    const auto oracle = env::OracleAccess::oracle_state(env);
    Mode mode = Mode::task;
    if (kind == DemonstratorKind::switching) mode = latch.update(obs, oracle);
    Action a;
    if (mode == Mode::exploration) {
      a = exploration_action(explore_steps++, script);
    } else {
      a = task_action(oracle, config);
      const double w = task_noise * config.a_max;
      a.dx += noise.uniform(-w, w);
      a.dy += noise.uniform(-w, w);
    }
    a = env::clip_action(a, config.a_max);
    tr.actions.push_back(a);
    tr.modes.push_back(mode);
    tr.observations.push_back(env.step(a));
    if (env.is_success()) break;
  }
  tr.success = env.is_success();
  return tr;
}

CollectResult collect(std::size_t n_episodes, DemonstratorKind kind, std::uint64_t seed, const env::EnvConfig& config,
                      double task_noise) {
  if (n_episodes < 1) throw std::invalid_argument("collect: n_episodes must be >= 1");
  if (kind == DemonstratorKind::human) throw std::invalid_argument("the scripted demonstrator cannot produce human episodes");
  config.validate();
  CollectResult r;
  r.dataset.env_config = config;
  r.dataset.kind = kind;
  r.dataset.trajectories.resize(n_episodes);
  // Episodes are independent; results land in seed order regardless of scheduling.
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n_episodes); ++i) {
    r.dataset.trajectories[static_cast<std::size_t>(i)] =
        demonstrate_episode(kind, mix_seed(seed, static_cast<std::uint64_t>(i)), config, task_noise);
  }
  std::size_t wins = 0;
  for (const auto& t : r.dataset.trajectories) wins += t.success ? 1 : 0;
  r.success_rate = static_cast<double>(wins) / static_cast<double>(n_episodes);
  r.dataset.refresh_stats();
  return r;
}

}  // namespace beac::demo
