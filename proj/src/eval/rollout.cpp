#include <stdexcept>

#include "beac/eval.hpp"

namespace beac::eval {

ModelPolicy::ModelPolicy(const model::BeacModel& model) : model_(&model), tracker_(model) {}

void ModelPolicy::reset() {
  tracker_.reset();
  prev_action_ = {};
}

PolicyDecision ModelPolicy::decide(const env::Observation& obs) {
  const auto& belief = tracker_.update(obs, prev_action_);
  PolicyDecision d;
  if (model_->variant().mode_switching) {
    d.mode = model::decide_mode(model::predict_mode(belief, *model_));
    if (d.mode == demo::Mode::exploration) return d;
  }
  const auto z = model::predict_action(belief, *model_);
  d.action = model_->stats().denormalize_act(z);
  return d;
}

RolloutResult rollout(Policy& policy, env::PushEnv& env, std::uint64_t env_seed) {
  const auto& config = env.config();
  const auto script = demo::ExplorationScript::for_config(config);
  RolloutResult r;
  r.trajectory.seed = env_seed;
  r.trajectory.observations.push_back(env.reset(env_seed));
  policy.reset();
  std::size_t explore_counter = 0;
  while (!env.at_horizon() && !env.is_success()) {
    const auto decision = policy.decide(env.observation());
    const bool explore = policy.switching() && decision.mode == demo::Mode::exploration;
    env::Action a = explore ? demo::exploration_action(explore_counter++, script) : decision.action;
    a = env::clip_action(a, config.a_max);
    const auto mode = explore ? demo::Mode::exploration : demo::Mode::task;
    if (mode == demo::Mode::task && r.switch_step < 0) r.switch_step = env.step_count();
    policy.executed(a);
    r.trajectory.actions.push_back(a);
    r.trajectory.modes.push_back(mode);
    r.trajectory.observations.push_back(env.step(a));
  }
  r.success = env.is_success();
  r.trajectory.success = r.success;
  r.final_distance = env.object_goal_distance();
  return r;
}

RolloutResult rollout(const model::BeacModel& model, const model::MethodVariant& variant,
                      const env::EnvConfig& config, std::uint64_t env_seed) {
  if (!(model.variant() == variant)) {
    throw std::invalid_argument("checkpoint is a '" + model.variant().name() + "' model, requested variant '" +
                                variant.name() + "'");
  }
  env::PushEnv env(config);
  ModelPolicy policy(model);
  return rollout(policy, env, env_seed);
}

}  // namespace beac::eval
