#pragma once

#include <cstddef>
#include <cstdint>

#include "beac/dataset.hpp"
#include "beac/push_env.hpp"

namespace beac::demo {

// Open-loop lawnmower sweep over the object's noise box. Lanes run along y;
// the script zig-zags across lanes 0..n-1 and back, alternating direction on
// every lane, so it is periodic and a pure function of the step index.
struct ExplorationScript {
  int lane_steps = 34;   // steps per lane sweep
  int shift_steps = 8;   // steps between adjacent lanes
  int n_lanes = 3;
  double a_max = 0.01;

  static ExplorationScript for_config(const env::EnvConfig& config);
  std::size_t period() const;
  double lane_spacing() const { return shift_steps * a_max; }
};

env::Action exploration_action(std::size_t step_index, const ExplorationScript& script);

// Extra slack beyond tangency for the switch distance test.
inline constexpr double kSwitchMargin = 0.005;

// The switch condition for a single step: haptic contact and the oracle
// end-effector/object distance below obj_radius + ee_radius + margin.
bool switch_condition(const env::Observation& obs, const env::EnvState& oracle);

// Latches the switch condition: 0 until the condition first holds, 1 after.
class SwitchLatch {
 public:
  Mode update(const env::Observation& obs, const env::EnvState& oracle);
  Mode mode() const { return mode_; }

 private:
  Mode mode_ = Mode::exploration;
};

// Oracle push controller: orbit to the far side of the object along the
// object->goal line, then push toward the goal. Output norm <= a_max.
env::Action task_action(const env::EnvState& oracle, const env::EnvConfig& config);

// Half-width of the zero-mean uniform perturbation added to every task-mode
// action, as a fraction of a_max. Recorded actions are the executed ones.
inline constexpr double kTaskNoise = 0.3;

struct CollectResult {
  Dataset dataset;
  double success_rate = 0.0;  // fraction in [0,1]
};

// Demonstration phase. Episode i uses env seed mix_seed(seed, i); episodes end
// on success or at the horizon.
CollectResult collect(std::size_t n_episodes, DemonstratorKind kind, std::uint64_t seed, const env::EnvConfig& config,
                      double task_noise = kTaskNoise);

// One demonstrator episode (exposed for tests).
Trajectory demonstrate_episode(DemonstratorKind kind, std::uint64_t env_seed, const env::EnvConfig& config,
                               double task_noise = kTaskNoise);

}  // namespace beac::demo
