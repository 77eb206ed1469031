#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "beac/model.hpp"

namespace beac::model {

struct LossBreakdown {
  double action = 0.0;
  double mode = 0.0;
  double future = 0.0;
  double past = 0.0;
  double total = 0.0;
};

inline constexpr ad::NodeId kNoNode = std::numeric_limits<ad::NodeId>::max();

// Loss graph over a batch of whole trajectories laid out time-major: row
// t * B + b holds step t of trajectory b. Padding rows carry zero weight.
struct LossGraph {
  ad::Graph graph;
  ad::NodeId action = kNoNode;
  ad::NodeId mode = kNoNode;
  ad::NodeId future = kNoNode;
  ad::NodeId past = kNoNode;
  ad::NodeId total = kNoNode;
  ad::NodeId features = kNoNode;  // stacked beliefs (or observations), [T*B, feature_dim]
  std::size_t batch = 0;
  std::size_t max_len = 0;  // observations per trajectory after padding
};

// L_action: mean over supervised steps (c_t = 1 for switching variants, every
//           step otherwise) of ||a_t - pi(b_t)||^2 in normalized action space.
// L_mode:   mean BCE of pi_mode(b_t) against c_t over every step.
// L_future: mean ||o_{t+k} - G(b_t, a_{t:t+k-1})||^2 over steps with t+k <= T.
// L_past:   mean ||o_{t-k} - G(b_t, a_{t-k:t-1})||^2 over steps with t-k >= 1.
// L_total = L_action + alpha L_mode + beta L_future + gamma L_past; components
// disabled by the variant are absent from the graph.
LossGraph build_loss_graph(const BeacModel& model, std::span<const demo::Trajectory* const> batch,
                           const TrainConfig& weights);
LossBreakdown compute_losses(std::span<const demo::Trajectory> batch, const BeacModel& model,
                             const TrainConfig& weights);

struct EpochLog {
  int epoch = 0;
  LossBreakdown loss;  // step-weighted mean over the epoch's batches
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, std::size_t batch, const std::string& what);
  int epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

struct TrainResult {
  BeacModel model;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Full-sequence backpropagation through the encoder with Adam. Variants
// without mode switching ignore the labels and supervise every step.
TrainResult train(std::span<const demo::Trajectory> trajectories, const demo::NormalizationStats& stats,
                  const MethodVariant& variant, const TrainConfig& config, const EpochCallback& on_epoch = {});

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace beac::model
