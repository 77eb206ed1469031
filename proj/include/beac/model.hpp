#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "beac/checkpoint.hpp"
#include "beac/dataset.hpp"
#include "beac/graph.hpp"
#include "beac/params.hpp"

namespace beac::model {

// Which of the four method characteristics a configuration uses.
struct MethodVariant {
  bool mode_switching = true;
  bool belief_estimation = true;
  bool future_reg = true;
  bool past_reg = true;

  // "ours", "ours_wo_past", "ours_wo_future", "ours_wo_reg", "bc_w_switch",
  // "bc_w_belief", "bc"
  static MethodVariant from_name(const std::string& name);
  static const std::vector<std::string>& table_order();
  std::string name() const;
  std::string display_name() const;
  void validate() const;
  bool uses_regularizer() const { return future_reg || past_reg; }
  friend bool operator==(const MethodVariant&, const MethodVariant&) = default;
};

struct TrainConfig {
  double alpha = 1.0;  // mode loss weight
  double beta = 1.0;   // future regularizer weight
  double gamma = 1.0;  // past regularizer weight
  int k = 10;          // regularization horizon in steps
  double learning_rate = 3e-3;
  int epochs = 100;
  int batch_size = 10;  // trajectories per batch
  std::uint64_t seed = 0;
  double grad_clip = 1.0;  // global-norm clip; <= 0 disables
  int hidden = 64;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Hidden vector handed to the heads. For variants without belief estimation
// it is the instantaneous normalized observation.
struct BeliefState {
  std::vector<double> values;
};

class BeacModel {
 public:
  static BeacModel create(const MethodVariant& variant, const TrainConfig& config,
                          const demo::NormalizationStats& stats);

  const MethodVariant& variant() const { return variant_; }
  const TrainConfig& train_config() const { return config_; }
  const demo::NormalizationStats& stats() const { return stats_; }
  int hidden() const { return config_.hidden; }
  int k() const { return config_.k; }
  std::size_t feature_dim() const;
  std::size_t encoder_input_dim() const { return env::kObsDim + env::kActDim; }

  const ad::ParameterStore& params() const { return params_; }
  ad::ParameterStore& params() { return params_; }

  ad::Checkpoint to_checkpoint(const nlohmann::json& provenance = nlohmann::json::object()) const;
  static BeacModel from_checkpoint(const ad::Checkpoint& ckpt);

 private:
  MethodVariant variant_;
  TrainConfig config_;
  demo::NormalizationStats stats_;
  ad::ParameterStore params_;
};

// Graph fragments shared by training and inference so both paths run the
// exact same arithmetic.
namespace graph {
struct LstmState {
  ad::NodeId h;
  ad::NodeId c;
};
// One LSTM step. `xw` holds the already-projected input rows (x * Wx + bx)
// for this step.
LstmState lstm_step(ad::Graph& g, ad::NodeId xw, LstmState prev, std::size_t hidden);
// Stack of dense layers "<prefix>.<i>"; tanh on every layer but the last.
ad::NodeId mlp(ad::Graph& g, const std::string& prefix, ad::NodeId x, std::size_t layers);
}  // namespace graph

inline constexpr std::size_t kModeLayers = 2;    // one hidden layer
inline constexpr std::size_t kActionLayers = 3;  // two hidden layers
inline constexpr std::size_t kDecoderLayers = 2;

// Encoder input for step t: normalized o_t ++ normalized a_{t-1} (a_0 := 0).
std::array<double, env::kObsDim + env::kActDim> encoder_input(const demo::NormalizationStats& stats,
                                                              const env::Observation& obs,
                                                              const env::Action& prev_action);

// Incremental belief update, one observation at a time.
class BeliefTracker {
 public:
  explicit BeliefTracker(const BeacModel& model);
  void reset();
  const BeliefState& update(const env::Observation& obs, const env::Action& prev_action);
  const BeliefState& belief() const { return belief_; }

 private:
  const BeacModel* model_;
  std::vector<double> hidden_;
  std::vector<double> cell_;
  BeliefState belief_;
};

// Recurrent scan from a zero hidden state; returns b_t for every t
// (|obs| beliefs). Requires |obs| = |actions| + 1 or |obs| = |actions|.
std::vector<BeliefState> encode_beliefs(std::span<const env::Observation> obs, std::span<const env::Action> actions,
                                        const BeacModel& model);
// b_t for the last observation.
BeliefState encode_belief(std::span<const env::Observation> obs, std::span<const env::Action> actions,
                          const BeacModel& model);

double predict_mode(const BeliefState& belief, const BeacModel& model);
inline demo::Mode decide_mode(double probability) {
  return probability >= 0.5 ? demo::Mode::task : demo::Mode::exploration;
}
// Normalized action space.
std::array<double, env::kActDim> predict_action(const BeliefState& belief, const BeacModel& model);
// Predicted normalized o_{t+k} from b_t and a_{t:t+k-1} (raw actions).
std::array<double, env::kObsDim> decode_future(const BeliefState& belief, std::span<const env::Action> actions,
                                               const BeacModel& model);
// Predicted normalized o_{t-k} from b_t and a_{t-k:t-1} (raw actions).
std::array<double, env::kObsDim> decode_past(const BeliefState& belief, std::span<const env::Action> actions,
                                             const BeacModel& model);

}  // namespace beac::model
