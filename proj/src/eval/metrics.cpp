#include <sstream>
#include <stdexcept>

#include "beac/checkpoint.hpp"
#include "beac/eval.hpp"

namespace beac::eval {

double mode_accuracy(const model::BeacModel& model, const demo::Dataset& heldout) {
  if (heldout.kind == demo::DemonstratorKind::no_switch) {
    throw std::invalid_argument("mode_accuracy: dataset was collected without mode labels");
  }
  if (!model.variant().mode_switching) throw std::invalid_argument("mode_accuracy: variant has no mode head");
  std::size_t correct = 0, total = 0;
  for (const auto& tr : heldout.trajectories) {
    const auto beliefs = model::encode_beliefs(tr.observations, tr.actions, model);
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      correct += model::decide_mode(model::predict_mode(beliefs[t], model)) == tr.modes[t] ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("mode_accuracy: dataset has no steps");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

double action_pred_loss(const model::BeacModel& model, const demo::Dataset& heldout) {
  const bool masked = model.variant().mode_switching;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& tr : heldout.trajectories) {
    const auto beliefs = model::encode_beliefs(tr.observations, tr.actions, model);
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      if (masked && tr.modes[t] != demo::Mode::task) continue;
      const auto pred = model::predict_action(beliefs[t], model);
      const auto target = model.stats().normalize(tr.actions[t]);
      for (std::size_t d = 0; d < env::kActDim; ++d) sum += (pred[d] - target[d]) * (pred[d] - target[d]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("action_pred_loss: no task-oriented steps to score");
  return sum / static_cast<double>(count);
}

std::string belief_csv(const model::BeacModel& model, const demo::Dataset& dataset) {
  std::ostringstream os;
  os.precision(17);
  const auto dim = model.feature_dim();
  for (std::size_t i = 0; i < dim; ++i) os << 'b' << i << ',';
  os << "mode\n";
  for (const auto& tr : dataset.trajectories) {
    const auto beliefs = model::encode_beliefs(tr.observations, tr.actions, model);
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      for (auto v : beliefs[t].values) os << v << ',';
      os << static_cast<int>(tr.modes[t]) << '\n';
    }
  }
  return os.str();
}

void export_beliefs(const model::BeacModel& model, const demo::Dataset& dataset, const std::filesystem::path& out) {
  ad::write_file_atomic(out, belief_csv(model, dataset));
}

}  // namespace beac::eval
