#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "beac/adam.hpp"
#include "beac/rng.hpp"
#include "beac/train.hpp"

namespace beac::model {

TrainingDiverged::TrainingDiverged(int epoch, std::size_t batch, const std::string& what)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                         ": " + what),
      epoch_(epoch),
      batch_(batch) {}

TrainResult train(std::span<const demo::Trajectory> trajectories, const demo::NormalizationStats& stats,
                  const MethodVariant& variant, const TrainConfig& config, const EpochCallback& on_epoch) {
  if (trajectories.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& t : trajectories) t.validate();

  TrainResult result{BeacModel::create(variant, config, stats), {}};
  auto& model = result.model;
  auto opt = ad::make_adam(model.params(), config.learning_rate);
  Rng rng(mix_seed(config.seed, 0x5eed));

  std::vector<std::size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochLog entry;
    entry.epoch = epoch;
    double steps_seen = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_index) {
      std::vector<const demo::Trajectory*> batch;
      double steps = 0.0;
      for (std::size_t j = start; j < std::min(order.size(), start + bs); ++j) {
        batch.push_back(&trajectories[order[j]]);
        steps += static_cast<double>(trajectories[order[j]].steps());
      }

      auto lg = build_loss_graph(model, batch, config);
      ad::Bindings grads;
      try {
        lg.graph.forward(model.params());
        grads = lg.graph.backward(lg.total);
      } catch (const NonFiniteError& e) {
        throw TrainingDiverged(epoch, batch_index, e.what());
      }
      auto value = [&](ad::NodeId id) { return id == kNoNode ? 0.0 : lg.graph.value(id).item(); };
      const double total = value(lg.total);
      if (!std::isfinite(total)) throw TrainingDiverged(epoch, batch_index, "non-finite loss");

      entry.loss.action += steps * value(lg.action);
      entry.loss.mode += steps * value(lg.mode);
      entry.loss.future += steps * value(lg.future);
      entry.loss.past += steps * value(lg.past);
      entry.loss.total += steps * total;
      steps_seen += steps;

      for (const auto& [name, p] : model.params())
        if (!grads.contains(name)) grads.emplace(name, Tensor::zeros(p.shape()));
      for (auto it = grads.begin(); it != grads.end();) {
        it = model.params().contains(it->first) ? std::next(it) : grads.erase(it);
      }
      ad::clip_global_norm(grads, config.grad_clip);
      try {
        ad::adam_step(model.params(), grads, opt);
      } catch (const NonFiniteError& e) {
        throw TrainingDiverged(epoch, batch_index, e.what());
      }
    }
    entry.loss.action /= steps_seen;
    entry.loss.mode /= steps_seen;
    entry.loss.future /= steps_seen;
    entry.loss.past /= steps_seen;
    entry.loss.total /= steps_seen;
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,L_action,L_mode,L_future,L_past,L_total\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << e.loss.action << ',' << e.loss.mode << ',' << e.loss.future << ',' << e.loss.past << ','
       << e.loss.total << '\n';
  }
  return os.str();
}

}  // namespace beac::model
