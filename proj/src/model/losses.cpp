#include "beac/train.hpp"

#include <algorithm>

namespace beac::model {

namespace {

Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

// Constant [rows,1] weights: mask / count (all zero when count is zero).
Tensor weights_from_mask(const std::vector<double>& mask) {
  double count = 0.0;
  for (auto m : mask) count += m;
  std::vector<double> w(mask.size(), 0.0);
  if (count > 0.0)
    for (std::size_t i = 0; i < mask.size(); ++i) w[i] = mask[i] / count;
  return matrix(mask.size(), 1, std::move(w));
}

}  // namespace

LossGraph build_loss_graph(const BeacModel& model, std::span<const demo::Trajectory* const> batch,
                           const TrainConfig& weights) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  for (const auto* tr : batch) tr->validate();

  const auto& variant = model.variant();
  const auto& stats = model.stats();
  const std::size_t B = batch.size();
  const std::size_t H = static_cast<std::size_t>(model.hidden());
  const std::size_t k = static_cast<std::size_t>(model.k());
  std::size_t T = 0;
  for (const auto* tr : batch) T = std::max(T, tr->observations.size());
  const std::size_t rows = T * B;

  LossGraph lg;
  lg.batch = B;
  lg.max_len = T;
  auto& g = lg.graph;

  auto row_of = [&](std::size_t t, std::size_t b) { return t * B + b; };

  // Per-row normalized observations, actions and masks.
  std::vector<double> obs(rows * env::kObsDim, 0.0);
  std::vector<double> act(rows * env::kActDim, 0.0);
  std::vector<double> mode_target(rows, 0.0);
  std::vector<double> step_mask(rows, 0.0);
  std::vector<double> action_mask(rows, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& tr = *batch[b];
    for (std::size_t t = 0; t < tr.observations.size(); ++t) {
      const auto o = stats.normalize(tr.observations[t]);
      std::copy(o.begin(), o.end(), obs.begin() + row_of(t, b) * env::kObsDim);
    }
    for (std::size_t t = 0; t < tr.actions.size(); ++t) {
      const auto r = row_of(t, b);
      const auto a = stats.normalize(tr.actions[t]);
      std::copy(a.begin(), a.end(), act.begin() + r * env::kActDim);
      const double c = tr.modes[t] == demo::Mode::task ? 1.0 : 0.0;
      mode_target[r] = c;
      step_mask[r] = 1.0;
      action_mask[r] = variant.mode_switching ? c : 1.0;
    }
  }

  // Features: recurrent beliefs, or the raw normalized observation.
  if (variant.belief_estimation) {
    const std::size_t in_dim = model.encoder_input_dim();
    const auto zero_act = stats.normalize(env::Action{});
    std::vector<double> x(rows * in_dim, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& tr = *batch[b];
      for (std::size_t t = 0; t < tr.observations.size(); ++t) {
        const auto r = row_of(t, b);
        std::copy_n(obs.begin() + r * env::kObsDim, env::kObsDim, x.begin() + r * in_dim);
        const double* prev = t == 0 ? zero_act.data() : act.data() + row_of(t - 1, b) * env::kActDim;
        std::copy_n(prev, env::kActDim, x.begin() + r * in_dim + env::kObsDim);
      }
    }
    const auto xw = g.add(g.matmul(g.constant(matrix(rows, in_dim, std::move(x)), "encoder_inputs"),
                                   g.parameter("encoder.wx")),
                          g.parameter("encoder.bx"));
    graph::LstmState state{g.constant(Tensor::zeros({B, H}), "h0"), g.constant(Tensor::zeros({B, H}), "c0")};
    std::vector<ad::NodeId> states;
    states.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
      state = graph::lstm_step(g, g.slice_rows(xw, t * B, (t + 1) * B), state, H);
      states.push_back(state.h);
    }
    lg.features = T == 1 ? states.front() : g.concat_rows(std::move(states));
  } else {
    lg.features = g.constant(matrix(rows, env::kObsDim, obs), "observations");
  }
  g.label(lg.features, "features");

  const auto pred_action = graph::mlp(g, "action", lg.features, kActionLayers);
  lg.action = g.squared_error(pred_action, g.constant(matrix(rows, env::kActDim, act), "actions"),
                              g.constant(weights_from_mask(action_mask)));
  g.label(lg.action, "L_action");
  lg.total = lg.action;

  if (variant.mode_switching) {
    const auto logits = graph::mlp(g, "mode", lg.features, kModeLayers);
    lg.mode = g.bce_logits(logits, g.constant(matrix(rows, 1, mode_target), "modes"),
                           g.constant(weights_from_mask(step_mask)));
    g.label(lg.mode, "L_mode");
    lg.total = g.add(lg.total, g.scale(lg.mode, weights.alpha));
  }

  // Regularizer windows: decoder input is b_t ++ flattened normalized actions.
  auto regularizer = [&](const char* prefix, bool future) {
    std::vector<double> window(rows * 2 * k, 0.0);
    std::vector<double> target(rows * env::kObsDim, 0.0);
    std::vector<double> mask(rows, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& tr = *batch[b];
      const std::size_t n_obs = tr.observations.size();
      for (std::size_t t = 0; t < n_obs; ++t) {
        std::size_t first_action, target_t;
        if (future) {
          if (t + k >= n_obs) continue;
          first_action = t;
          target_t = t + k;
        } else {
          if (t < k) continue;
          first_action = t - k;
          target_t = t - k;
        }
        const auto r = row_of(t, b);
        mask[r] = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
          std::copy_n(act.begin() + row_of(first_action + j, b) * env::kActDim, env::kActDim,
                      window.begin() + r * 2 * k + j * env::kActDim);
        }
        std::copy_n(obs.begin() + row_of(target_t, b) * env::kObsDim, env::kObsDim,
                    target.begin() + r * env::kObsDim);
      }
    }
    const auto in = g.concat_cols({lg.features, g.constant(matrix(rows, 2 * k, std::move(window)))});
    const auto pred = graph::mlp(g, prefix, in, kDecoderLayers);
    return g.squared_error(pred, g.constant(matrix(rows, env::kObsDim, std::move(target))),
                           g.constant(weights_from_mask(mask)));
  };

  if (variant.future_reg) {
    lg.future = regularizer("future", true);
    g.label(lg.future, "L_future");
    lg.total = g.add(lg.total, g.scale(lg.future, weights.beta));
  }
  if (variant.past_reg) {
    lg.past = regularizer("past", false);
    g.label(lg.past, "L_past");
    lg.total = g.add(lg.total, g.scale(lg.past, weights.gamma));
  }
  g.label(lg.total, "L_total");
  return lg;
}

LossBreakdown compute_losses(std::span<const demo::Trajectory> batch, const BeacModel& model,
                             const TrainConfig& weights) {
  std::vector<const demo::Trajectory*> ptrs;
  for (const auto& t : batch) ptrs.push_back(&t);
  auto lg = build_loss_graph(model, ptrs, weights);
  lg.graph.forward(model.params());
  LossBreakdown out;
  out.action = lg.graph.value(lg.action).item();
  if (lg.mode != kNoNode) out.mode = lg.graph.value(lg.mode).item();
  if (lg.future != kNoNode) out.future = lg.graph.value(lg.future).item();
  if (lg.past != kNoNode) out.past = lg.graph.value(lg.past).item();
  out.total = lg.graph.value(lg.total).item();
  return out;
}

}  // namespace beac::model
