#include "beac/adam.hpp"

#include <cmath>

namespace beac::ad {

OptimizerState make_adam(const Bindings& params, double learning_rate) {
  OptimizerState s;
  s.learning_rate = learning_rate;
  for (const auto& [name, p] : params) {
    s.first_moment.emplace(name, Tensor::zeros(p.shape()));
    s.second_moment.emplace(name, Tensor::zeros(p.shape()));
  }
  return s;
}

void adam_step(Bindings& params, const Bindings& grads, OptimizerState& state) {
  if (!(state.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  const auto t = state.step + 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));

  Bindings next_params;
  Bindings next_m;
  Bindings next_v;
  for (const auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) throw std::invalid_argument("adam: missing gradient for parameter '" + name + "'");
    const auto& g = git->second;
    if (g.shape() != p.shape()) {
      throw ShapeError("adam: gradient shape " + shape_string(g.shape()) + " != parameter shape " +
                       shape_string(p.shape()) + " for '" + name + "'");
    }
    auto mit = state.first_moment.find(name);
    auto vit = state.second_moment.find(name);
    if (mit == state.first_moment.end() || vit == state.second_moment.end() ||
        mit->second.shape() != p.shape() || vit->second.shape() != p.shape()) {
      throw ShapeError("adam: optimizer moments do not match parameter '" + name + "'");
    }
    auto pd = p.data();
    auto gd = g.data();
    auto md = mit->second.data();
    auto vd = vit->second.data();
    std::vector<double> np(p.size()), nm(p.size()), nv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(gd[i])) throw NonFiniteError("adam: non-finite gradient for parameter '" + name + "'");
      nm[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gd[i];
      nv[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gd[i] * gd[i];
      if (!std::isfinite(nv[i]))
        throw NonFiniteError("adam: gradient overflow for parameter '" + name + "'");
      const double mhat = nm[i] / c1;
      const double vhat = nv[i] / c2;
      np[i] = pd[i] - state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
      if (!std::isfinite(np[i])) throw NonFiniteError("adam: update produced non-finite value in '" + name + "'");
    }
    next_params.emplace(name, Tensor(p.shape(), std::move(np)));
    next_m.emplace(name, Tensor(p.shape(), std::move(nm)));
    next_v.emplace(name, Tensor(p.shape(), std::move(nv)));
  }
  params = std::move(next_params);
  state.first_moment = std::move(next_m);
  state.second_moment = std::move(next_v);
  state.step = t;
}

double clip_global_norm(Bindings& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (auto v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads) {
      auto v = g.to_vector();
      for (auto& x : v) x *= f;
      g = Tensor(g.shape(), std::move(v));
    }
  }
  return norm;
}

}  // namespace beac::ad
