#pragma once

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "beac/dataset.hpp"
#include "beac/graph.hpp"
#include "beac/model.hpp"
#include "beac/rng.hpp"
#include "beac/train.hpp"

namespace beac::testing {

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor({rows, cols}, std::move(v));
}

inline Tensor with_entry(const Tensor& t, std::size_t i, double value) {
  auto v = t.to_vector();
  v[i] = value;
  return Tensor(t.shape(), std::move(v));
}

// Mixed relative/absolute error: relative for gradients above 1e-2 in
// magnitude, absolute (scaled by 1e-2) below that.
inline double grad_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-2});
}

struct FdResult {
  double max_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Central differences with step h on `names` (all bound tensors if empty).
// At most `per_tensor` entries of each tensor are probed, chosen by `rng`.
inline FdResult fd_check(ad::Graph& g, ad::NodeId loss, const ad::Bindings& bindings, Rng& rng,
                         std::size_t per_tensor = static_cast<std::size_t>(-1),
                         std::vector<std::string> names = {}, double h = 1e-5) {
  g.forward(bindings);
  const auto grads = g.backward(loss);
  if (names.empty())
    for (const auto& [name, _] : bindings) names.push_back(name);
  FdResult out;
  for (const auto& name : names) {
    const Tensor& base = bindings.at(name);
    const auto& grad = grads.at(name);
    std::vector<std::size_t> idx(base.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (per_tensor < idx.size()) {
      for (std::size_t i = 0; i < per_tensor; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      idx.resize(per_tensor);
    }
    auto b = bindings;
    for (auto i : idx) {
      b.insert_or_assign(name, with_entry(base, i, base[i] + h));
      const double up = g.forward(b).item();
      b.insert_or_assign(name, with_entry(base, i, base[i] - h));
      const double down = g.forward(b).item();
      const double numeric = (up - down) / (2.0 * h);
      const double err = grad_error(grad[i], numeric);
      if (err > out.max_error) {
        out.max_error = err;
        out.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(grad[i]) + " numeric " +
                    std::to_string(numeric);
      }
      ++out.checked;
    }
    b.insert_or_assign(name, base);
  }
  return out;
}

// Every primitive wrapped into a scalar loss: sum(op(...) * R) with a fixed
// random R, so upstream gradients are non-uniform.
struct OpCase {
  std::string name;
  std::function<ad::NodeId(ad::Graph&, ad::Bindings&, Rng&)> build;
};

inline ad::NodeId weighted_sum(ad::Graph& g, ad::NodeId y, std::size_t rows, std::size_t cols, Rng& rng) {
  auto r = g.constant(random_tensor(rng, rows, cols), "R");
  return g.sum(g.mul(y, r));
}

inline std::vector<OpCase> op_cases() {
  auto dims = [](Rng& rng) {
    return std::pair<std::size_t, std::size_t>{1 + rng.below(4), 1 + rng.below(5)};
  };
  std::vector<OpCase> cases;
  cases.push_back({"matmul", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, k] = dims(rng);
                     const std::size_t n = 1 + rng.below(4);
                     b["a"] = random_tensor(rng, m, k);
                     b["b"] = random_tensor(rng, k, n);
                     return weighted_sum(g, g.matmul(g.input("a"), g.parameter("b")), m, n, rng);
                   }});
  cases.push_back({"add", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n);
                     b["b"] = random_tensor(rng, m, n);
                     return weighted_sum(g, g.add(g.input("a"), g.parameter("b")), m, n, rng);
                   }});
  cases.push_back({"add_broadcast", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n);
                     b["b"] = random_tensor(rng, 1, n);
                     return weighted_sum(g, g.add(g.input("a"), g.parameter("b")), m, n, rng);
                   }});
  cases.push_back({"sub", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n);
                     b["b"] = random_tensor(rng, m, n);
                     return weighted_sum(g, g.sub(g.input("a"), g.parameter("b")), m, n, rng);
                   }});
  cases.push_back({"mul", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n);
                     b["b"] = random_tensor(rng, m, n);
                     return weighted_sum(g, g.mul(g.input("a"), g.parameter("b")), m, n, rng);
                   }});
  cases.push_back({"tanh", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n, -2.0, 2.0);
                     return weighted_sum(g, g.tanh(g.parameter("a")), m, n, rng);
                   }});
  cases.push_back({"sigmoid", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n, -3.0, 3.0);
                     return weighted_sum(g, g.sigmoid(g.parameter("a")), m, n, rng);
                   }});
  cases.push_back({"concat_cols", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     const std::size_t n2 = 1 + rng.below(3);
                     b["a"] = random_tensor(rng, m, n);
                     b["b"] = random_tensor(rng, m, n2);
                     return weighted_sum(g, g.concat_cols({g.input("a"), g.parameter("b"), g.input("a")}), m,
                                         2 * n + n2, rng);
                   }});
  cases.push_back({"concat_rows", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     const std::size_t m2 = 1 + rng.below(3);
                     b["a"] = random_tensor(rng, m, n);
                     b["b"] = random_tensor(rng, m2, n);
                     return weighted_sum(g, g.concat_rows({g.input("a"), g.parameter("b")}), m + m2, n, rng);
                   }});
  cases.push_back({"slice_cols", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     const std::size_t cols = n + 2;
                     const std::size_t lo = rng.below(cols);
                     const std::size_t hi = lo + 1 + rng.below(cols - lo);
                     b["a"] = random_tensor(rng, m, cols);
                     return weighted_sum(g, g.slice_cols(g.parameter("a"), lo, hi), m, hi - lo, rng);
                   }});
  cases.push_back({"slice_rows", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     const std::size_t rows = m + 2;
                     const std::size_t lo = rng.below(rows);
                     const std::size_t hi = lo + 1 + rng.below(rows - lo);
                     b["a"] = random_tensor(rng, rows, n);
                     return weighted_sum(g, g.slice_rows(g.parameter("a"), lo, hi), hi - lo, n, rng);
                   }});
  cases.push_back({"squared_error", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["p"] = random_tensor(rng, m, n);
                     b["t"] = random_tensor(rng, m, n);
                     auto w = g.constant(random_tensor(rng, m, 1, 0.0, 1.0), "w");
                     return g.squared_error(g.parameter("p"), g.input("t"), w);
                   }});
  cases.push_back({"bce_logits", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["z"] = random_tensor(rng, m, n, -4.0, 4.0);
                     b["y"] = random_tensor(rng, m, n, 0.0, 1.0);
                     auto w = g.constant(random_tensor(rng, m, 1, 0.0, 1.0), "w");
                     return g.bce_logits(g.parameter("z"), g.input("y"), w);
                   }});
  cases.push_back({"scale", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n);
                     return weighted_sum(g, g.scale(g.parameter("a"), rng.uniform(-3.0, 3.0)), m, n, rng);
                   }});
  cases.push_back({"sum", [=](ad::Graph& g, ad::Bindings& b, Rng& rng) {
                     auto [m, n] = dims(rng);
                     b["a"] = random_tensor(rng, m, n);
                     auto s = g.sum(g.tanh(g.parameter("a")));
                     return g.mul(s, s);
                   }});
  return cases;
}

// Short trajectory with random bounded observations/actions and a monotone
// mode sequence.
inline demo::Trajectory toy_trajectory(Rng& rng, std::size_t steps, std::size_t switch_at) {
  demo::Trajectory tr;
  for (std::size_t t = 0; t <= steps; ++t) {
    env::Observation o;
    o.ee_pos = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    o.ee_vel = {rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
    o.contact_force = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    tr.observations.push_back(o);
    if (t < steps) {
      tr.actions.push_back({rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)});
      tr.modes.push_back(t >= switch_at ? demo::Mode::task : demo::Mode::exploration);
    }
  }
  return tr;
}

inline std::vector<demo::Trajectory> toy_batch(Rng& rng, std::size_t n, std::size_t min_steps, std::size_t max_steps) {
  std::vector<demo::Trajectory> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto steps = min_steps + rng.below(max_steps - min_steps + 1);
    out.push_back(toy_trajectory(rng, steps, rng.below(steps + 1)));
  }
  return out;
}

// Finite-difference check of L_total for a full model on a 3-step toy
// trajectory (k = 3) with `per_tensor` probes per parameter tensor.
inline FdResult model_fd_check(const model::MethodVariant& variant, std::uint64_t seed, std::size_t per_tensor) {
  Rng rng(seed);
  std::vector<demo::Trajectory> batch{toy_trajectory(rng, 3, 1 + rng.below(2))};
  const auto stats = demo::compute_stats(batch);
  model::TrainConfig tc;
  tc.k = 3;
  tc.seed = seed;
  tc.alpha = 0.7;
  tc.beta = 1.3;
  tc.gamma = 0.9;
  auto m = model::BeacModel::create(variant, tc, stats);
  std::vector<const demo::Trajectory*> ptrs{&batch[0]};
  auto lg = model::build_loss_graph(m, ptrs, tc);
  return fd_check(lg.graph, lg.total, m.params(), rng, per_tensor);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^
            static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()) ^
            static_cast<std::uint64_t>(::getpid()));
    path = std::filesystem::temp_directory_path() / ("beac_" + tag + "_" + std::to_string(rng.below(1u << 30)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace beac::testing
