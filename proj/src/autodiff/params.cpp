#include "beac/params.hpp"

#include <cmath>

namespace beac::ad {

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor({rows, cols}, std::move(v));
}

void add_dense(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  store.insert_or_assign(prefix + ".w", uniform_init(in, out, in, rng));
  store.insert_or_assign(prefix + ".b", uniform_init(1, out, in, rng));
}

std::size_t parameter_count(const ParameterStore& store) {
  std::size_t n = 0;
  for (const auto& [name, t] : store) n += t.size();
  return n;
}

}  // namespace beac::ad
