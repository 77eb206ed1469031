#include <benchmark/benchmark.h>

#include <vector>

#include "beac/eval.hpp"
#include "beac/kernels.hpp"
#include "beac/rng.hpp"

using namespace beac;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Shapes: one LSTM input projection of a full batch (time-major rows x 8 -> 4H)
// and a hidden-to-hidden product at batch size 10.
template <auto Kernel>
void BM_matmul(benchmark::State& state) {
  const kernels::Dims d{static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto a = random_vec(d.m * d.k, 1), b = random_vec(d.k * d.n, 2);
  std::vector<double> c(d.m * d.n);
  for (auto _ : state) {
    Kernel(a, b, c, d);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * d.m * d.k * d.n));
}

template <auto Kernel>
void BM_matmul_at_b(benchmark::State& state) {
  const kernels::Dims d{static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto a = random_vec(d.m * d.k, 1), g = random_vec(d.m * d.n, 2);
  std::vector<double> c(d.k * d.n);
  for (auto _ : state) {
    Kernel(a, g, c, d);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * d.m * d.k * d.n));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({10, 64, 256})->Args({2000, 8, 256})->Args({2000, 64, 64})->Args({700, 72, 256});
}

BENCHMARK(BM_matmul<kernels::serial::matmul>)->Name("matmul/serial")->Apply(shapes);
BENCHMARK(BM_matmul<kernels::omp::matmul>)->Name("matmul/omp")->Apply(shapes)->UseRealTime();
BENCHMARK(BM_matmul_at_b<kernels::serial::matmul_at_b_acc>)->Name("matmul_at_b/serial")->Apply(shapes);
BENCHMARK(BM_matmul_at_b<kernels::omp::matmul_at_b_acc>)->Name("matmul_at_b/omp")->Apply(shapes)->UseRealTime();

void BM_grid(benchmark::State& state) {
  const env::EnvConfig cfg;
  const auto data = demo::collect(10, demo::DemonstratorKind::switching, 1, cfg).dataset;
  model::TrainConfig tc;
  tc.hidden = 32;
  std::vector<model::BeacModel> models;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    tc.seed = s;
    models.push_back(model::BeacModel::create(model::MethodVariant{}, tc, data.stats));
  }
  std::vector<eval::GridEntry> entries;
  for (std::size_t i = 0; i < models.size(); ++i) entries.push_back({"m", &models[i], i + 1, nullptr});
  eval::GridOptions o;
  o.n_rollouts = 4;
  o.execution = state.range(0) == 0 ? eval::Execution::serial : eval::Execution::parallel;
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate_grid(entries, cfg, o));
}
BENCHMARK(BM_grid)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
