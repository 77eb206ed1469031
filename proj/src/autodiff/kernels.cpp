#include "beac/kernels.hpp"

#include <algorithm>

namespace beac::kernels {

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d.k; ++p) s += a[i * d.k + p] * b[p * d.n + j];
      c[i * d.n + j] = s;
    }
  }
}

void matmul_at_b_acc(std::span<const double> a, std::span<const double> g, std::span<double> c, Dims d) {
  for (std::size_t p = 0; p < d.k; ++p) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d.m; ++i) s += a[i * d.k + p] * g[i * d.n + j];
      c[p * d.n + j] += s;
    }
  }
}

void matmul_a_bt_acc(std::span<const double> g, std::span<const double> b, std::span<double> c, Dims d) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t p = 0; p < d.k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < d.n; ++j) s += g[i * d.n + j] * b[p * d.n + j];
      c[i * d.k + p] += s;
    }
  }
}

}  // namespace serial

namespace omp {

namespace {
bool go_parallel(Dims d) { return d.m * d.k * d.n >= kParallelThreshold; }
}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d) {
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
  const auto m = static_cast<long>(d.m);
#pragma omp parallel for schedule(static) if (go_parallel(d))
  for (long i = 0; i < m; ++i) {
    double* crow = cp + i * d.n;
    std::fill(crow, crow + d.n, 0.0);
    const double* arow = ap + i * d.k;
    for (std::size_t p = 0; p < d.k; ++p) {
      const double av = arow[p];
      const double* brow = bp + p * d.n;
#pragma omp simd
      for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_at_b_acc(std::span<const double> a, std::span<const double> g, std::span<double> c, Dims d) {
  const double* ap = a.data();
  const double* gp = g.data();
  double* cp = c.data();
  const auto k = static_cast<long>(d.k);
  if (!go_parallel(d)) {
    for (std::size_t i = 0; i < d.m; ++i) {
      const double* arow = ap + i * d.k;
      const double* grow = gp + i * d.n;
      for (std::size_t p = 0; p < d.k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        double* crow = cp + p * d.n;
#pragma omp simd
        for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * grow[j];
      }
    }
    return;
  }
  // Each output row p is owned by one thread; accumulation over i stays in order.
#pragma omp parallel for schedule(static)
  for (long p = 0; p < k; ++p) {
    double* crow = cp + p * d.n;
    for (std::size_t i = 0; i < d.m; ++i) {
      const double av = ap[i * d.k + p];
      if (av == 0.0) continue;
      const double* grow = gp + i * d.n;
#pragma omp simd
      for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * grow[j];
    }
  }
}

void matmul_a_bt_acc(std::span<const double> g, std::span<const double> b, std::span<double> c, Dims d) {
  const double* gp = g.data();
  const double* bp = b.data();
  double* cp = c.data();
  const auto m = static_cast<long>(d.m);
#pragma omp parallel for schedule(static) if (go_parallel(d))
  for (long i = 0; i < m; ++i) {
    const double* grow = gp + i * d.n;
    double* crow = cp + i * d.k;
    for (std::size_t p = 0; p < d.k; ++p) {
      const double* brow = bp + p * d.n;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t j = 0; j < d.n; ++j) s += grow[j] * brow[j];
      crow[p] += s;
    }
  }
}

}  // namespace omp

}  // namespace beac::kernels
