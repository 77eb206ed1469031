#pragma once

#include <cstddef>
#include <span>

// Dense matrix kernels behind the autodiff matmul node. All matrices are
// row-major. `omp` is the production path (row-parallel, SIMD inner loops);
// `serial` is the straight-line reference kept for tests and the benchmark.
namespace beac::kernels {

struct Dims {
  std::size_t m, k, n;
};

namespace serial {
// c = a(m x k) * b(k x n)
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d);
// c(k x n) += a(m x k)^T * g(m x n)
void matmul_at_b_acc(std::span<const double> a, std::span<const double> g, std::span<double> c, Dims d);
// c(m x k) += g(m x n) * b(k x n)^T
void matmul_a_bt_acc(std::span<const double> g, std::span<const double> b, std::span<double> c, Dims d);
}  // namespace serial

namespace omp {
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d);
void matmul_at_b_acc(std::span<const double> a, std::span<const double> g, std::span<double> c, Dims d);
void matmul_a_bt_acc(std::span<const double> g, std::span<const double> b, std::span<double> c, Dims d);

// Work (m*k*n) below which the kernels stay on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1u << 18;
}  // namespace omp

}  // namespace beac::kernels
