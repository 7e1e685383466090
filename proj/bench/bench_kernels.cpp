// Serial reference vs OpenMP kernels on 2-D lattices. Run with
// OMP_NUM_THREADS to vary the thread count; both versions give identical bits.

#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "plap/kernels.hpp"

namespace k = plap::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::size_t points(const benchmark::State& s) {
  const auto side = static_cast<std::size_t>(s.range(0));
  return side * side;
}

template <bool Omp>
void BM_Dot(benchmark::State& s) {
  const auto a = random_vector(points(s), 1), b = random_vector(points(s), 2);
  for (auto _ : s) benchmark::DoNotOptimize(Omp ? k::omp::dot(a, b) : k::serial::dot(a, b));
  s.SetBytesProcessed(static_cast<std::int64_t>(s.iterations() * 16 * a.size()));
}

template <bool Omp>
void BM_Axpy(benchmark::State& s) {
  const auto x = random_vector(points(s), 1);
  auto y = random_vector(points(s), 2);
  for (auto _ : s) {
    if constexpr (Omp) {
      k::omp::axpy(1e-9, x, y);
    } else {
      k::serial::axpy(1e-9, x, y);
    }
    benchmark::ClobberMemory();
  }
  s.SetBytesProcessed(static_cast<std::int64_t>(s.iterations() * 24 * x.size()));
}

template <bool Omp>
void BM_DiffAxis(benchmark::State& s) {
  const int side = static_cast<int>(s.range(0));
  const auto f = random_vector(points(s), 1);
  std::vector<double> out(f.size());
  for (auto _ : s) {
    // Derivative along the slow axis (stride = side).
    if constexpr (Omp) {
      k::omp::diff_axis(f, out, side, side, 0.01);
    } else {
      k::serial::diff_axis(f, out, side, side, 0.01);
    }
    benchmark::ClobberMemory();
  }
}

template <bool Omp>
void BM_StencilApply(benchmark::State& s) {
  const int side = static_cast<int>(s.range(0));
  const std::size_t n = points(s);
  const std::vector<std::ptrdiff_t> offsets{0, -1, 1, -side, side};
  std::vector<double> values(n * offsets.size());
  std::vector<std::uint8_t> rows(n, 0);
  for (int i = 1; i + 1 < side; ++i) {
    for (int j = 1; j + 1 < side; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * side + j;
      rows[p] = 1;
      values[p * 5] = 4.0;
      for (int o = 1; o < 5; ++o) values[p * 5 + o] = -1.0;
    }
  }
  const auto x = random_vector(n, 3);
  std::vector<double> y(n);
  for (auto _ : s) {
    if constexpr (Omp) {
      k::omp::stencil_apply(values, offsets, rows, x, y);
    } else {
      k::serial::stencil_apply(values, offsets, rows, x, y);
    }
    benchmark::ClobberMemory();
  }
}

}  // namespace

#define PLAP_PAIR(name)                                                              \
  BENCHMARK_TEMPLATE(name, false)->Name(#name "/serial")->Arg(257)->Arg(1025);     \
  BENCHMARK_TEMPLATE(name, true)->Name(#name "/omp")->Arg(257)->Arg(1025)

PLAP_PAIR(BM_Dot);
PLAP_PAIR(BM_Axpy);
PLAP_PAIR(BM_DiffAxis);
PLAP_PAIR(BM_StencilApply);

BENCHMARK_MAIN();
