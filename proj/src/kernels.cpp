#include "plap/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace plap::kernels {
namespace {

std::size_t num_blocks(std::size_t n) { return (n + kBlock - 1) / kBlock; }

double block_sum(std::span<const double> a, std::size_t b) {
  const std::size_t lo = b * kBlock;
  const std::size_t hi = std::min(a.size(), lo + kBlock);
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += a[i];
  return s;
}

double block_dot(std::span<const double> a, std::span<const double> c, std::size_t b) {
  const std::size_t lo = b * kBlock;
  const std::size_t hi = std::min(a.size(), lo + kBlock);
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += a[i] * c[i];
  return s;
}

double block_masked(std::span<const double> a, std::span<const double> w,
                    std::span<const std::uint8_t> mask, std::size_t b) {
  const std::size_t lo = b * kBlock;
  const std::size_t hi = std::min(a.size(), lo + kBlock);
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i)
    if (mask[i]) s += w[i] * a[i];
  return s;
}

double combine(const std::vector<double>& partial) {
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

inline double diff_at(std::span<const double> f, std::size_t i, std::ptrdiff_t stride, int k,
                      int size, double h) {
  const double inv = 1.0 / (2.0 * h);
  if (k == 0) return (-3.0 * f[i] + 4.0 * f[i + stride] - f[i + 2 * stride]) * inv;
  if (k == size - 1) return (3.0 * f[i] - 4.0 * f[i - stride] + f[i - 2 * stride]) * inv;
  return (f[i + stride] - f[i - stride]) * inv;
}

inline double stencil_row(std::span<const double> values,
                          std::span<const std::ptrdiff_t> offsets, std::span<const double> x,
                          std::size_t i) {
  const std::size_t nofs = offsets.size();
  const double* row = values.data() + i * nofs;
  double s = 0.0;
  for (std::size_t o = 0; o < nofs; ++o)
    if (row[o] != 0.0) s += row[o] * x[static_cast<std::ptrdiff_t>(i) + offsets[o]];
  return s;
}

}  // namespace

namespace serial {

double sum(std::span<const double> a) {
  std::vector<double> partial(num_blocks(a.size()));
  for (std::size_t b = 0; b < partial.size(); ++b) partial[b] = block_sum(a, b);
  return combine(partial);
}

double dot(std::span<const double> a, std::span<const double> b) {
  std::vector<double> partial(num_blocks(a.size()));
  for (std::size_t k = 0; k < partial.size(); ++k) partial[k] = block_dot(a, b, k);
  return combine(partial);
}

double masked_weighted_sum(std::span<const double> a, std::span<const double> w,
                           std::span<const std::uint8_t> mask) {
  std::vector<double> partial(num_blocks(a.size()));
  for (std::size_t k = 0; k < partial.size(); ++k) partial[k] = block_masked(a, w, mask, k);
  return combine(partial);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void diff_axis(std::span<const double> f, std::span<double> out, std::ptrdiff_t stride,
               int size, double h) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const int k = static_cast<int>((i / static_cast<std::size_t>(stride)) %
                                   static_cast<std::size_t>(size));
    out[i] = diff_at(f, i, stride, k, size, h);
  }
}

void stencil_apply(std::span<const double> values, std::span<const std::ptrdiff_t> offsets,
                   std::span<const std::uint8_t> rows, std::span<const double> x,
                   std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = rows[i] ? stencil_row(values, offsets, x, i) : 0.0;
}

}  // namespace serial

namespace omp {

double sum(std::span<const double> a) {
  const auto nb = static_cast<std::ptrdiff_t>(num_blocks(a.size()));
  std::vector<double> partial(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b)
    partial[static_cast<std::size_t>(b)] = block_sum(a, static_cast<std::size_t>(b));
  return combine(partial);
}

double dot(std::span<const double> a, std::span<const double> c) {
  const auto nb = static_cast<std::ptrdiff_t>(num_blocks(a.size()));
  std::vector<double> partial(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b)
    partial[static_cast<std::size_t>(b)] = block_dot(a, c, static_cast<std::size_t>(b));
  return combine(partial);
}

double masked_weighted_sum(std::span<const double> a, std::span<const double> w,
                           std::span<const std::uint8_t> mask) {
  const auto nb = static_cast<std::ptrdiff_t>(num_blocks(a.size()));
  std::vector<double> partial(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b)
    partial[static_cast<std::size_t>(b)] =
        block_masked(a, w, mask, static_cast<std::size_t>(b));
  return combine(partial);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void diff_axis(std::span<const double> f, std::span<double> out, std::ptrdiff_t stride,
               int size, double h) {
  const auto n = static_cast<std::ptrdiff_t>(f.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const int k = static_cast<int>((i / static_cast<std::size_t>(stride)) %
                                   static_cast<std::size_t>(size));
    out[i] = diff_at(f, i, stride, k, size, h);
  }
}

void stencil_apply(std::span<const double> values, std::span<const std::ptrdiff_t> offsets,
                   std::span<const std::uint8_t> rows, std::span<const double> x,
                   std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    y[i] = rows[i] ? stencil_row(values, offsets, x, i) : 0.0;
  }
}

}  // namespace omp

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace plap::kernels
