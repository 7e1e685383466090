#pragma once

// Data-parallel inner loops. Every kernel has a serial reference version and
// an OpenMP version; the two produce bitwise-identical results (reductions
// use a fixed block decomposition that does not depend on the thread count).

#include <cstddef>
#include <cstdint>
#include <span>

namespace plap::kernels {

/// Reduction block length. Partial sums are formed per block and combined in
/// block order.
inline constexpr std::size_t kBlock = 4096;

namespace serial {
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
/// Σ w_i a_i over entries with mask_i != 0.
double masked_weighted_sum(std::span<const double> a, std::span<const double> w,
                           std::span<const std::uint8_t> mask);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// Derivative along one axis of a row-major lattice (see grid.hpp).
void diff_axis(std::span<const double> f, std::span<double> out, std::ptrdiff_t stride,
               int size, double h);
/// y_i = Σ_o values[i*nofs+o] x[i+offsets[o]] on rows with rows[i] != 0,
/// y_i = 0 elsewhere.
void stencil_apply(std::span<const double> values, std::span<const std::ptrdiff_t> offsets,
                   std::span<const std::uint8_t> rows, std::span<const double> x,
                   std::span<double> y);
}  // namespace serial

namespace omp {
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
double masked_weighted_sum(std::span<const double> a, std::span<const double> w,
                           std::span<const std::uint8_t> mask);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void diff_axis(std::span<const double> f, std::span<double> out, std::ptrdiff_t stride,
               int size, double h);
void stencil_apply(std::span<const double> values, std::span<const std::ptrdiff_t> offsets,
                   std::span<const std::uint8_t> rows, std::span<const double> x,
                   std::span<double> y);
}  // namespace omp

// Default entry points used by the library.
using omp::axpy;
using omp::diff_axis;
using omp::dot;
using omp::masked_weighted_sum;
using omp::stencil_apply;
using omp::sum;

/// Sets the OpenMP thread count (no-op when n <= 0).
void set_threads(int n);
int max_threads();

}  // namespace plap::kernels
