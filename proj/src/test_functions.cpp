#include "plap/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace plap {
namespace {

void zero_boundary(ScalarField& f) {
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (g.on_boundary(i)) f[i] = 0.0;
}

double unit(const Grid& g, int axis, double x) {
  const Interval& e = g.extent(axis);
  return (x - e.lo) / (e.hi - e.lo);
}

}  // namespace

ScalarField compact_bump(const Grid& grid, std::span<const double> centre, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
  if (centre.size() != static_cast<std::size_t>(grid.dim()))
    throw std::invalid_argument("bump centre dimension mismatch");
  ScalarField f = ScalarField::sample(grid, [&](std::span<const double> X) {
    double r2 = 0.0;
    for (int a : grid.active_axes()) r2 += (X[a] - centre[a]) * (X[a] - centre[a]);
    const double t = 1.0 - r2 / (radius * radius);
    return t > 0.0 ? t * t * t : 0.0;
  });
  zero_boundary(f);
  return f;
}

std::vector<ScalarField> random_test_functions(const Grid& grid, std::uint64_t seed, int count) {
  if (count < 0) throw std::invalid_argument("negative test-function count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = grid.dim();
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    if (s % 2 == 0) {
      std::vector<double> k(static_cast<std::size_t>(n));
      for (auto& v : k) v = 2.0 * std::numbers::pi * U(rng);
      const double phase = std::numbers::pi * U(rng);
      const double amp = 1.0 + 0.5 * U(rng);
      ScalarField f = ScalarField::sample(grid, [&](std::span<const double> X) {
        double env = amp, arg = phase;
        for (int a : grid.active_axes()) {
          const double t = unit(grid, a, X[a]);
          env *= std::sin(std::numbers::pi * t);
          arg += k[a] * t;
        }
        return env * (1.0 + 0.5 * std::sin(arg));
      });
      zero_boundary(f);
      out.push_back(std::move(f));
    } else {
      // Centre in the middle 60% of every active axis, radius 15-40% of the
      // shortest active side.
      std::vector<double> c(static_cast<std::size_t>(n));
      double side = INFINITY;
      for (int a = 0; a < n; ++a) {
        const Interval& e = grid.extent(a);
        c[a] = e.lo + (0.5 + 0.3 * U(rng)) * (e.hi - e.lo);
        if (!grid.collapsed(a)) side = std::min(side, e.hi - e.lo);
      }
      const double r = (0.275 + 0.125 * U(rng)) * side;
      out.push_back(compact_bump(grid, c, r));
    }
  }
  return out;
}

}  // namespace plap
