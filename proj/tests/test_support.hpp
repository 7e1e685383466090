#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "plap/grid.hpp"
#include "plap/linear_algebra.hpp"
#include "plap/stability.hpp"

namespace plap::testing {

inline Grid square(int m, int n_minus_m, int points, double lo = 0.0, double hi = 1.0) {
  const int n = m + n_minus_m;
  return Grid(m, n_minus_m, std::vector<int>(n, points), std::vector<Interval>(n, {lo, hi}));
}

/// a·X + amplitude Σ_k c_k sin(k_k·X + φ_k): smooth, with |∇u| >= |a| - O(amplitude).
inline ScalarField random_smooth(const Grid& g, std::mt19937_64& rng, double slope, double amplitude) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = g.dim();
  std::vector<double> a(n), c(3), ph(3), k(3 * n);
  for (auto& v : a) v = U(rng);
  double na = 0.0;
  for (double v : a) na += v * v;
  for (auto& v : a) v *= slope / std::sqrt(na);
  for (auto& v : c) v = U(rng);
  for (auto& v : ph) v = 3.0 * U(rng);
  for (auto& v : k) v = 2.0 * U(rng);
  return ScalarField::sample(g, [&](std::span<const double> X) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * X[i];
    for (int t = 0; t < 3; ++t) {
      double arg = ph[t];
      for (int i = 0; i < n; ++i) arg += k[t * n + i] * X[i];
      s += amplitude * c[t] * std::sin(arg);
    }
    return s;
  });
}

/// Smooth function vanishing on the box boundary: Π sin(π t_i) times a random
/// smooth modulation.
inline ScalarField random_bump(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = g.dim();
  std::vector<double> k(n);
  for (auto& v : k) v = 2.0 * U(rng);
  const double ph = 3.0 * U(rng), amp = 1.0 + 0.5 * U(rng);
  ScalarField f = ScalarField::sample(g, [&](std::span<const double> X) {
    double s = amp;
    double arg = ph;
    for (int i = 0; i < n; ++i) {
      if (g.collapsed(i)) continue;
      const Interval& e = g.extent(i);
      s *= std::sin(std::numbers::pi * (X[i] - e.lo) / (e.hi - e.lo));
      arg += k[i] * X[i];
    }
    return s * (1.0 + 0.5 * std::sin(arg));
  });
  for (std::size_t i = 0; i < f.size(); ++i)
    if (g.on_boundary(i)) f[i] = 0.0;
  return f;
}

/// Smallest eigenvalue of A ξ = λ M ξ by a dense symmetric solver on
/// M^{-1/2} A M^{-1/2}.
inline double dense_min_eigenvalue(const StencilMatrix& A) {
  const Grid& g = A.grid();
  const auto unknowns = A.unknowns();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (unknowns[i]) idx.push_back(i);
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd D(n, n);
  std::vector<double> e(g.num_points(), 0.0), y(g.num_points());
  for (Eigen::Index c = 0; c < n; ++c) {
    e[idx[c]] = 1.0;
    A.apply(e, y);
    e[idx[c]] = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) D(r, c) = y[idx[r]];
  }
  const std::vector<double> m = mass_diagonal(g);
  Eigen::VectorXd s(n);
  for (Eigen::Index r = 0; r < n; ++r) s[r] = 1.0 / std::sqrt(m[idx[r]]);
  const Eigen::MatrixXd S = s.asDiagonal() * D * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace plap::testing
