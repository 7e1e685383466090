#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "plap/grid.hpp"
#include "plap/linear_algebra.hpp"
#include "plap/model.hpp"

namespace plap {

struct SolverOptions {
  /// Final gradient regularization ε.
  double eps_reg = 1e-8;
  /// Stop when the max-norm interior residual is at most this.
  double tol_residual = 1e-8;
  /// Total Newton iterations over all continuation stages.
  int max_iters = 100;
  /// First trial step of every line search, in (0, 1].
  double damping = 1.0;
  /// ε runs geometrically from 10³ eps_reg down to eps_reg over this many
  /// stages (only when some p(x) > 2).
  int continuation_steps = 4;
  int max_backtracks = 40;
  PreconditionerKind preconditioner = PreconditionerKind::multigrid;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  double final_residual_norm = 0.0;
  /// Energy after every accepted step (index 0 = initial guess).
  std::vector<double> energy_trace;
  bool converged = false;
  int linear_iterations = 0;
  std::string message;
};

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

/// Max-norm of the residual over interior points.
double residual_norm(const ScalarField& u, const ModelBundle& model);

/// Minimizes the discrete energy with Dirichlet data by damped truncated
/// Newton (Hessian = exact second variation, multigrid- or Jacobi-
/// preconditioned CG, Armijo backtracking). The returned u equals
/// boundary_data on the boundary bit for bit. Non-convergence is reported,
/// not thrown; a non-finite initial energy throws std::domain_error naming the
/// offending point.
SolveResult solve(const ModelBundle& model, const ScalarField& boundary_data,
                  const ScalarField& initial_guess, const SolverOptions& options);

/// Solution of -Δu = 0 with the boundary values of `boundary_data`.
ScalarField harmonic_initial_guess(const ScalarField& boundary_data,
                                   PreconditionerKind kind = PreconditionerKind::multigrid);

/// Solves on successively refined grids, each seeded by the multilinear
/// prolongation of the previous solution. The coarsest grid has at least
/// `coarsest_points` points per active axis.
SolveResult solve_nested(const std::function<ModelBundle(const Grid&)>& make_model,
                         const std::function<double(std::span<const double>)>& boundary,
                         const Grid& fine, const SolverOptions& options, int coarsest_points = 33);

/// One fiber y ↦ u(x, y) at fixed x with boundary values u(lo) = left,
/// u(hi) = right.
struct FiberProblem {
  Coefficients coefficients;
  Nonlinearity nonlinearity;
  std::vector<double> x{0.0};
  Interval range{-8.0, 8.0};
  int points = 1025;
  double left = -1.0;
  double right = 1.0;
};

/// Solves the fiber problem from a sharp monotone ramp centred in the range.
/// Always Jacobi-preconditioned, so odd data and nonlinearity give an odd
/// profile.
SolveResult solve_1d_profile(const FiberProblem& problem, const SolverOptions& options);

}  // namespace plap
