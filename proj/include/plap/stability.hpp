#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plap/grid.hpp"
#include "plap/linear_algebra.hpp"
#include "plap/model.hpp"

namespace plap {

// Stability of u means Q(ξ) = ∫⟨B(x,∇u)∇ξ,∇ξ⟩ - ∫ f_u(x,u) ξ² >= 0 for every
// boundary-vanishing ξ. Discretely Q is the Hessian A of the energy, and the
// quotient is taken against the quadrature mass M, so the smallest eigenvalue
// of A ξ = λ M ξ approximates the continuum one.

struct EigenOptions {
  /// Converged when ‖M^{-1/2}(Aξ - λMξ)‖ / ‖M^{1/2}ξ‖ <= tol.
  double tol = 1e-7;
  /// Krylov vectors per restart cycle.
  int krylov_dim = 40;
  int max_restarts = 30;
  /// Relative tolerance of the inner shifted solves.
  double inner_tol = 1e-12;
  PreconditionerKind preconditioner = PreconditionerKind::multigrid;
};

struct StabilityReport {
  /// Smallest value of Q(ξ)/∫ξ² (best estimate when not converged).
  double min_rayleigh = 0.0;
  /// Number of shift-and-invert operator applications.
  int eigen_iterations = 0;
  /// Grid axis with min over the interior of ∂u > 0, y-axes searched first.
  std::optional<int> monotone_direction_found;
  double residual_of_eigenpair = 0.0;
  bool converged = false;
  /// Eigenvector (interior values, zero on the boundary).
  ScalarField eigenvector;
  std::string message;
};

/// Symmetric form A over the interior points with ⟨Aξ,ξ⟩ = second_variation(u, ξ).
StencilMatrix quadratic_form(const ScalarField& u, const ModelBundle& model);

/// Quadrature mass (trapezoid weight) on interior points, zero elsewhere.
std::vector<double> mass_diagonal(const Grid& grid);

/// Smallest eigenvalue of A ξ = λ M ξ by restarted shift-and-invert Lanczos
/// in the M-inner product. The shift starts below a Gershgorin bound and
/// moves up towards the Ritz value between restarts. Stagnation is reported.
StabilityReport min_rayleigh(const StencilMatrix& A, const EigenOptions& options = {});
StabilityReport min_rayleigh(const ScalarField& u, const ModelBundle& model,
                             const EigenOptions& options = {});

/// Characteristic size of A/M: max over interior rows of |A_ii| h_min² / M_ii,
/// at least 1.
double form_scale(const StencilMatrix& A);
/// 1e-8 × form_scale.
double default_tol_stability(const StencilMatrix& A);

bool is_stable(const StabilityReport& report, double tol_stability);

/// First grid axis with min over the interior of ∂u > 0, y-axes searched
/// before x-axes.
std::optional<int> monotone_direction(const ScalarField& u);

struct MonotoneStabilityResult {
  bool applicable = false;
  /// min_rayleigh >= -tol_stability (meaningful only when applicable).
  bool stable = false;
  /// Every sampled ξ satisfied ∫ f_u ξ² <= ∫⟨B∇ξ,∇ξ⟩ + tol.
  bool chain_holds = false;
  /// min over interior of ∂u along the tested axis.
  double min_derivative = 0.0;
  /// Smallest Q(ξ)/∫ξ² over the sampled ξ.
  double worst_chain_quotient = 0.0;
  StabilityReport report;
  std::string message;
};

/// Monotonicity along fiber axis `y_axis` (0-based among the y-axes) implies
/// stability. Not applicable when ∂_{y_j}u <= 0 somewhere in the interior.
MonotoneStabilityResult verify_monotone_stability(const ScalarField& u, const ModelBundle& model, int y_axis,
                             std::uint64_t seed = 79, int samples = 10,
                             const EigenOptions& options = {});

}  // namespace plap
