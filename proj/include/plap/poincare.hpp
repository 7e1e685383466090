#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plap/geometry.hpp"
#include "plap/grid.hpp"
#include "plap/model.hpp"

namespace plap {

// Both sides of the weighted Poincaré inequality for a stable solution u and a
// boundary-vanishing φ:
//
//   ∫_R α|∇u|^{p-2} (S + K²|∇_y u|² + |∇_L G|² + (p-2) T/|∇u|²) φ²
//       <= ∫_Ω |∇_y u|² ⟨B(x,∇u)∇φ, ∇φ⟩,
//
// evaluated pointwise with central differences and trapezoid weights. |∇u| is
// regularized by the model's eps_reg on both sides.

struct PoincareBreakdown {
  double S_term = 0.0;
  double K_term = 0.0;
  double L_term = 0.0;
  double T_term = 0.0;
};

struct PoincareReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  std::string phi_descriptor;
  PoincareBreakdown breakdown;
  /// Part of rhs coming from points outside R (the threshold band).
  double rhs_outside_region = 0.0;
  /// The stability hypothesis failed; excluded from acceptance.
  bool hypothesis_failed = false;
  /// |lhs| + |rhs| + 1.
  double scale() const;
};

struct LhsResult {
  double lhs = 0.0;
  PoincareBreakdown breakdown;
};

/// Throws std::invalid_argument on grid mismatch or when φ does not vanish on
/// the boundary.
LhsResult poincare_lhs(const ScalarField& u, const ModelBundle& model, const GeometryFields& geo,
                       const ScalarField& phi);
double poincare_rhs(const ScalarField& u, const ModelBundle& model, const ScalarField& phi);
/// rhs restricted to a region.
double poincare_rhs(const ScalarField& u, const ModelBundle& model, const ScalarField& phi,
                    const Region& region);
/// ∫ α(p-1)|∇u|_ε^{p-2} |∇_y u|² |∇φ|², an upper bound for the rhs.
double poincare_rhs_bound(const ScalarField& u, const ModelBundle& model, const ScalarField& phi);

struct NamedPhi {
  std::string descriptor;
  ScalarField phi;
};

/// Suite grammar, ';'-separated items:
///   random:<count>            seeded random_test_functions
///   cutoff:<R1>,<R2>,...      cutoff_phi for each R
///   bump:<c1>,...,<cn>,<r>    compact_bump at the given centre
std::vector<NamedPhi> parse_phi_suite(const std::string& spec, const Grid& grid, std::uint64_t seed);
std::vector<NamedPhi> random_phi_suite(const Grid& grid, std::uint64_t seed, int count);

struct PoincareOptions {
  GeometryOptions geometry;
  /// Stability gate; <= 0 means default_tol_stability of the form.
  double tol_stability = 0.0;
  double tol_poincare = 1e-6;
  /// Skip the eigenvalue gate (the caller has established stability).
  bool assume_stable = false;
};

struct PoincareSuiteResult {
  std::vector<PoincareReport> reports;
  double min_rayleigh = 0.0;
  bool hypothesis_holds = false;
  /// Every report has slack >= -tol_poincare · scale.
  bool all_pass = false;
};

PoincareSuiteResult verify_poincare(const ScalarField& u, const ModelBundle& model,
                                    const std::vector<NamedPhi>& suite,
                                    const PoincareOptions& options = {});

struct CutoffPhi {
  ScalarField phi;
  double R = 0.0;
  /// max over the annulus √R < |X| < R of |∇φ_R| |X| (2 in the continuum).
  double c2 = 0.0;
};
/// φ_R = log R on |X| <= √R, 2 log(R/|X|) for √R < |X| < R, 0 beyond.
/// Requires R > 1 and B_R inside the box along every active axis.
CutoffPhi cutoff_phi(const Grid& grid, double R);

struct AnnulusCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};
/// lhs = ∫_{√R <= |X| <= R} h/|X|², rhs = ∫_{√R}^R t^{-3} η(t) dt + η(R)/R²
/// with η(ρ) = 2∫_{B_ρ} h tabulated on 4× the radial grid count and the
/// t-integral by the trapezoid rule. ok = lhs <= rhs (1 + tol).
AnnulusCheck annulus_bound_check(const ScalarField& h, double R, double tol = 1e-9);

/// α(x)|∇u|^{p(x)} (central differences).
ScalarField energy_density(const ScalarField& u, const ModelBundle& model);

enum class GrowthBound { quadratic, n_minus_1, n_minus_sigma };

struct GrowthReport {
  std::vector<double> radii;
  std::vector<double> energies;
  double fitted_slope = 0.0;
  bool slope_defined = false;
  GrowthBound bound_kind = GrowthBound::quadratic;
  double bound_exponent = 2.0;
  /// fitted_slope > bound_exponent + slope_tol.
  bool violates = false;
};

std::string to_string(GrowthBound kind);
GrowthBound parse_growth_bound(const std::string& name);

/// Tabulates ∫_{B_R} α|∇u|^p and least-squares fits log E against log R.
/// Requires at least 3 strictly increasing radii with B_R inside the box.
GrowthReport energy_growth(const ScalarField& u, const ModelBundle& model, const std::vector<double>& radii,
                           GrowthBound bound = GrowthBound::quadratic, double sigma = 1.0,
                           double slope_tol = 0.1);

struct OperatorBoundCheck {
  std::size_t samples = 0;
  /// max of (⟨Bw,w⟩ - α(p-1)|η|^{p-2}|w|²) / (α(p-1)|η|^{p-2}|w|²).
  double max_relative_excess = 0.0;
  bool ok = false;
};
/// Samples x in the grid's x-box, η with |η| in [1e-3, 10] and w uniformly in
/// [-1, 1]^n, and compares ⟨B(x,η)w,w⟩ with α(p-1)|η|^{p-2}|w|².
OperatorBoundCheck check_operator_norm_bound(const Coefficients& coefficients, const Grid& grid,
                                             std::uint64_t seed, std::size_t samples,
                                             double tol = 1e-12);

}  // namespace plap
