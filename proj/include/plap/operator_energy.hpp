#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plap/grid.hpp"
#include "plap/linear_algebra.hpp"
#include "plap/model.hpp"

namespace plap {

// Discretization. Every cell of the grid contributes, at each of its 2^d
// corners, the one-sided gradient formed by the d cell edges meeting at that
// corner. The discrete energy is
//
//   E(u) = Σ_cells Σ_corners |cell|/2^d · α ((|g|² + ε²)^{p/2} - ε^p) / p
//          - Σ_nodes w_node F(x, u)
//
// with α, p evaluated at the corner node and w_node the trapezoid weight. The
// residual, first variation, second variation and Hessian are the exact
// derivatives of this functional, so they are mutually consistent to
// roundoff. For p = 2 the residual is the standard (2d+1)-point Laplacian.

struct EnergyReport {
  double dirichlet_part = 0.0;
  double potential_part = 0.0;
  double total = 0.0;
  std::string region;
  bool empty_region = false;
};

/// α |η|^{p-2} (I + (p-2) η ηᵀ / |η|²), extended by continuity at η = 0
/// (α I for p = 2, zero for p > 2).
Eigen::MatrixXd assemble_B(double alpha, double p, std::span<const double> eta);
/// Same with α, p evaluated at the x-coordinates `x`.
Eigen::MatrixXd assemble_B(std::span<const double> x, std::span<const double> eta,
                           const Coefficients& coefficients);
/// Hessian of the regularized density α (|η|² + ε²)^{p/2} / p:
/// α |η|_ε^{p-2} (I + (p-2) η ηᵀ / |η|_ε²). Equals assemble_B when ε = 0, η != 0.
Eigen::MatrixXd assemble_B_regularized(double alpha, double p, std::span<const double> eta,
                                       double eps);

/// Throws std::invalid_argument unless the field is exactly zero on the grid
/// boundary.
void require_boundary_vanishing(const ScalarField& field, const char* name);

/// ∂E/∂u_i for every node; boundary entries are zero (Dirichlet nodes).
std::vector<double> energy_gradient(const ScalarField& u, const ModelBundle& model);

/// -div(α |∇u|_ε^{p-2} ∇u) - f(x, u) at interior points (the energy gradient
/// divided by the nodal quadrature weight); zero on the boundary.
ScalarField residual(const ScalarField& u, const ModelBundle& model);

/// ∫ α |∇u|^{p-2} ∇u·∇ξ - ∫ f(x, u) ξ for boundary-vanishing ξ.
double weak_pairing(const ScalarField& u, const ScalarField& xi, const ModelBundle& model);

EnergyReport energy(const ScalarField& u, const ModelBundle& model, const Region& region);
EnergyReport energy(const ScalarField& u, const ModelBundle& model);

/// d/dt E(u + t φ) at t = 0. Shares its implementation with weak_pairing.
double first_variation(const ScalarField& u, const ScalarField& phi, const ModelBundle& model);

/// d²/dt² E(u + t φ) at t = 0: Σ w ⟨B_ε ∇φ, ∇φ⟩ - ∫ f_u(x, u) φ².
double second_variation(const ScalarField& u, const ScalarField& phi, const ModelBundle& model);

/// Hessian of E restricted to the interior nodes; ⟨Aφ, φ⟩ = second_variation.
StencilMatrix hessian_matrix(const ScalarField& u, const ModelBundle& model);

/// Interior-node mask (Dirichlet unknowns).
std::vector<std::uint8_t> interior_unknowns(const Grid& grid);

}  // namespace plap
