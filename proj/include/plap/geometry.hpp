#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "plap/grid.hpp"

namespace plap {

// Level-set geometry of u inside each x-slice. ∇_y is the gradient over the
// fiber axes, G = sqrt(|∇_y u|² + ε²) the smoothed fiber gradient norm and
// ν = ∇_y u / |∇_y u| the unit normal. First derivatives of G are finite
// differences of the G field, so the algebraic identities between the
// quantities below hold only up to discretization error.
//
// Fields are defined on the region mask R = {interior points with
// |∇_y u| > θ_grad}; every other point holds the sentinel NaN and is skipped
// by integrate(). The core mask holds the points of R whose axis neighbours
// are also in R; statistics are taken over the core only.

struct GeometryOptions {
  /// Absolute threshold; when <= 0, theta_rel × max|∇_y u| is used.
  double theta_grad = 0.0;
  double theta_rel = 1e-4;
  /// ε in G = sqrt(|∇_y u|² + ε²).
  double eps_smooth = 1e-8;
};

struct GeometryFields {
  Region region_mask;
  Region core_mask;
  /// S = -|∇_x G|² + Σ_{i,j} u_{x_i y_j}².
  ScalarField S;
  /// T = -(∇u·∇G)² + Σ_j ζ_j², ζ_j = ∇u·∇u_{y_j}, with ∇G from the chain rule on the
  /// Hessian (S and U use the difference quotient of G instead).
  ScalarField T;
  /// U = |∇G|² - Σ_j |∇u_{y_j}|².
  ScalarField U;
  /// K² = Σ κ_j² (zero when n - m = 1).
  ScalarField Ksq;
  /// |∇_L G|².
  ScalarField tangential_grad_sq;
  /// ν over the fiber axes (n - m components).
  VectorField normal;
  /// |∇_y u| (unsmoothed) on the mask.
  ScalarField grad_y_norm;
  double theta_grad = 0.0;
  double eps_smooth = 0.0;
  /// max over R of ε / |∇_y u|, the relative bias of smoothing G.
  double smoothing_bias = 0.0;
  /// Points of R outside the core.
  std::size_t near_boundary_points = 0;
};

/// Threshold actually used for u under `options`.
double resolve_theta(const ScalarField& u, const GeometryOptions& options);

/// Interior points with |∇_y u| > θ_grad; throws unless θ_grad > 0.
Region region(const ScalarField& u, double theta_grad);
/// Points of `mask` all of whose ±1 neighbours along active axes are in `mask`.
Region core_of(const Region& mask);

/// ∇_L G = ∇_y G - (∇_y G·ν)ν on `mask`, NaN elsewhere.
VectorField tangential_gradient(const ScalarField& u, const ScalarField& G, const Region& mask);

struct CurvatureFields {
  ScalarField Ksq;
  /// Principal curvatures κ_1 <= ... <= κ_{n-m-1}: eigenvalues of
  /// P Hess_y u P / |∇_y u| on the tangent space, ν along ∇_y u.
  std::vector<ScalarField> kappa;
  std::size_t eigen_failures = 0;
};
CurvatureFields curvatures(const ScalarField& u, const Region& mask, bool with_kappa = false);

GeometryFields compute_geometry(const ScalarField& u, const GeometryOptions& options = {});
ScalarField compute_S(const ScalarField& u, const GeometryOptions& options = {});
ScalarField compute_T(const ScalarField& u, const GeometryOptions& options = {});
ScalarField compute_U(const ScalarField& u, const GeometryOptions& options = {});

/// Minimum of a field over the core mask (+inf when empty).
double core_min(const ScalarField& f, const GeometryFields& geo);

struct IdentityReport {
  /// max over the core of |d| / (s + 1e-3 max s) with
  /// d = U + S + K²|∇_y u|² + |∇_L G|² and local scale s = |∇G|² + Σ_j |∇u_{y_j}|².
  double max_relative_defect = 0.0;
  double max_abs_defect = 0.0;
  std::size_t points = 0;
};
/// Points with |y| < exclude_radius are left out (for fields singular at y = 0).
IdentityReport verify_identity_SZ(const ScalarField& u, const GeometryFields& geo,
                                  double exclude_radius = 0.0);
IdentityReport verify_identity_SZ(const ScalarField& u, const GeometryOptions& options = {},
                                  double exclude_radius = 0.0);

struct ParallelismReport {
  /// 1 where every ∇_y u_{x_i} is parallel to ν, 0 where not, NaN off the core.
  ScalarField parallel;
  bool verdict = true;
  /// max over core points of |∇_y u_{x_i} - (∇_y u_{x_i}·ν)ν| / |∇_y u_{x_i}|.
  double max_ratio = 0.0;
  /// max of S over parallel core points (the equality case S = 0).
  double max_S_parallel = 0.0;
  std::size_t non_parallel_points = 0;
};
/// A vector v counts as parallel when |v⊥| <= tol_par (|v| + floor), floor =
/// 1e-6 × max over the core of |v|.
ParallelismReport check_parallelism(const ScalarField& u, const GeometryFields& geo,
                                    double tol_par = 1e-2);

struct SliceOmega {
  /// x multi-index of the slice (one entry per x-axis).
  std::vector<int> x_index;
  std::vector<double> omega;
  bool skipped = false;
  /// u_o table: bin-mean abscissae s = ω·y and bin-mean values.
  std::vector<double> s;
  std::vector<double> u_o;
  double symmetry_defect = 0.0;
};

struct OmegaFit {
  std::vector<SliceOmega> slices;
  /// Max pairwise angle between slice directions, as lines (radians).
  double constancy_score = 0.0;
  /// max |u(x,y) - u_o(x, ω·y)| over all used slices.
  double symmetry_defect = 0.0;
  std::size_t skipped_slices = 0;
};

/// Per x-slice ω(x): dominant eigenvector of the weighted second-moment matrix
/// of ν over the slice's mask points, sign-fixed so its first non-zero
/// component is positive. u_o is built by binning u against ω·y with bin
/// width min_y h and interpolating linearly between bin means.
OmegaFit fit_omega(const ScalarField& u, const GeometryFields& geo);
OmegaFit fit_omega(const ScalarField& u, const GeometryOptions& options = {});

/// max over the core of |∂_{x_i} G| - |∇_y u_{x_i}| (<= O(h) by Cauchy-Schwarz).
double cauchy_schwarz_excess(const ScalarField& u, const GeometryFields& geo);

}  // namespace plap
