#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plap/grid.hpp"

namespace plap {

/// Sparse matrix over the points of a Grid with couplings restricted to the
/// 3^d neighbourhood {-1,0,1}^d of each point (d = number of active axes).
///
/// Rows and columns are indexed by grid points; only points flagged in
/// `unknowns` carry equations, all other rows and columns are zero. Vectors
/// passed to `apply` are full-grid vectors.
class StencilMatrix {
 public:
  StencilMatrix() = default;
  StencilMatrix(Grid grid, std::vector<std::uint8_t> unknowns);

  const Grid& grid() const { return grid_; }
  std::span<const std::uint8_t> unknowns() const { return unknowns_; }
  std::size_t num_offsets() const { return offsets_.size(); }
  int center() const { return center_; }
  /// Index of the offset -o.
  int opposite(int o) const { return static_cast<int>(offsets_.size()) - 1 - o; }
  std::ptrdiff_t offset(int o) const { return offsets_[o]; }
  std::span<const std::ptrdiff_t> offsets() const { return offsets_; }
  /// Per-axis step (-1, 0, +1) of offset o along active axis number j.
  int step(int o, int j) const;
  /// Offset index for a step vector over the active axes.
  int offset_index(std::span<const int> steps) const;

  double value(std::size_t row, int o) const { return values_[row * offsets_.size() + o]; }
  double& at(std::size_t row, int o) { return values_[row * offsets_.size() + o]; }
  std::span<const double> raw() const { return values_; }

  void apply(std::span<const double> x, std::span<double> y) const;
  double quadratic(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  /// Adds scale * d_i to each diagonal entry of an unknown row.
  void add_diagonal(std::span<const double> d, double scale);
  /// Exact (bitwise) symmetry check: A(i, i+o) == A(i+o, i).
  bool is_symmetric() const;
  std::size_t num_unknowns() const;

 private:
  Grid grid_;
  std::vector<std::uint8_t> unknowns_;
  std::vector<std::ptrdiff_t> offsets_;
  int center_ = 0;
  int d_ = 0;
  std::vector<double> values_;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct CgOptions {
  double rel_tol = 1e-10;
  int max_iters = 5000;
  /// Stop at the first direction with p^T A p <= 0 (truncated Newton-CG).
  bool stop_on_negative_curvature = false;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  bool negative_curvature = false;
};

/// Preconditioned conjugate gradients for A x = b started from the incoming x.
/// On negative curvature at the first step (when requested) x is set to the
/// preconditioned residual direction.
CgResult pcg(const LinearMap& A, const LinearMap& precond, std::span<const double> b,
             std::span<double> x, const CgOptions& opts);

enum class PreconditionerKind { jacobi, multigrid };
PreconditionerKind parse_preconditioner(const std::string& name);
std::string to_string(PreconditionerKind kind);

/// Geometric multigrid V-cycle (symmetric Gauss-Seidel smoothing, Galerkin
/// coarse operators with multilinear interpolation). Coarsening stops when an
/// active axis cannot be halved.
class Multigrid {
 public:
  explicit Multigrid(const StencilMatrix& A, int smoothing_sweeps = 1);
  void apply(std::span<const double> r, std::span<double> z) const;
  std::size_t num_levels() const { return levels_.size(); }

 private:
  struct Level {
    StencilMatrix A;
    Grid grid;
  };
  void vcycle(std::size_t l, std::span<const double> b, std::span<double> x) const;
  void smooth(const StencilMatrix& A, std::span<const double> b, std::span<double> x,
              bool forward) const;
  std::vector<Level> levels_;
  int sweeps_ = 1;
};

/// Wraps either preconditioner behind a LinearMap.
LinearMap make_preconditioner(const StencilMatrix& A, PreconditionerKind kind);

/// Solves A x = b with the chosen preconditioner (x holds the initial guess).
CgResult solve_spd(const StencilMatrix& A, std::span<const double> b, std::span<double> x,
                   PreconditionerKind kind, const CgOptions& opts);

}  // namespace plap
