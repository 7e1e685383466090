#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plap {

/// Closed interval [lo, hi] along one axis.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Tensor-product lattice over a box in R^m x R^(n-m).
///
/// Axes 0..m-1 are the x-coordinates, axes m..n-1 the y-coordinates. Points
/// are stored row-major with the last axis varying fastest, so the y-axes are
/// the innermost loops.
///
/// An axis with a single point is "collapsed": it pins that coordinate to
/// `lo` and carries no derivatives, no boundary and a unit quadrature factor.
/// This is how fiber problems at a fixed x are represented.
class Grid {
 public:
  Grid() = default;
  Grid(int m, int n_minus_m, std::vector<int> sizes, std::vector<Interval> extents);

  /// Uniform spacing `h` on every axis over the given extents (hi - lo must be
  /// a multiple of h up to 1e-9 relative).
  static Grid with_spacing(int m, int n_minus_m, std::vector<Interval> extents, double h);

  int m() const { return m_; }
  int n_minus_m() const { return n_ - m_; }
  int dim() const { return n_; }

  int size(int axis) const { return sizes_[axis]; }
  const std::vector<int>& sizes() const { return sizes_; }
  const Interval& extent(int axis) const { return extents_[axis]; }
  const std::vector<Interval>& extents() const { return extents_; }
  double spacing(int axis) const { return spacing_[axis]; }
  bool collapsed(int axis) const { return sizes_[axis] == 1; }
  std::ptrdiff_t stride(int axis) const { return strides_[axis]; }

  /// Non-collapsed axes in increasing order.
  const std::vector<int>& active_axes() const { return active_; }
  double max_spacing() const;
  double min_spacing() const;

  std::size_t num_points() const { return num_points_; }

  int axis_index(std::size_t point, int axis) const {
    return static_cast<int>((point / static_cast<std::size_t>(strides_[axis])) %
                            static_cast<std::size_t>(sizes_[axis]));
  }
  void unravel(std::size_t point, std::span<int> multi) const;
  std::size_t ravel(std::span<const int> multi) const;

  double coord(int axis, int i) const { return extents_[axis].lo + i * spacing_[axis]; }
  void coords(std::size_t point, std::span<double> X) const;
  double radius(std::size_t point) const;

  /// True when some active axis sits at its first or last index.
  bool on_boundary(std::size_t point) const;
  /// Tensor-product trapezoid weight of a point over the whole box.
  double trapezoid_weight(std::size_t point) const;

  bool same_as(const Grid& other) const;
  bool operator==(const Grid& other) const { return same_as(other); }

  std::string describe() const;

 private:
  int m_ = 0;
  int n_ = 0;
  std::vector<int> sizes_;
  std::vector<Interval> extents_;
  std::vector<double> spacing_;
  std::vector<std::ptrdiff_t> strides_;
  std::vector<int> active_;
  std::size_t num_points_ = 0;
};

/// One real value per grid point.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Grid grid, double fill = 0.0);
  ScalarField(Grid grid, std::vector<double> values);

  template <class F>
  static ScalarField sample(const Grid& grid, F&& fn) {
    ScalarField out(grid);
    std::vector<double> X(static_cast<std::size_t>(grid.dim()));
    for (std::size_t i = 0; i < grid.num_points(); ++i) {
      grid.coords(i, X);
      out.values_[i] = fn(std::span<const double>(X));
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool all_finite() const;
  double max_abs() const;
  double min() const;
  double max() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

 private:
  Grid grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// n ScalarFields sharing one grid.
struct VectorField {
  std::vector<ScalarField> components;

  const Grid& grid() const { return components.front().grid(); }
  std::size_t dim() const { return components.size(); }
  const ScalarField& operator[](std::size_t k) const { return components[k]; }
  ScalarField& operator[](std::size_t k) { return components[k]; }
};

/// Symmetric n x n matrix per grid point, stored densely (entry (a,b) and
/// (b,a) hold the same bits).
class HessianField {
 public:
  HessianField() = default;
  explicit HessianField(Grid grid);

  const Grid& grid() const { return grid_; }
  int dim() const { return n_; }
  double operator()(std::size_t point, int a, int b) const {
    return data_[(point * n_ + a) * n_ + b];
  }
  void set(std::size_t point, int a, int b, double v) {
    data_[(point * n_ + a) * n_ + b] = v;
    data_[(point * n_ + b) * n_ + a] = v;
  }
  std::span<const double> at(std::size_t point) const {
    return {data_.data() + point * n_ * n_, static_cast<std::size_t>(n_ * n_)};
  }

 private:
  Grid grid_;
  int n_ = 0;
  std::vector<double> data_;
};

enum class RegionKind { whole, interior, ball, annulus, custom };

/// Boolean mask over a grid.
class Region {
 public:
  Region() = default;

  static Region whole(const Grid& grid);
  /// All points that are not on the boundary of the box.
  static Region interior(const Grid& grid);
  /// Points with |X| <= radius.
  static Region ball(const Grid& grid, double radius);
  /// Points with |X| in [rho1, rho2]; throws if rho1 > rho2.
  static Region annulus(const Grid& grid, double rho1, double rho2);
  static Region custom(const Grid& grid, std::vector<std::uint8_t> mask);

  const Grid& grid() const { return grid_; }
  RegionKind kind() const { return kind_; }
  double param(int i) const { return params_[i]; }
  bool contains(std::size_t point) const { return mask_[point] != 0; }
  std::span<const std::uint8_t> mask() const { return mask_; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  Region intersect(const Region& other) const;
  Region minus(const Region& other) const;
  std::string describe() const;

 private:
  Grid grid_;
  RegionKind kind_ = RegionKind::custom;
  double params_[2] = {0.0, 0.0};
  std::vector<std::uint8_t> mask_;
};

// Finite-difference calculus. Central second-order differences at interior
// points, one-sided three-point second-order differences at boundary points.

/// Derivative along one axis (zero along a collapsed axis).
ScalarField diff(const ScalarField& field, int axis);
VectorField gradient(const ScalarField& field);
HessianField hessian(const ScalarField& field);

/// Trapezoid quadrature over the masked points. Each point keeps its
/// whole-box trapezoid weight, so integrals over a disjoint partition add up.
/// An empty mask integrates to 0.
double integrate(const ScalarField& field, const Region& region);
/// Sum of the quadrature weights of the masked points.
double measure(const Region& region);

/// Pointwise product, sum of squares, etc.
ScalarField pointwise_product(const ScalarField& a, const ScalarField& b);
ScalarField norm_squared(const VectorField& v);

/// Multilinear prolongation from a grid to one with spacing halved on each
/// active axis (used for nested iteration).
ScalarField refine_linear(const ScalarField& coarse);

}  // namespace plap
