#include "plap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "plap/kernels.hpp"

namespace plap {

Grid::Grid(int m, int n_minus_m, std::vector<int> sizes, std::vector<Interval> extents)
    : m_(m), n_(m + n_minus_m), sizes_(std::move(sizes)), extents_(std::move(extents)) {
  if (m < 1 || n_minus_m < 1)
    throw std::invalid_argument("Grid: need m >= 1 and n - m >= 1");
  if (static_cast<int>(sizes_.size()) != n_ || static_cast<int>(extents_.size()) != n_)
    throw std::invalid_argument("Grid: sizes and extents must have n entries");
  spacing_.assign(n_, 0.0);
  strides_.assign(n_, 1);
  for (int k = 0; k < n_; ++k) {
    const int s = sizes_[k];
    if (s == 1) continue;
    if (s < 3)
      throw std::invalid_argument("Grid: axis " + std::to_string(k) +
                                  " needs at least 3 points (or exactly 1 to collapse it)");
    const double len = extents_[k].hi - extents_[k].lo;
    if (!(len > 0.0) || !std::isfinite(len))
      throw std::invalid_argument("Grid: axis " + std::to_string(k) + " has an empty extent");
    spacing_[k] = len / (s - 1);
    active_.push_back(k);
  }
  for (int k = n_ - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * sizes_[k + 1];
  num_points_ = static_cast<std::size_t>(strides_[0]) * static_cast<std::size_t>(sizes_[0]);
  if (active_.empty()) throw std::invalid_argument("Grid: every axis is collapsed");
}

Grid Grid::with_spacing(int m, int n_minus_m, std::vector<Interval> extents, double h) {
  std::vector<int> sizes;
  for (const auto& e : extents) {
    const double cells = (e.hi - e.lo) / h;
    const double r = std::round(cells);
    if (r < 2 || std::abs(cells - r) > 1e-9 * std::max(1.0, r))
      throw std::invalid_argument("Grid::with_spacing: extent is not a multiple of h");
    sizes.push_back(static_cast<int>(r) + 1);
  }
  return Grid(m, n_minus_m, std::move(sizes), std::move(extents));
}

double Grid::max_spacing() const {
  double h = 0.0;
  for (int k : active_) h = std::max(h, spacing_[k]);
  return h;
}

double Grid::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (int k : active_) h = std::min(h, spacing_[k]);
  return h;
}

void Grid::unravel(std::size_t point, std::span<int> multi) const {
  for (int k = 0; k < n_; ++k) multi[k] = axis_index(point, k);
}

std::size_t Grid::ravel(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < n_; ++k) idx += static_cast<std::size_t>(multi[k]) * strides_[k];
  return idx;
}

void Grid::coords(std::size_t point, std::span<double> X) const {
  for (int k = 0; k < n_; ++k) X[k] = coord(k, axis_index(point, k));
}

double Grid::radius(std::size_t point) const {
  double r2 = 0.0;
  for (int k = 0; k < n_; ++k) {
    const double c = coord(k, axis_index(point, k));
    r2 += c * c;
  }
  return std::sqrt(r2);
}

bool Grid::on_boundary(std::size_t point) const {
  for (int k : active_) {
    const int i = axis_index(point, k);
    if (i == 0 || i == sizes_[k] - 1) return true;
  }
  return false;
}

double Grid::trapezoid_weight(std::size_t point) const {
  double w = 1.0;
  for (int k : active_) {
    const int i = axis_index(point, k);
    w *= (i == 0 || i == sizes_[k] - 1) ? 0.5 * spacing_[k] : spacing_[k];
  }
  return w;
}

bool Grid::same_as(const Grid& o) const {
  return m_ == o.m_ && n_ == o.n_ && sizes_ == o.sizes_ && extents_ == o.extents_;
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << "n=" << n_ << " m=" << m_ << " sizes=";
  for (int k = 0; k < n_; ++k) os << (k ? "x" : "") << sizes_[k];
  return os.str();
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(Grid grid, double fill)
    : grid_(std::move(grid)), values_(grid_.num_points(), fill) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.num_points())
    throw std::invalid_argument("ScalarField: value count does not match the grid");
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

HessianField::HessianField(Grid grid)
    : grid_(std::move(grid)),
      n_(grid_.dim()),
      data_(grid_.num_points() * static_cast<std::size_t>(n_ * n_), 0.0) {}

// ---------------------------------------------------------------------------

Region Region::whole(const Grid& grid) {
  Region r;
  r.grid_ = grid;
  r.kind_ = RegionKind::whole;
  r.mask_.assign(grid.num_points(), 1);
  return r;
}

Region Region::interior(const Grid& grid) {
  Region r;
  r.grid_ = grid;
  r.kind_ = RegionKind::interior;
  r.mask_.resize(grid.num_points());
  for (std::size_t i = 0; i < grid.num_points(); ++i) r.mask_[i] = grid.on_boundary(i) ? 0 : 1;
  return r;
}

Region Region::ball(const Grid& grid, double radius) {
  Region r;
  r.grid_ = grid;
  r.kind_ = RegionKind::ball;
  r.params_[0] = radius;
  r.mask_.resize(grid.num_points());
  for (std::size_t i = 0; i < grid.num_points(); ++i)
    r.mask_[i] = grid.radius(i) <= radius ? 1 : 0;
  return r;
}

Region Region::annulus(const Grid& grid, double rho1, double rho2) {
  if (rho1 > rho2) throw std::invalid_argument("Region::annulus: need rho1 <= rho2");
  Region r;
  r.grid_ = grid;
  r.kind_ = RegionKind::annulus;
  r.params_[0] = rho1;
  r.params_[1] = rho2;
  r.mask_.resize(grid.num_points());
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const double rad = grid.radius(i);
    r.mask_[i] = (rad >= rho1 && rad <= rho2) ? 1 : 0;
  }
  return r;
}

Region Region::custom(const Grid& grid, std::vector<std::uint8_t> mask) {
  if (mask.size() != grid.num_points())
    throw std::invalid_argument("Region::custom: mask size does not match the grid");
  Region r;
  r.grid_ = grid;
  r.kind_ = RegionKind::custom;
  r.mask_ = std::move(mask);
  return r;
}

std::size_t Region::count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

Region Region::intersect(const Region& other) const {
  std::vector<std::uint8_t> m(mask_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (mask_[i] && other.mask_[i]) ? 1 : 0;
  return custom(grid_, std::move(m));
}

Region Region::minus(const Region& other) const {
  std::vector<std::uint8_t> m(mask_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (mask_[i] && !other.mask_[i]) ? 1 : 0;
  return custom(grid_, std::move(m));
}

std::string Region::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case RegionKind::whole: os << "whole"; break;
    case RegionKind::interior: os << "interior"; break;
    case RegionKind::ball: os << "ball(" << params_[0] << ")"; break;
    case RegionKind::annulus: os << "annulus(" << params_[0] << "," << params_[1] << ")"; break;
    case RegionKind::custom: os << "custom"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

ScalarField diff(const ScalarField& field, int axis) {
  const Grid& g = field.grid();
  ScalarField out(g);
  if (g.collapsed(axis)) return out;
  kernels::diff_axis(field.values(), out.values(), g.stride(axis), g.size(axis), g.spacing(axis));
  return out;
}

VectorField gradient(const ScalarField& field) {
  VectorField v;
  v.components.reserve(static_cast<std::size_t>(field.grid().dim()));
  for (int k = 0; k < field.grid().dim(); ++k) v.components.push_back(diff(field, k));
  return v;
}

HessianField hessian(const ScalarField& field) {
  const Grid& g = field.grid();
  const int n = g.dim();
  HessianField H(g);
  std::vector<ScalarField> first(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) first[a] = diff(field, a);

  // Diagonal: compact second difference; boundary points reuse the stencil of
  // their inner neighbour (exact on quadratics).
  for (int a : g.active_axes()) {
    const std::ptrdiff_t s = g.stride(a);
    const int size = g.size(a);
    const double inv = 1.0 / (g.spacing(a) * g.spacing(a));
    const auto np = static_cast<std::ptrdiff_t>(g.num_points());
    std::span<const double> f = field.values();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < np; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const int k = g.axis_index(i, a);
      std::ptrdiff_t c = ii;
      if (k == 0) c += s;
      if (k == size - 1) c -= s;
      H.set(i, a, a, (f[c + s] - 2.0 * f[c] + f[c - s]) * inv);
    }
  }
  // Mixed: nested first differences, symmetrised.
  const auto& act = g.active_axes();
  for (std::size_t ia = 0; ia < act.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < act.size(); ++ib) {
      const int a = act[ia];
      const int b = act[ib];
      const ScalarField dab = diff(first[b], a);
      const ScalarField dba = diff(first[a], b);
      for (std::size_t i = 0; i < g.num_points(); ++i) H.set(i, a, b, 0.5 * (dab[i] + dba[i]));
    }
  }
  return H;
}

namespace {
std::vector<double> weights_of(const Grid& g) {
  std::vector<double> w(g.num_points());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = g.trapezoid_weight(i);
  return w;
}
}  // namespace

double integrate(const ScalarField& field, const Region& region) {
  if (!field.grid().same_as(region.grid()))
    throw std::invalid_argument("integrate: field and region live on different grids");
  const auto w = weights_of(field.grid());
  return kernels::masked_weighted_sum(field.values(), w, region.mask());
}

double measure(const Region& region) {
  const ScalarField one(region.grid(), 1.0);
  return integrate(one, region);
}

ScalarField pointwise_product(const ScalarField& a, const ScalarField& b) {
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

ScalarField norm_squared(const VectorField& v) {
  ScalarField out(v.grid());
  for (const auto& c : v.components)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * c[i];
  return out;
}

ScalarField refine_linear(const ScalarField& coarse) {
  const Grid& gc = coarse.grid();
  std::vector<int> sizes = gc.sizes();
  for (int k : gc.active_axes()) sizes[k] = 2 * (sizes[k] - 1) + 1;
  const Grid gf(gc.m(), gc.n_minus_m(), sizes, gc.extents());
  ScalarField fine(gf);
  const int n = gf.dim();
  std::vector<int> fi(n), lo(n), ci(n);
  std::vector<char> odd(n);
  for (std::size_t p = 0; p < gf.num_points(); ++p) {
    gf.unravel(p, fi);
    int nodd = 0;
    std::vector<int> odd_axes;
    for (int k = 0; k < n; ++k) {
      if (gc.collapsed(k)) {
        lo[k] = 0;
        continue;
      }
      lo[k] = fi[k] / 2;
      if (fi[k] % 2) odd_axes.push_back(k);
    }
    nodd = static_cast<int>(odd_axes.size());
    double v = 0.0;
    for (int mask = 0; mask < (1 << nodd); ++mask) {
      ci = lo;
      for (int j = 0; j < nodd; ++j)
        if (mask & (1 << j)) ci[odd_axes[j]] += 1;
      v += coarse[gc.ravel(ci)];
    }
    fine[p] = v / static_cast<double>(1 << nodd);
  }
  return fine;
}

}  // namespace plap
