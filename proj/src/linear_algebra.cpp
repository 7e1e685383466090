#include "plap/linear_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plap/kernels.hpp"

namespace plap {

StencilMatrix::StencilMatrix(Grid grid, std::vector<std::uint8_t> unknowns)
    : grid_(std::move(grid)), unknowns_(std::move(unknowns)) {
  if (unknowns_.size() != grid_.num_points())
    throw std::invalid_argument("StencilMatrix: unknown mask does not match the grid");
  const auto& act = grid_.active_axes();
  d_ = static_cast<int>(act.size());
  int total = 1;
  for (int j = 0; j < d_; ++j) total *= 3;
  offsets_.resize(static_cast<std::size_t>(total));
  for (int o = 0; o < total; ++o) {
    std::ptrdiff_t off = 0;
    int code = o;
    for (int j = 0; j < d_; ++j) {
      off += static_cast<std::ptrdiff_t>(code % 3 - 1) * grid_.stride(act[j]);
      code /= 3;
    }
    offsets_[o] = off;
  }
  center_ = (total - 1) / 2;
  values_.assign(grid_.num_points() * offsets_.size(), 0.0);
}

int StencilMatrix::step(int o, int j) const {
  for (int k = 0; k < j; ++k) o /= 3;
  return o % 3 - 1;
}

int StencilMatrix::offset_index(std::span<const int> steps) const {
  int code = 0;
  int mult = 1;
  for (int j = 0; j < d_; ++j) {
    code += (steps[j] + 1) * mult;
    mult *= 3;
  }
  return code;
}

void StencilMatrix::apply(std::span<const double> x, std::span<double> y) const {
  kernels::stencil_apply(values_, offsets_, unknowns_, x, y);
}

double StencilMatrix::quadratic(std::span<const double> x) const {
  std::vector<double> y(x.size());
  apply(x, y);
  return kernels::dot(x, y);
}

std::vector<double> StencilMatrix::diagonal() const {
  std::vector<double> d(grid_.num_points(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (unknowns_[i]) d[i] = value(i, center_);
  return d;
}

void StencilMatrix::add_diagonal(std::span<const double> d, double scale) {
  for (std::size_t i = 0; i < grid_.num_points(); ++i)
    if (unknowns_[i]) at(i, center_) += scale * d[i];
}

bool StencilMatrix::is_symmetric() const {
  const std::size_t no = offsets_.size();
  for (std::size_t i = 0; i < grid_.num_points(); ++i) {
    if (!unknowns_[i]) continue;
    for (std::size_t o = 0; o < no; ++o) {
      const double a = value(i, static_cast<int>(o));
      if (a == 0.0) continue;
      const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offsets_[o]);
      if (!unknowns_[j]) return false;
      if (value(j, opposite(static_cast<int>(o))) != a) return false;
    }
  }
  return true;
}

std::size_t StencilMatrix::num_unknowns() const {
  return static_cast<std::size_t>(std::count(unknowns_.begin(), unknowns_.end(), 1));
}

// ---------------------------------------------------------------------------

CgResult pcg(const LinearMap& A, const LinearMap& precond, std::span<const double> b,
             std::span<double> x, const CgOptions& opts) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  A(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  const double bnorm = std::sqrt(kernels::dot(b, b));
  CgResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  double rnorm = std::sqrt(kernels::dot(r, r));
  res.relative_residual = rnorm / bnorm;
  if (res.relative_residual <= opts.rel_tol) {
    res.converged = true;
    return res;
  }
  precond(r, z);
  p = z;
  double rz = kernels::dot(r, z);
  for (int it = 0; it < opts.max_iters; ++it) {
    A(p, q);
    const double pq = kernels::dot(p, q);
    if (!(pq > 0.0)) {
      res.negative_curvature = true;
      if (opts.stop_on_negative_curvature) {
        if (it == 0) std::copy(z.begin(), z.end(), x.begin());
        return res;
      }
    }
    const double alpha = rz / pq;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, q, r);
    res.iterations = it + 1;
    rnorm = std::sqrt(kernels::dot(r, r));
    res.relative_residual = rnorm / bnorm;
    if (!std::isfinite(rnorm)) return res;
    if (res.relative_residual <= opts.rel_tol) {
      res.converged = true;
      return res;
    }
    precond(r, z);
    const double rz_new = kernels::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

PreconditionerKind parse_preconditioner(const std::string& name) {
  if (name == "jacobi") return PreconditionerKind::jacobi;
  if (name == "multigrid" || name == "mg") return PreconditionerKind::multigrid;
  throw std::invalid_argument("unknown preconditioner '" + name + "'");
}

std::string to_string(PreconditionerKind kind) {
  return kind == PreconditionerKind::jacobi ? "jacobi" : "multigrid";
}

// ---------------------------------------------------------------------------

namespace {

bool can_coarsen(const Grid& g) {
  for (int k : g.active_axes()) {
    const int s = g.size(k);
    if (s < 5 || (s - 1) % 2 != 0) return false;
  }
  return true;
}

Grid coarsen(const Grid& g) {
  std::vector<int> sizes = g.sizes();
  for (int k : g.active_axes()) sizes[k] = (sizes[k] - 1) / 2 + 1;
  return Grid(g.m(), g.n_minus_m(), sizes, g.extents());
}

std::vector<std::uint8_t> interior_mask(const Grid& g) {
  std::vector<std::uint8_t> m(g.num_points());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = g.on_boundary(i) ? 0 : 1;
  return m;
}

// Coarse parents of a fine point under multilinear interpolation: up to 2^d
// (coarse point, weight) pairs. Boundary parents are dropped.
struct Parent {
  std::size_t point;
  double weight;
};

void parents_of(const Grid& fine, const Grid& coarse, const std::vector<std::uint8_t>& cunk,
                std::size_t p, std::vector<int>& fi, std::vector<int>& ci,
                std::vector<Parent>& out) {
  out.clear();
  fine.unravel(p, fi);
  const auto& act = fine.active_axes();
  const int d = static_cast<int>(act.size());
  std::vector<int> odd;
  for (int j = 0; j < d; ++j)
    if (fi[act[j]] % 2) odd.push_back(act[j]);
  const int nodd = static_cast<int>(odd.size());
  for (int mask = 0; mask < (1 << nodd); ++mask) {
    for (int k = 0; k < fine.dim(); ++k) ci[k] = fine.collapsed(k) ? 0 : fi[k] / 2;
    for (int j = 0; j < nodd; ++j)
      if (mask & (1 << j)) ci[odd[j]] += 1;
    const std::size_t cp = coarse.ravel(ci);
    if (!cunk[cp]) continue;
    out.push_back({cp, 1.0 / static_cast<double>(1 << nodd)});
  }
}

StencilMatrix galerkin(const StencilMatrix& A, const Grid& coarse) {
  const Grid& fine = A.grid();
  StencilMatrix Ac(coarse, interior_mask(coarse));
  const auto& cunk = Ac.unknowns();
  std::vector<std::uint8_t> cmask(cunk.begin(), cunk.end());
  const auto& act = fine.active_axes();
  const int d = static_cast<int>(act.size());
  std::vector<int> fi(fine.dim()), ci(fine.dim()), cI(fine.dim()), cJ(fine.dim()), steps(d);
  std::vector<Parent> pi, pj;
  const auto no = static_cast<int>(A.num_offsets());
  for (std::size_t i = 0; i < fine.num_points(); ++i) {
    if (!A.unknowns()[i]) continue;
    parents_of(fine, coarse, cmask, i, fi, ci, pi);
    if (pi.empty()) continue;
    for (int o = 0; o < no; ++o) {
      const double a = A.value(i, o);
      if (a == 0.0) continue;
      const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + A.offset(o));
      parents_of(fine, coarse, cmask, j, fi, ci, pj);
      for (const auto& I : pi) {
        coarse.unravel(I.point, cI);
        for (const auto& J : pj) {
          coarse.unravel(J.point, cJ);
          for (int t = 0; t < d; ++t) steps[t] = cJ[act[t]] - cI[act[t]];
          Ac.at(I.point, Ac.offset_index(steps)) += I.weight * a * J.weight;
        }
      }
    }
  }
  // Exact symmetry.
  for (std::size_t I = 0; I < coarse.num_points(); ++I) {
    if (!cunk[I]) continue;
    for (int o = 0; o < Ac.center(); ++o) {
      const auto J = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(I) + Ac.offset(o));
      if (!cunk[J]) {
        Ac.at(I, o) = 0.0;
        continue;
      }
      const double avg = 0.5 * (Ac.value(I, o) + Ac.value(J, Ac.opposite(o)));
      Ac.at(I, o) = avg;
      Ac.at(J, Ac.opposite(o)) = avg;
    }
  }
  return Ac;
}

}  // namespace

Multigrid::Multigrid(const StencilMatrix& A, int smoothing_sweeps) : sweeps_(smoothing_sweeps) {
  levels_.push_back({A, A.grid()});
  while (can_coarsen(levels_.back().grid) && levels_.back().A.num_unknowns() > 1) {
    const Grid coarse = coarsen(levels_.back().grid);
    StencilMatrix Ac = galerkin(levels_.back().A, coarse);
    levels_.push_back({std::move(Ac), coarse});
  }
}

void Multigrid::smooth(const StencilMatrix& A, std::span<const double> b, std::span<double> x,
                       bool forward) const {
  const std::size_t n = A.grid().num_points();
  const auto no = static_cast<int>(A.num_offsets());
  const int c = A.center();
  auto relax = [&](std::size_t i) {
    if (!A.unknowns()[i]) return;
    const double diag = A.value(i, c);
    if (!(diag > 0.0)) return;
    double s = b[i];
    for (int o = 0; o < no; ++o) {
      if (o == c) continue;
      const double a = A.value(i, o);
      if (a != 0.0) s -= a * x[static_cast<std::ptrdiff_t>(i) + A.offset(o)];
    }
    x[i] = s / diag;
  };
  if (forward) {
    for (std::size_t i = 0; i < n; ++i) relax(i);
  } else {
    for (std::size_t i = n; i-- > 0;) relax(i);
  }
}

void Multigrid::vcycle(std::size_t l, std::span<const double> b, std::span<double> x) const {
  const Level& L = levels_[l];
  const std::size_t n = L.grid.num_points();
  std::fill(x.begin(), x.end(), 0.0);
  if (l + 1 == levels_.size()) {
    // Coarsest level: many symmetric sweeps (this level is tiny for 2^k+1 grids).
    const int sweeps = L.A.num_unknowns() <= 1 ? 1 : 50;
    for (int s = 0; s < sweeps; ++s) {
      smooth(L.A, b, x, true);
      smooth(L.A, b, x, false);
    }
    return;
  }
  for (int s = 0; s < sweeps_; ++s) smooth(L.A, b, x, true);
  std::vector<double> r(n);
  L.A.apply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];

  const Level& C = levels_[l + 1];
  const auto& cunk = C.A.unknowns();
  std::vector<std::uint8_t> cmask(cunk.begin(), cunk.end());
  std::vector<double> rc(C.grid.num_points(), 0.0), xc(C.grid.num_points(), 0.0);
  std::vector<int> fi(L.grid.dim()), ci(L.grid.dim());
  std::vector<Parent> par;
  for (std::size_t i = 0; i < n; ++i) {
    if (!L.A.unknowns()[i] || r[i] == 0.0) continue;
    parents_of(L.grid, C.grid, cmask, i, fi, ci, par);
    for (const auto& P : par) rc[P.point] += P.weight * r[i];
  }
  vcycle(l + 1, rc, xc);
  for (std::size_t i = 0; i < n; ++i) {
    if (!L.A.unknowns()[i]) continue;
    parents_of(L.grid, C.grid, cmask, i, fi, ci, par);
    double v = 0.0;
    for (const auto& P : par) v += P.weight * xc[P.point];
    x[i] += v;
  }
  for (int s = 0; s < sweeps_; ++s) smooth(L.A, b, x, false);
}

void Multigrid::apply(std::span<const double> r, std::span<double> z) const { vcycle(0, r, z); }

LinearMap make_preconditioner(const StencilMatrix& A, PreconditionerKind kind) {
  if (kind == PreconditionerKind::multigrid) {
    auto mg = std::make_shared<Multigrid>(A);
    return [mg](std::span<const double> r, std::span<double> z) { mg->apply(r, z); };
  }
  auto inv = std::make_shared<std::vector<double>>(A.diagonal());
  for (double& v : *inv) v = (v > 0.0) ? 1.0 / v : (v < 0.0 ? 1.0 / std::abs(v) : 0.0);
  return [inv](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = (*inv)[i] * r[i];
  };
}

CgResult solve_spd(const StencilMatrix& A, std::span<const double> b, std::span<double> x,
                   PreconditionerKind kind, const CgOptions& opts) {
  const LinearMap op = [&A](std::span<const double> v, std::span<double> y) { A.apply(v, y); };
  return pcg(op, make_preconditioner(A, kind), b, x, opts);
}

}  // namespace plap
