#include "plap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace plap {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Derivatives {
  VectorField grad;
  HessianField H;
  ScalarField G;
  VectorField gradG;
};

Derivatives derive(const ScalarField& u, double eps) {
  const Grid& g = u.grid();
  Derivatives d;
  d.grad = gradient(u);
  d.H = hessian(u);
  d.G = ScalarField(g);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    double s = eps * eps;
    for (int a = g.m(); a < g.dim(); ++a) s += d.grad[a][i] * d.grad[a][i];
    d.G[i] = std::sqrt(s);
  }
  d.gradG = gradient(d.G);
  return d;
}

double grad_y_norm_at(const VectorField& grad, int m, std::size_t i) {
  double s = 0.0;
  for (std::size_t a = static_cast<std::size_t>(m); a < grad.dim(); ++a) s += grad[a][i] * grad[a][i];
  return std::sqrt(s);
}

ScalarField sentinel_field(const Grid& g) { return ScalarField(g, kNaN); }

/// P Hess_y u P for the fiber block at point i, P = I - ν νᵀ.
Eigen::MatrixXd projected_hessian(const HessianField& H, int m, int k, std::size_t i,
                                  const Eigen::VectorXd& nu) {
  Eigen::MatrixXd Hy(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) Hy(a, b) = H(i, m + a, m + b);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(k, k) - nu * nu.transpose();
  Eigen::MatrixXd PHP = P * Hy * P;
  // Exact symmetry for the eigen-solver.
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) PHP(a, b) = PHP(b, a) = 0.5 * (PHP(a, b) + PHP(b, a));
  return PHP;
}

Eigen::VectorXd unit_normal(const VectorField& grad, int m, int k, std::size_t i, double norm) {
  Eigen::VectorXd nu(k);
  for (int a = 0; a < k; ++a) nu[a] = grad[m + a][i] / norm;
  return nu;
}

GeometryFields build(const ScalarField& u, const GeometryOptions& options, Derivatives& d) {
  const Grid& g = u.grid();
  if (g.n_minus_m() < 1) throw std::invalid_argument("geometry needs at least one fiber axis");
  const int m = g.m(), n = g.dim(), k = g.n_minus_m();
  GeometryFields out;
  out.theta_grad = resolve_theta(u, options);
  out.eps_smooth = options.eps_smooth;
  out.region_mask = region(u, out.theta_grad);
  out.core_mask = core_of(out.region_mask);
  out.near_boundary_points = out.region_mask.count() - out.core_mask.count();
  out.S = sentinel_field(g);
  out.T = sentinel_field(g);
  out.U = sentinel_field(g);
  out.Ksq = sentinel_field(g);
  out.tangential_grad_sq = sentinel_field(g);
  out.grad_y_norm = sentinel_field(g);
  for (int a = 0; a < k; ++a) out.normal.components.push_back(sentinel_field(g));

  const auto N = static_cast<std::ptrdiff_t>(g.num_points());
  double bias = 0.0;
#pragma omp parallel for schedule(static) reduction(max : bias)
  for (std::ptrdiff_t ii = 0; ii < N; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (!out.region_mask.contains(i)) continue;
    const double gn = grad_y_norm_at(d.grad, m, i);
    const Eigen::VectorXd nu = unit_normal(d.grad, m, k, i, gn);
    out.grad_y_norm[i] = gn;
    for (int a = 0; a < k; ++a) out.normal[a][i] = nu[a];
    bias = std::max(bias, options.eps_smooth / gn);

    double S = 0.0;
    for (int xi = 0; xi < m; ++xi) {
      S -= d.gradG[xi][i] * d.gradG[xi][i];
      for (int j = 0; j < k; ++j) S += d.H(i, xi, m + j) * d.H(i, xi, m + j);
    }
    double gradG2 = 0.0;
    for (int a = 0; a < n; ++a) gradG2 += d.gradG[a][i] * d.gradG[a][i];
    // T uses the chain-rule ∇G = Σ_j u_{y_j} ∇u_{y_j} / G_ε, so ∇u·∇G = Σ_j u_{y_j} ζ_j / G_ε
    // and T is a Cauchy-Schwarz gap on the same Hessian: T >= 0, and T = O(ε²) when k = 1.
    double gy2 = 0.0;
    for (int j = 0; j < k; ++j) gy2 += d.grad[m + j][i] * d.grad[m + j][i];
    const double g_eps = std::sqrt(gy2 + options.eps_smooth * options.eps_smooth);
    double zeta2 = 0.0, udotG = 0.0, hess_rows = 0.0;
    for (int j = 0; j < k; ++j) {
      double zeta = 0.0;
      for (int a = 0; a < n; ++a) {
        zeta += d.grad[a][i] * d.H(i, a, m + j);
        hess_rows += d.H(i, a, m + j) * d.H(i, a, m + j);
      }
      zeta2 += zeta * zeta;
      udotG += d.grad[m + j][i] * zeta / g_eps;
    }
    out.S[i] = S;
    out.T[i] = zeta2 - udotG * udotG;
    out.U[i] = gradG2 - hess_rows;

    double along = 0.0;
    for (int a = 0; a < k; ++a) along += d.gradG[m + a][i] * nu[a];
    double tg2 = 0.0;
    for (int a = 0; a < k; ++a) {
      const double t = d.gradG[m + a][i] - along * nu[a];
      tg2 += t * t;
    }
    out.tangential_grad_sq[i] = k == 1 ? 0.0 : tg2;
    out.Ksq[i] = k == 1 ? 0.0 : projected_hessian(d.H, m, k, i, nu).squaredNorm() / (gn * gn);
  }
  out.smoothing_bias = bias;
  return out;
}

}  // namespace

double resolve_theta(const ScalarField& u, const GeometryOptions& options) {
  if (options.theta_grad > 0.0) return options.theta_grad;
  if (!(options.theta_rel > 0.0)) throw std::invalid_argument("geometry theta_rel must be positive");
  const Grid& g = u.grid();
  const VectorField grad = gradient(u);
  double top = 0.0;
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (!g.on_boundary(i)) top = std::max(top, grad_y_norm_at(grad, g.m(), i));
  // A y-independent u gets a positive threshold and an empty region.
  return top > 0.0 ? options.theta_rel * top : options.theta_rel;
}

Region region(const ScalarField& u, double theta_grad) {
  if (!(theta_grad > 0.0)) throw std::invalid_argument("region: theta_grad must be positive");
  const Grid& g = u.grid();
  const VectorField grad = gradient(u);
  std::vector<std::uint8_t> mask(g.num_points(), 0);
  for (std::size_t i = 0; i < g.num_points(); ++i)
    mask[i] = !g.on_boundary(i) && grad_y_norm_at(grad, g.m(), i) > theta_grad;
  return Region::custom(g, std::move(mask));
}

Region core_of(const Region& mask) {
  const Grid& g = mask.grid();
  std::vector<std::uint8_t> core(g.num_points(), 0);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!mask.contains(i)) continue;
    bool inside = true;
    for (int a : g.active_axes()) {
      const int idx = g.axis_index(i, a);
      if (idx == 0 || idx == g.size(a) - 1 || !mask.contains(i + g.stride(a)) ||
          !mask.contains(i - g.stride(a))) {
        inside = false;
        break;
      }
    }
    core[i] = inside;
  }
  return Region::custom(g, std::move(core));
}

VectorField tangential_gradient(const ScalarField& u, const ScalarField& G, const Region& mask) {
  const Grid& g = u.grid();
  if (!G.grid().same_as(g) || !mask.grid().same_as(g))
    throw std::invalid_argument("tangential_gradient: grid mismatch");
  const int m = g.m(), k = g.n_minus_m();
  const VectorField grad = gradient(u);
  const VectorField gG = gradient(G);
  VectorField out;
  for (int a = 0; a < k; ++a) out.components.push_back(sentinel_field(g));
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!mask.contains(i)) continue;
    const double gn = grad_y_norm_at(grad, m, i);
    if (gn == 0.0) continue;
    double along = 0.0;
    for (int a = 0; a < k; ++a) along += gG[m + a][i] * grad[m + a][i] / gn;
    for (int a = 0; a < k; ++a) out[a][i] = gG[m + a][i] - along * grad[m + a][i] / gn;
  }
  return out;
}

CurvatureFields curvatures(const ScalarField& u, const Region& mask, bool with_kappa) {
  const Grid& g = u.grid();
  const int m = g.m(), k = g.n_minus_m();
  const VectorField grad = gradient(u);
  const HessianField H = hessian(u);
  CurvatureFields out;
  out.Ksq = sentinel_field(g);
  if (with_kappa)
    for (int j = 0; j + 1 < k; ++j) out.kappa.push_back(sentinel_field(g));
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!mask.contains(i)) continue;
    const double gn = grad_y_norm_at(grad, m, i);
    if (gn == 0.0 || k == 1) {
      out.Ksq[i] = 0.0;
      continue;
    }
    const Eigen::VectorXd nu = unit_normal(grad, m, k, i, gn);
    const Eigen::MatrixXd shape = projected_hessian(H, m, k, i, nu) / gn;
    out.Ksq[i] = shape.squaredNorm();
    if (!with_kappa) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    if (k <= 3)
      es.computeDirect(shape);
    else
      es.compute(shape);
    if (es.info() != Eigen::Success) {
      ++out.eigen_failures;
      continue;
    }
    // Drop the eigenvalue whose eigenvector is the normal (P ν = 0).
    int normal_col = 0;
    double best = -1.0;
    for (int c = 0; c < k; ++c) {
      const double overlap = std::abs(es.eigenvectors().col(c).dot(nu));
      if (overlap > best) best = overlap, normal_col = c;
    }
    int slot = 0;
    for (int c = 0; c < k; ++c)
      if (c != normal_col) out.kappa[slot++][i] = es.eigenvalues()[c];
  }
  return out;
}

GeometryFields compute_geometry(const ScalarField& u, const GeometryOptions& options) {
  Derivatives d = derive(u, options.eps_smooth);
  return build(u, options, d);
}

ScalarField compute_S(const ScalarField& u, const GeometryOptions& options) {
  return compute_geometry(u, options).S;
}
ScalarField compute_T(const ScalarField& u, const GeometryOptions& options) {
  return compute_geometry(u, options).T;
}
ScalarField compute_U(const ScalarField& u, const GeometryOptions& options) {
  return compute_geometry(u, options).U;
}

double core_min(const ScalarField& f, const GeometryFields& geo) {
  double lo = INFINITY;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (geo.core_mask.contains(i)) lo = std::min(lo, f[i]);
  return lo;
}

IdentityReport verify_identity_SZ(const ScalarField& u, const GeometryFields& geo, double exclude_radius) {
  const Grid& g = u.grid();
  const int m = g.m(), n = g.dim(), k = g.n_minus_m();
  const Derivatives d = derive(u, geo.eps_smooth);
  std::vector<double> X(static_cast<std::size_t>(n));
  std::vector<double> defect, scale;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!geo.core_mask.contains(i)) continue;
    g.coords(i, X);
    double r2 = 0.0;
    for (int a = m; a < n; ++a) r2 += X[a] * X[a];
    if (std::sqrt(r2) < exclude_radius) continue;
    const double gn = geo.grad_y_norm[i];
    defect.push_back(geo.U[i] + geo.S[i] + geo.Ksq[i] * gn * gn + geo.tangential_grad_sq[i]);
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      s += d.gradG[a][i] * d.gradG[a][i];
      for (int j = 0; j < k; ++j) s += d.H(i, a, m + j) * d.H(i, a, m + j);
    }
    scale.push_back(s);
  }
  IdentityReport r;
  r.points = defect.size();
  if (defect.empty()) return r;
  const double floor = 1e-3 * *std::max_element(scale.begin(), scale.end());
  for (std::size_t t = 0; t < defect.size(); ++t) {
    r.max_abs_defect = std::max(r.max_abs_defect, std::abs(defect[t]));
    const double denom = scale[t] + floor;
    if (denom > 0.0) r.max_relative_defect = std::max(r.max_relative_defect, std::abs(defect[t]) / denom);
  }
  return r;
}

IdentityReport verify_identity_SZ(const ScalarField& u, const GeometryOptions& options, double exclude_radius) {
  return verify_identity_SZ(u, compute_geometry(u, options), exclude_radius);
}

ParallelismReport check_parallelism(const ScalarField& u, const GeometryFields& geo, double tol_par) {
  const Grid& g = u.grid();
  const int m = g.m(), k = g.n_minus_m();
  const HessianField H = hessian(u);
  ParallelismReport r;
  r.parallel = sentinel_field(g);
  double vmax = 0.0;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!geo.core_mask.contains(i)) continue;
    for (int xi = 0; xi < m; ++xi) {
      double v2 = 0.0;
      for (int j = 0; j < k; ++j) v2 += H(i, xi, m + j) * H(i, xi, m + j);
      vmax = std::max(vmax, std::sqrt(v2));
    }
  }
  const double floor = 1e-6 * vmax;
  r.max_S_parallel = -INFINITY;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!geo.core_mask.contains(i)) continue;
    bool ok = true;
    for (int xi = 0; xi < m; ++xi) {
      double along = 0.0, v2 = 0.0;
      for (int j = 0; j < k; ++j) {
        along += H(i, xi, m + j) * geo.normal[j][i];
        v2 += H(i, xi, m + j) * H(i, xi, m + j);
      }
      const double perp = std::sqrt(std::max(0.0, v2 - along * along));
      const double v = std::sqrt(v2);
      if (v > floor) r.max_ratio = std::max(r.max_ratio, perp / v);
      if (perp > tol_par * (v + floor)) ok = false;
    }
    r.parallel[i] = ok ? 1.0 : 0.0;
    if (ok)
      r.max_S_parallel = std::max(r.max_S_parallel, geo.S[i]);
    else
      ++r.non_parallel_points;
  }
  r.verdict = r.non_parallel_points == 0;
  if (r.max_S_parallel == -INFINITY) r.max_S_parallel = 0.0;
  return r;
}

OmegaFit fit_omega(const ScalarField& u, const GeometryFields& geo) {
  const Grid& g = u.grid();
  const int m = g.m(), n = g.dim(), k = g.n_minus_m();
  std::size_t block = 1;
  for (int a = m; a < n; ++a) block *= static_cast<std::size_t>(g.size(a));
  const std::size_t slices = g.num_points() / block;
  double h = INFINITY;
  for (int a = m; a < n; ++a)
    if (!g.collapsed(a)) h = std::min(h, g.spacing(a));
  if (!std::isfinite(h)) throw std::invalid_argument("fit_omega: every fiber axis is collapsed");

  OmegaFit fit;
  std::vector<double> X(static_cast<std::size_t>(n));
  std::vector<int> multi(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < slices; ++s) {
    SliceOmega slice;
    const std::size_t first = s * block;
    g.unravel(first, multi);
    slice.x_index.assign(multi.begin(), multi.begin() + m);
    Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(k, k);
    double mass = 0.0;
    for (std::size_t i = first; i < first + block; ++i) {
      if (!geo.region_mask.contains(i)) continue;
      Eigen::VectorXd nu(k);
      for (int a = 0; a < k; ++a) nu[a] = geo.normal[a][i];
      const double w = g.trapezoid_weight(i);
      moment += w * nu * nu.transpose();
      mass += w;
    }
    if (mass == 0.0) {
      slice.skipped = true;
      ++fit.skipped_slices;
      fit.slices.push_back(std::move(slice));
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(moment);
    Eigen::VectorXd omega = es.eigenvectors().col(k - 1);
    for (int a = 0; a < k; ++a) {
      if (std::abs(omega[a]) > 1e-12) {
        if (omega[a] < 0.0) omega = -omega;
        break;
      }
    }
    slice.omega.assign(omega.data(), omega.data() + k);

    // Bin u against s = ω·y.
    std::vector<double> svals(block), uvals(block);
    double smin = INFINITY, smax = -INFINITY;
    for (std::size_t t = 0; t < block; ++t) {
      g.coords(first + t, X);
      double sv = 0.0;
      for (int a = 0; a < k; ++a) sv += omega[a] * X[m + a];
      svals[t] = sv;
      uvals[t] = u[first + t];
      smin = std::min(smin, sv);
      smax = std::max(smax, sv);
    }
    const auto nb = static_cast<std::size_t>(std::floor((smax - smin) / h)) + 1;
    std::vector<double> ssum(nb, 0.0), usum(nb, 0.0);
    std::vector<std::size_t> cnt(nb, 0);
    for (std::size_t t = 0; t < block; ++t) {
      const auto b = std::min(nb - 1, static_cast<std::size_t>((svals[t] - smin) / h));
      ssum[b] += svals[t];
      usum[b] += uvals[t];
      ++cnt[b];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      if (cnt[b] == 0) continue;
      slice.s.push_back(ssum[b] / static_cast<double>(cnt[b]));
      slice.u_o.push_back(usum[b] / static_cast<double>(cnt[b]));
    }
    for (std::size_t t = 0; t < block; ++t) {
      const double sv = svals[t];
      double uo;
      if (slice.s.size() == 1 || sv <= slice.s.front()) {
        uo = slice.u_o.front();
      } else if (sv >= slice.s.back()) {
        uo = slice.u_o.back();
      } else {
        const auto it = std::upper_bound(slice.s.begin(), slice.s.end(), sv);
        const auto j = static_cast<std::size_t>(it - slice.s.begin());
        const double lam = (sv - slice.s[j - 1]) / (slice.s[j] - slice.s[j - 1]);
        uo = (1.0 - lam) * slice.u_o[j - 1] + lam * slice.u_o[j];
      }
      slice.symmetry_defect = std::max(slice.symmetry_defect, std::abs(uvals[t] - uo));
    }
    fit.symmetry_defect = std::max(fit.symmetry_defect, slice.symmetry_defect);
    fit.slices.push_back(std::move(slice));
  }

  for (std::size_t a = 0; a < fit.slices.size(); ++a) {
    if (fit.slices[a].skipped) continue;
    for (std::size_t b = a + 1; b < fit.slices.size(); ++b) {
      if (fit.slices[b].skipped) continue;
      double dot = 0.0;
      for (int c = 0; c < k; ++c) dot += fit.slices[a].omega[c] * fit.slices[b].omega[c];
      fit.constancy_score = std::max(fit.constancy_score, std::acos(std::min(1.0, std::abs(dot))));
    }
  }
  return fit;
}

OmegaFit fit_omega(const ScalarField& u, const GeometryOptions& options) {
  return fit_omega(u, compute_geometry(u, options));
}

double cauchy_schwarz_excess(const ScalarField& u, const GeometryFields& geo) {
  const Grid& g = u.grid();
  const int m = g.m(), k = g.n_minus_m();
  const Derivatives d = derive(u, geo.eps_smooth);
  double excess = -INFINITY;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!geo.core_mask.contains(i)) continue;
    for (int xi = 0; xi < m; ++xi) {
      double v2 = 0.0;
      for (int j = 0; j < k; ++j) v2 += d.H(i, xi, m + j) * d.H(i, xi, m + j);
      excess = std::max(excess, std::abs(d.gradG[xi][i]) - std::sqrt(v2));
    }
  }
  return excess;
}

}  // namespace plap
