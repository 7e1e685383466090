#include "plap/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>

#include "plap/operator_energy.hpp"
#include "plap/stability.hpp"
#include "plap/test_functions.hpp"

namespace plap {
namespace {

void check_same_grid(const ScalarField& f, const Grid& g, const char* name) {
  if (!f.grid().same_as(g)) throw std::invalid_argument(std::string(name) + ": grid mismatch");
}

/// α and p at every point.
void coefficient_fields(const ModelBundle& model, std::vector<double>& alpha, std::vector<double>& p) {
  const Grid& g = model.grid;
  alpha.resize(g.num_points());
  p.resize(g.num_points());
  std::vector<double> X(static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    g.coords(i, X);
    const std::span<const double> x = std::span<const double>(X).first(g.m());
    alpha[i] = model.coefficients.alpha_at(x);
    p[i] = model.coefficients.p_at(x);
  }
}

double norm2_at(const VectorField& v, std::size_t i, int from = 0) {
  double s = 0.0;
  for (std::size_t a = static_cast<std::size_t>(from); a < v.dim(); ++a) s += v[a][i] * v[a][i];
  return s;
}

double trapezoid_sum(std::span<const double> integrand, const Grid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < integrand.size(); ++i)
    if (integrand[i] != 0.0) s += g.trapezoid_weight(i) * integrand[i];
  return s;
}

void require_ball_inside(const Grid& g, double R, const char* who) {
  for (int a : g.active_axes()) {
    const Interval& e = g.extent(a);
    if (e.lo > -R + 1e-12 * R || e.hi < R - 1e-12 * R) {
      std::ostringstream os;
      os << who << ": B_" << R << " is not inside the grid box along axis " << a;
      throw std::invalid_argument(os.str());
    }
  }
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (std::string& s : parts) {
    boost::trim(s);
    if (s.empty()) throw std::invalid_argument("empty number in phi suite");
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "' in phi suite");
    out.push_back(v);
  }
  return out;
}

}  // namespace

double PoincareReport::scale() const { return std::abs(lhs) + std::abs(rhs) + 1.0; }

LhsResult poincare_lhs(const ScalarField& u, const ModelBundle& model, const GeometryFields& geo,
                       const ScalarField& phi) {
  const Grid& g = model.grid;
  check_same_grid(u, g, "poincare_lhs u");
  check_same_grid(phi, g, "poincare_lhs phi");
  check_same_grid(geo.S, g, "poincare_lhs geometry");
  require_boundary_vanishing(phi, "phi");
  std::vector<double> alpha, p;
  coefficient_fields(model, alpha, p);
  const VectorField grad = gradient(u);
  const double eps2 = model.eps_reg * model.eps_reg;
  const std::size_t N = g.num_points();
  std::vector<double> s_int(N, 0.0), k_int(N, 0.0), l_int(N, 0.0), t_int(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    if (!geo.region_mask.contains(i) || phi[i] == 0.0) continue;
    const double ge2 = norm2_at(grad, i) + eps2;
    const double c = alpha[i] * std::pow(ge2, 0.5 * (p[i] - 2.0)) * phi[i] * phi[i];
    const double gy = geo.grad_y_norm[i];
    s_int[i] = c * geo.S[i];
    k_int[i] = c * geo.Ksq[i] * gy * gy;
    l_int[i] = c * geo.tangential_grad_sq[i];
    t_int[i] = c * (p[i] - 2.0) * geo.T[i] / ge2;
  }
  LhsResult r;
  r.breakdown.S_term = trapezoid_sum(s_int, g);
  r.breakdown.K_term = trapezoid_sum(k_int, g);
  r.breakdown.L_term = trapezoid_sum(l_int, g);
  r.breakdown.T_term = trapezoid_sum(t_int, g);
  r.lhs = r.breakdown.S_term + r.breakdown.K_term + r.breakdown.L_term + r.breakdown.T_term;
  return r;
}

double poincare_rhs(const ScalarField& u, const ModelBundle& model, const ScalarField& phi,
                    const Region& region) {
  const Grid& g = model.grid;
  check_same_grid(u, g, "poincare_rhs u");
  check_same_grid(phi, g, "poincare_rhs phi");
  require_boundary_vanishing(phi, "phi");
  std::vector<double> alpha, p;
  coefficient_fields(model, alpha, p);
  const VectorField gu = gradient(u);
  const VectorField gphi = gradient(phi);
  const double eps2 = model.eps_reg * model.eps_reg;
  std::vector<double> integrand(g.num_points(), 0.0);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!region.contains(i)) continue;
    const double ge2 = norm2_at(gu, i) + eps2;
    const double dphi2 = norm2_at(gphi, i);
    double dot = 0.0;
    for (std::size_t a = 0; a < gu.dim(); ++a) dot += gu[a][i] * gphi[a][i];
    // ⟨B_ε ∇φ, ∇φ⟩ = α|∇u|_ε^{p-2} (|∇φ|² + (p-2)(∇u·∇φ)²/|∇u|_ε²).
    const double q = alpha[i] * std::pow(ge2, 0.5 * (p[i] - 2.0)) * (dphi2 + (p[i] - 2.0) * dot * dot / ge2);
    integrand[i] = norm2_at(gu, i, g.m()) * q;
  }
  return trapezoid_sum(integrand, g);
}

double poincare_rhs(const ScalarField& u, const ModelBundle& model, const ScalarField& phi) {
  return poincare_rhs(u, model, phi, Region::whole(model.grid));
}

double poincare_rhs_bound(const ScalarField& u, const ModelBundle& model, const ScalarField& phi) {
  const Grid& g = model.grid;
  check_same_grid(u, g, "poincare_rhs_bound u");
  check_same_grid(phi, g, "poincare_rhs_bound phi");
  std::vector<double> alpha, p;
  coefficient_fields(model, alpha, p);
  const VectorField gu = gradient(u);
  const VectorField gphi = gradient(phi);
  const double eps2 = model.eps_reg * model.eps_reg;
  std::vector<double> integrand(g.num_points(), 0.0);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    const double ge2 = norm2_at(gu, i) + eps2;
    integrand[i] = alpha[i] * (p[i] - 1.0) * std::pow(ge2, 0.5 * (p[i] - 2.0)) * norm2_at(gu, i, g.m()) *
                   norm2_at(gphi, i);
  }
  return trapezoid_sum(integrand, g);
}

std::vector<NamedPhi> random_phi_suite(const Grid& grid, std::uint64_t seed, int count) {
  std::vector<NamedPhi> out;
  int k = 0;
  for (ScalarField& f : random_test_functions(grid, seed, count)) {
    std::ostringstream os;
    os << "random[" << k << "] seed=" << seed << (k % 2 ? " compact" : " global");
    out.push_back({os.str(), std::move(f)});
    ++k;
  }
  return out;
}

std::vector<NamedPhi> parse_phi_suite(const std::string& spec, const Grid& grid, std::uint64_t seed) {
  std::vector<std::string> items;
  boost::split(items, spec, boost::is_any_of(";"));
  std::vector<NamedPhi> out;
  for (std::string item : items) {
    boost::trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("phi suite item '" + item + "' lacks ':'");
    std::string kind = item.substr(0, colon);
    boost::trim(kind);
    const std::vector<double> args = parse_numbers(item.substr(colon + 1));
    if (kind == "random") {
      if (args.size() != 1 || args[0] < 0 || args[0] != std::floor(args[0]))
        throw std::invalid_argument("random:<count> needs one non-negative integer");
      for (NamedPhi& p : random_phi_suite(grid, seed, static_cast<int>(args[0]))) out.push_back(std::move(p));
    } else if (kind == "cutoff") {
      for (double R : args) {
        std::ostringstream os;
        os << "cutoff R=" << R;
        out.push_back({os.str(), cutoff_phi(grid, R).phi});
      }
    } else if (kind == "bump") {
      if (args.size() != static_cast<std::size_t>(grid.dim()) + 1)
        throw std::invalid_argument("bump: needs one centre coordinate per axis and a radius");
      const std::span<const double> c(args.data(), args.size() - 1);
      std::ostringstream os;
      os << "bump centre=(";
      for (std::size_t a = 0; a < c.size(); ++a) os << (a ? "," : "") << c[a];
      os << ") r=" << args.back();
      out.push_back({os.str(), compact_bump(grid, c, args.back())});
    } else {
      throw std::invalid_argument("unknown phi suite kind '" + kind + "'");
    }
  }
  return out;
}

PoincareSuiteResult verify_poincare(const ScalarField& u, const ModelBundle& model,
                                    const std::vector<NamedPhi>& suite, const PoincareOptions& options) {
  PoincareSuiteResult result;
  if (options.assume_stable) {
    result.hypothesis_holds = true;
  } else {
    const StencilMatrix A = quadratic_form(u, model);
    const double tol = options.tol_stability > 0.0 ? options.tol_stability : default_tol_stability(A);
    const StabilityReport s = min_rayleigh(A);
    result.min_rayleigh = s.min_rayleigh;
    result.hypothesis_holds = s.converged && is_stable(s, tol);
  }
  const GeometryFields geo = compute_geometry(u, options.geometry);
  const Region outside = Region::whole(model.grid).minus(geo.region_mask);
  result.all_pass = result.hypothesis_holds;
  for (const NamedPhi& item : suite) {
    PoincareReport r;
    r.phi_descriptor = item.descriptor;
    const LhsResult l = poincare_lhs(u, model, geo, item.phi);
    r.lhs = l.lhs;
    r.breakdown = l.breakdown;
    r.rhs = poincare_rhs(u, model, item.phi);
    r.rhs_outside_region = poincare_rhs(u, model, item.phi, outside);
    r.slack = r.rhs - r.lhs;
    r.hypothesis_failed = !result.hypothesis_holds;
    if (r.slack < -options.tol_poincare * r.scale()) result.all_pass = false;
    result.reports.push_back(std::move(r));
  }
  return result;
}

CutoffPhi cutoff_phi(const Grid& grid, double R) {
  if (!(R > 1.0)) throw std::invalid_argument("cutoff_phi: R must exceed 1");
  require_ball_inside(grid, R, "cutoff_phi");
  const double root = std::sqrt(R), logR = std::log(R);
  CutoffPhi out;
  out.R = R;
  out.phi = ScalarField(grid);
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const double r = grid.radius(i);
    out.phi[i] = r <= root ? logR : (r < R ? 2.0 * std::log(R / r) : 0.0);
  }
  const VectorField grad = gradient(out.phi);
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const double r = grid.radius(i);
    if (r > root && r < R) out.c2 = std::max(out.c2, std::sqrt(norm2_at(grad, i)) * r);
  }
  return out;
}

AnnulusCheck annulus_bound_check(const ScalarField& h, double R, double tol) {
  const Grid& g = h.grid();
  if (!(R > 1.0)) throw std::invalid_argument("annulus_bound_check: R must exceed 1");
  require_ball_inside(g, R, "annulus_bound_check");
  for (std::size_t i = 0; i < h.size(); ++i)
    if (!(h[i] >= 0.0)) throw std::invalid_argument("annulus_bound_check: h must be nonnegative and finite");
  const double root = std::sqrt(R);

  // Points of B_R sorted by radius with cumulative 2 w h.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (g.radius(i) <= R) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return g.radius(a) < g.radius(b); });
  std::vector<double> radii(order.size()), cumulative(order.size());
  double acc = 0.0;
  AnnulusCheck out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    const double r = g.radius(i);
    const double wh = g.trapezoid_weight(i) * h[i];
    acc += 2.0 * wh;
    radii[k] = r;
    cumulative[k] = acc;
    if (r >= root) out.lhs += wh / (r * r);
  }
  const auto eta = [&](double t) {
    const auto it = std::upper_bound(radii.begin(), radii.end(), t);
    return it == radii.begin() ? 0.0 : cumulative[static_cast<std::size_t>(it - radii.begin()) - 1];
  };
  const int nt = 4 * static_cast<int>(std::ceil((R - root) / g.min_spacing())) + 1;
  const double dt = (R - root) / (nt - 1);
  double integral = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = root + k * dt;
    const double wk = (k == 0 || k == nt - 1) ? 0.5 * dt : dt;
    integral += wk * eta(t) / (t * t * t);
  }
  out.rhs = integral + eta(R) / (R * R);
  out.ok = out.lhs <= out.rhs * (1.0 + tol);
  return out;
}

ScalarField energy_density(const ScalarField& u, const ModelBundle& model) {
  check_same_grid(u, model.grid, "energy_density u");
  std::vector<double> alpha, p;
  coefficient_fields(model, alpha, p);
  const VectorField grad = gradient(u);
  ScalarField out(model.grid);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha[i] * std::pow(norm2_at(grad, i), 0.5 * p[i]);
  return out;
}

std::string to_string(GrowthBound kind) {
  switch (kind) {
    case GrowthBound::quadratic: return "R^2";
    case GrowthBound::n_minus_1: return "R^(n-1)";
    case GrowthBound::n_minus_sigma: return "R^(n-sigma)";
  }
  return "?";
}

GrowthBound parse_growth_bound(const std::string& name) {
  if (name == "R^2" || name == "quadratic") return GrowthBound::quadratic;
  if (name == "R^(n-1)" || name == "n-1") return GrowthBound::n_minus_1;
  if (name == "R^(n-sigma)" || name == "n-sigma") return GrowthBound::n_minus_sigma;
  throw std::invalid_argument("unknown growth bound '" + name + "'");
}

GrowthReport energy_growth(const ScalarField& u, const ModelBundle& model, const std::vector<double>& radii,
                           GrowthBound bound, double sigma, double slope_tol) {
  if (radii.size() < 3) throw std::invalid_argument("energy_growth: needs at least 3 radii");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw std::invalid_argument("energy_growth: radii must be positive");
    if (k && !(radii[k] > radii[k - 1])) throw std::invalid_argument("energy_growth: radii must increase strictly");
    require_ball_inside(model.grid, radii[k], "energy_growth");
  }
  if (bound == GrowthBound::n_minus_sigma && !(sigma >= 1.0 && sigma <= 2.0))
    throw std::invalid_argument("energy_growth: sigma must lie in [1, 2]");
  const ScalarField density = energy_density(u, model);
  GrowthReport r;
  r.radii = radii;
  r.bound_kind = bound;
  const auto n = static_cast<double>(model.grid.active_axes().size());
  r.bound_exponent = bound == GrowthBound::quadratic ? 2.0 : (bound == GrowthBound::n_minus_1 ? n - 1.0 : n - sigma);
  bool positive = true;
  for (double R : radii) {
    const double e = integrate(density, Region::ball(model.grid, R));
    r.energies.push_back(e);
    positive = positive && e > 0.0;
  }
  if (positive) {
    const auto k = static_cast<double>(radii.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < radii.size(); ++t) {
      const double x = std::log(radii[t]), y = std::log(r.energies[t]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    r.fitted_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    r.slope_defined = true;
    r.violates = r.fitted_slope > r.bound_exponent + slope_tol;
  }
  return r;
}

OperatorBoundCheck check_operator_norm_bound(const Coefficients& coefficients, const Grid& grid,
                                             std::uint64_t seed, std::size_t samples, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0), unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int n = grid.dim(), m = grid.m();
  std::vector<double> x(static_cast<std::size_t>(m)), eta(static_cast<std::size_t>(n)),
      w(static_cast<std::size_t>(n));
  OperatorBoundCheck out;
  out.samples = samples;
  out.max_relative_excess = -INFINITY;
  for (std::size_t s = 0; s < samples; ++s) {
    for (int a = 0; a < m; ++a) {
      const Interval& e = grid.extent(a);
      x[a] = e.lo + unit(rng) * (e.hi - e.lo);
    }
    double nrm = 0.0;
    for (double& v : eta) {
      v = normal(rng);
      nrm += v * v;
    }
    const double mag = std::exp(std::log(1e-3) + unit(rng) * (std::log(10.0) - std::log(1e-3)));
    double eta_norm2 = 0.0;
    for (double& v : eta) {
      v *= mag / std::sqrt(nrm);
      eta_norm2 += v * v;
    }
    for (double& v : w) v = U(rng);
    const Eigen::MatrixXd B = assemble_B(x, eta, coefficients);
    const Eigen::Map<const Eigen::VectorXd> W(w.data(), n);
    const double q = W.dot(B * W);
    const double alpha = coefficients.alpha_at(x), p = coefficients.p_at(x);
    const double bound = alpha * (p - 1.0) * std::pow(eta_norm2, 0.5 * (p - 2.0)) * W.squaredNorm();
    out.max_relative_excess = std::max(out.max_relative_excess, (q - bound) / bound);
  }
  out.ok = samples > 0 && out.max_relative_excess <= tol;
  return out;
}

}  // namespace plap
