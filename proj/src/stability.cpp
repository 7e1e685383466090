#include "plap/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "plap/kernels.hpp"
#include "plap/operator_energy.hpp"
#include "plap/test_functions.hpp"

namespace plap {
namespace {

using Vec = std::vector<double>;

double m_dot(const Vec& a, const Vec& b, const Vec& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * m[i] * b[i];
  return s;
}

/// Lower Gershgorin bound of M^{-1/2} A M^{-1/2}.
double gershgorin_lower(const StencilMatrix& A, const Vec& m) {
  const auto unknowns = A.unknowns();
  double lo = INFINITY;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!unknowns[i]) continue;
    double row = A.value(i, A.center()) / m[i];
    for (int o = 0; o < static_cast<int>(A.num_offsets()); ++o) {
      if (o == A.center()) continue;
      const double a = A.value(i, o);
      if (a == 0.0) continue;
      const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + A.offset(o));
      row -= std::abs(a) / std::sqrt(m[i] * m[j]);
    }
    lo = std::min(lo, row);
  }
  return lo;
}

/// Normalized constant-plus-checkerboard vector on the unknowns.
Vec start_vector(const StencilMatrix& A, const Vec& m) {
  const Grid& g = A.grid();
  const auto unknowns = A.unknowns();
  Vec v(m.size(), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!unknowns[i]) continue;
    g.unravel(i, idx);
    int parity = 0;
    for (int k : idx) parity += k;
    v[i] = 1.0 + 0.5 * ((parity % 2) ? -1.0 : 1.0);
  }
  const double nrm = std::sqrt(m_dot(v, v, m));
  for (double& x : v) x /= nrm;
  return v;
}

struct RitzPair {
  double lambda = 0.0;
  double residual = INFINITY;
  Vec vector;
};

/// Rayleigh quotient and M^{-1/2}-weighted residual of x (x is M-normalized
/// on return).
RitzPair evaluate(const StencilMatrix& A, const Vec& m, Vec x) {
  const double nrm = std::sqrt(m_dot(x, x, m));
  for (double& v : x) v /= nrm;
  Vec Ax(x.size());
  A.apply(x, Ax);
  RitzPair out;
  out.lambda = kernels::dot(Ax, x);
  double r2 = 0.0;
  const auto unknowns = A.unknowns();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!unknowns[i]) continue;
    const double r = Ax[i] - out.lambda * m[i] * x[i];
    r2 += r * r / m[i];
  }
  out.residual = std::sqrt(r2);
  out.vector = std::move(x);
  return out;
}

/// Fixes the sign so the largest-magnitude entry (first on ties) is positive.
void fix_sign(Vec& x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  if (x[best] < 0.0)
    for (double& v : x) v = -v;
}

}  // namespace

StencilMatrix quadratic_form(const ScalarField& u, const ModelBundle& model) {
  if (!u.all_finite()) throw std::invalid_argument("quadratic_form: u is not finite");
  StencilMatrix A = hessian_matrix(u, model);
  if (!A.is_symmetric()) throw std::logic_error("quadratic_form: assembled form is not symmetric");
  return A;
}

std::vector<double> mass_diagonal(const Grid& grid) {
  std::vector<double> m(grid.num_points(), 0.0);
  const auto unknowns = interior_unknowns(grid);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (unknowns[i]) m[i] = grid.trapezoid_weight(i);
  return m;
}

double form_scale(const StencilMatrix& A) {
  const Vec m = mass_diagonal(A.grid());
  const auto unknowns = A.unknowns();
  const double h = A.grid().active_axes().empty() ? 1.0 : A.grid().min_spacing();
  double s = 1.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (unknowns[i]) s = std::max(s, std::abs(A.value(i, A.center())) * h * h / m[i]);
  return s;
}

double default_tol_stability(const StencilMatrix& A) { return 1e-8 * form_scale(A); }

bool is_stable(const StabilityReport& report, double tol_stability) {
  return report.min_rayleigh >= -tol_stability;
}

StabilityReport min_rayleigh(const StencilMatrix& A, const EigenOptions& options) {
  if (options.krylov_dim < 2) throw std::invalid_argument("eigen krylov_dim must be >= 2");
  if (options.max_restarts < 1) throw std::invalid_argument("eigen max_restarts must be >= 1");
  if (!(options.tol > 0.0)) throw std::invalid_argument("eigen tol must be positive");
  const Grid& g = A.grid();
  const Vec m = mass_diagonal(g);
  StabilityReport report;
  report.eigenvector = ScalarField(g);
  if (A.num_unknowns() == 0) {
    report.message = "no interior unknowns";
    return report;
  }

  const double scale = form_scale(A);
  double sigma = gershgorin_lower(A, m);
  sigma -= 1e-2 * std::max(1.0, std::abs(sigma));
  RitzPair best;
  Vec v = start_vector(A, m);
  const std::size_t N = m.size();
  CgOptions cg;
  cg.rel_tol = options.inner_tol;
  cg.stop_on_negative_curvature = true;

  for (int cycle = 0; cycle < options.max_restarts; ++cycle) {
    StencilMatrix S = A;
    S.add_diagonal(m, -sigma);
    const LinearMap apply_S = [&S](std::span<const double> x, std::span<double> y) { S.apply(x, y); };
    const LinearMap precond = make_preconditioner(S, options.preconditioner);

    std::vector<Vec> Q{v};
    std::vector<double> alpha, beta;
    RitzPair cycle_best;
    bool indefinite = false;
    for (int j = 0; j < options.krylov_dim; ++j) {
      Vec rhs(N), w(N, 0.0);
      for (std::size_t i = 0; i < N; ++i) rhs[i] = m[i] * Q[j][i];
      const CgResult res = pcg(apply_S, precond, rhs, w, cg);
      ++report.eigen_iterations;
      if (res.negative_curvature) {
        indefinite = true;
        break;
      }
      const double a = m_dot(w, Q[j], m);
      alpha.push_back(a);
      // Full reorthogonalization, applied twice.
      for (int pass = 0; pass < 2; ++pass)
        for (const Vec& q : Q) kernels::axpy(-m_dot(w, q, m), q, w);
      const double b = std::sqrt(m_dot(w, w, m));

      const int k = static_cast<int>(alpha.size());
      Eigen::VectorXd diag(k), sub(std::max(k - 1, 0));
      for (int t = 0; t < k; ++t) diag[t] = alpha[t];
      for (int t = 0; t + 1 < k; ++t) sub[t] = beta[t];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      // Largest μ of (A - σM)^{-1}M is the smallest λ = σ + 1/μ.
      const Eigen::VectorXd s = tri.eigenvectors().col(k - 1);
      Vec x(N, 0.0);
      for (int t = 0; t < k; ++t) kernels::axpy(s[t], Q[t], x);
      RitzPair pair = evaluate(A, m, std::move(x));
      if (pair.residual < cycle_best.residual) cycle_best = std::move(pair);
      if (cycle_best.residual <= options.tol || b <= 1e-14 * std::abs(a)) break;
      beta.push_back(b);
      for (double& t : w) t /= b;
      Q.push_back(std::move(w));
    }

    if (indefinite) {
      // The shift passed the bottom of the spectrum: move it back below the
      // best Ritz value by twice the previous distance.
      const double ref = best.vector.empty() ? sigma : best.lambda;
      sigma = ref - 2.0 * std::max(std::abs(ref - sigma), 1e-3 * scale);
      continue;
    }
    if (cycle_best.residual < best.residual) best = cycle_best;
    if (best.residual <= options.tol) break;
    v = best.vector;
    const double gap = best.lambda - sigma;
    if (gap > 0.0) sigma += 0.5 * gap;
  }

  if (best.vector.empty()) {
    report.message = "eigensolver found no Ritz pair";
    return report;
  }
  fix_sign(best.vector);
  report.min_rayleigh = best.lambda;
  report.residual_of_eigenpair = best.residual;
  report.converged = best.residual <= options.tol;
  std::copy(best.vector.begin(), best.vector.end(), report.eigenvector.values().begin());
  std::ostringstream os;
  if (report.converged)
    os << "converged";
  else
    os << "stagnated at residual " << best.residual;
  report.message = os.str();
  return report;
}

StabilityReport min_rayleigh(const ScalarField& u, const ModelBundle& model, const EigenOptions& options) {
  StabilityReport r = min_rayleigh(quadratic_form(u, model), options);
  r.monotone_direction_found = monotone_direction(u);
  return r;
}

namespace {

double min_interior(const ScalarField& f) {
  const Grid& g = f.grid();
  double lo = INFINITY;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!g.on_boundary(i)) lo = std::min(lo, f[i]);
  return lo;
}

}  // namespace

std::optional<int> monotone_direction(const ScalarField& u) {
  const Grid& g = u.grid();
  std::vector<int> order;
  for (int a = g.m(); a < g.dim(); ++a) order.push_back(a);
  for (int a = 0; a < g.m(); ++a) order.push_back(a);
  for (int a : order) {
    if (g.collapsed(a)) continue;
    if (min_interior(diff(u, a)) > 0.0) return a;
  }
  return std::nullopt;
}

MonotoneStabilityResult verify_monotone_stability(const ScalarField& u, const ModelBundle& model, int y_axis,
                             std::uint64_t seed, int samples, const EigenOptions& options) {
  const Grid& g = model.grid;
  if (y_axis < 0 || y_axis >= g.n_minus_m())
    throw std::invalid_argument("verify_monotone_stability: y-axis out of range");
  const int axis = g.m() + y_axis;
  MonotoneStabilityResult out;
  if (g.collapsed(axis)) {
    out.message = "not applicable: collapsed axis";
    return out;
  }
  out.min_derivative = min_interior(diff(u, axis));
  if (!(out.min_derivative > 0.0)) {
    std::ostringstream os;
    os << "not applicable: min d u / d y" << y_axis + 1 << " = " << out.min_derivative << " <= 0";
    out.message = os.str();
    return out;
  }
  out.applicable = true;
  const StencilMatrix A = quadratic_form(u, model);
  const double tol = default_tol_stability(A);
  out.report = min_rayleigh(A, options);
  out.report.monotone_direction_found = monotone_direction(u);
  out.stable = is_stable(out.report, tol);

  out.chain_holds = true;
  out.worst_chain_quotient = INFINITY;
  const Region whole = Region::whole(g);
  for (const ScalarField& xi : random_test_functions(g, seed, samples)) {
    const double q = second_variation(u, xi, model);
    const double mass = integrate(pointwise_product(xi, xi), whole);
    if (mass == 0.0) continue;
    out.worst_chain_quotient = std::min(out.worst_chain_quotient, q / mass);
    if (q < -tol * mass) out.chain_holds = false;
  }
  std::ostringstream os;
  os << "min_rayleigh " << out.report.min_rayleigh << (out.stable ? " >= " : " < ") << -tol;
  out.message = os.str();
  return out;
}

}  // namespace plap
