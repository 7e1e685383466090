#include "plap/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "plap/kernels.hpp"
#include "plap/operator_energy.hpp"

namespace plap {
namespace {

double max_interior_ratio(std::span<const double> grad, const Grid& g) {
  double r = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!g.on_boundary(i)) r = std::max(r, std::abs(grad[i]) / g.trapezoid_weight(i));
  return r;
}

bool exponent_exceeds_two(const ModelBundle& model) {
  const Grid& g = model.grid;
  std::vector<double> x(static_cast<std::size_t>(g.m()));
  for (std::size_t i = 0; i < g.num_points(); i += static_cast<std::size_t>(g.stride(g.m() - 1))) {
    for (int k = 0; k < g.m(); ++k) x[k] = g.coord(k, g.axis_index(i, k));
    if (model.coefficients.p_at(x) > 2.0) return true;
  }
  return false;
}

/// Throws std::domain_error naming the first point where u or F(x, u) is not finite.
void locate_non_finite(const ScalarField& u, const ModelBundle& model) {
  const Grid& g = model.grid;
  std::vector<double> X(static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    g.coords(i, X);
    const double F = model.nonlinearity.F(std::span<const double>(X).first(g.m()), u[i]);
    if (!std::isfinite(u[i]) || !std::isfinite(F)) {
      std::ostringstream os;
      os << "non-finite energy density at point " << i << " (X = ";
      for (int k = 0; k < g.dim(); ++k) os << (k ? ", " : "") << X[k];
      os << ", u = " << u[i] << ")";
      throw std::domain_error(os.str());
    }
  }
  throw std::domain_error("non-finite energy");
}

double max_positive_f_u(const ScalarField& u, const ModelBundle& model) {
  const Grid& g = model.grid;
  std::vector<double> X(static_cast<std::size_t>(g.dim()));
  double top = 0.0;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (g.on_boundary(i)) continue;
    g.coords(i, X);
    top = std::max(top, model.nonlinearity.f_u(std::span<const double>(X).first(g.m()), u[i]));
  }
  return top;
}

double safe_energy(const ScalarField& u, const ModelBundle& model) {
  try {
    return energy(u, model).total;
  } catch (const std::domain_error&) {
    return INFINITY;
  }
}

}  // namespace

void SolverOptions::validate() const {
  if (!(eps_reg > 0.0)) throw std::invalid_argument("solver.eps_reg must be positive");
  if (!(tol_residual >= 1e-14)) throw std::invalid_argument("solver.tol_residual must be >= 1e-14");
  if (max_iters <= 0) throw std::invalid_argument("solver.max_iters must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("solver.damping must lie in (0, 1]");
  if (continuation_steps <= 0) throw std::invalid_argument("solver.continuation_steps must be positive");
  if (max_backtracks <= 0) throw std::invalid_argument("solver.max_backtracks must be positive");
}

double residual_norm(const ScalarField& u, const ModelBundle& model) {
  return max_interior_ratio(energy_gradient(u, model), model.grid);
}

SolveResult solve(const ModelBundle& model, const ScalarField& boundary_data,
                  const ScalarField& initial_guess, const SolverOptions& options) {
  options.validate();
  model.validate();
  const Grid& g = model.grid;
  if (!boundary_data.grid().same_as(g) || !initial_guess.grid().same_as(g))
    throw std::invalid_argument("boundary data and initial guess must live on the model grid");
  if (!boundary_data.all_finite()) throw std::invalid_argument("boundary data is not finite");
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (g.on_boundary(i) && initial_guess[i] != boundary_data[i])
      throw std::invalid_argument("initial guess does not match the boundary data");

  SolveResult out{initial_guess, {}};
  ScalarField& u = out.u;
  SolveReport& rep = out.report;

  std::vector<double> eps_list;
  const int stages = exponent_exceeds_two(model) ? options.continuation_steps : 1;
  for (int s = 0; s < stages; ++s) {
    const double decades = stages == 1 ? 0.0 : 3.0 * (1.0 - static_cast<double>(s) / (stages - 1));
    eps_list.push_back(options.eps_reg * std::pow(10.0, decades));
  }
  eps_list.back() = options.eps_reg;

  ModelBundle m = model;
  const std::size_t N = g.num_points();
  std::vector<double> weights(N);
  for (std::size_t i = 0; i < N; ++i) weights[i] = g.trapezoid_weight(i);
  std::vector<double> delta(N), rhs(N);

  for (std::size_t s = 0; s < eps_list.size(); ++s) {
    m.eps_reg = eps_list[s];
    const bool last = s + 1 == eps_list.size();
    const double stage_tol = last ? options.tol_residual : std::max(options.tol_residual, 1e-6);

    double E = safe_energy(u, m);
    if (!std::isfinite(E)) locate_non_finite(u, m);
    rep.energy_trace.push_back(E);
    double g0 = -1.0;

    while (true) {
      std::vector<double> grad = energy_gradient(u, m);
      const double res = max_interior_ratio(grad, g);
      rep.final_residual_norm = res;
      if (res <= stage_tol) break;
      if (rep.iterations >= options.max_iters) {
        rep.message = "iteration limit reached";
        return out;
      }
      const double gnorm = std::sqrt(kernels::dot(grad, grad));
      if (g0 < 0.0) g0 = gnorm;

      StencilMatrix H = hessian_matrix(u, m);
      for (std::size_t i = 0; i < N; ++i) rhs[i] = -grad[i];
      CgOptions cg;
      cg.rel_tol = std::clamp(std::sqrt(gnorm / g0), 1e-10, 0.5);
      cg.max_iters = 500;
      cg.stop_on_negative_curvature = true;
      for (int attempt = 0; attempt < 2; ++attempt) {
        std::fill(delta.begin(), delta.end(), 0.0);
        const LinearMap M = make_preconditioner(H, options.preconditioner);
        const CgResult lin =
            pcg([&H](std::span<const double> x, std::span<double> y) { H.apply(x, y); }, M, rhs,
                delta, cg);
        rep.linear_iterations += lin.iterations;
        if (!lin.negative_curvature) break;
        // Indefinite Hessian: shifting by max f_u times the mass makes it
        // positive definite (the Dirichlet part is positive semidefinite).
        H.add_diagonal(weights, max_positive_f_u(u, m) + 1e-12);
      }
      for (std::size_t i = 0; i < N; ++i)
        if (g.on_boundary(i)) delta[i] = 0.0;

      double slope = kernels::dot(grad, delta);
      if (!(slope < 0.0) || !std::isfinite(slope)) {
        // Scaled steepest descent.
        for (std::size_t i = 0; i < N; ++i)
          delta[i] = g.on_boundary(i) ? 0.0 : -grad[i] / g.trapezoid_weight(i);
        slope = kernels::dot(grad, delta);
      }

      double t = options.damping;
      bool accepted = false;
      ScalarField trial = u;
      for (int bt = 0; bt < options.max_backtracks; ++bt) {
        for (std::size_t i = 0; i < N; ++i) trial[i] = u[i] + t * delta[i];
        const double Et = safe_energy(trial, m);
        if (Et <= E + 1e-4 * t * slope) {
          accepted = true;
        } else if (std::isfinite(Et) && std::abs(Et - E) <= 1e-12 * std::max(1.0, std::abs(E)) &&
                   residual_norm(trial, m) < res) {
          // Energy change is at roundoff level; accept on residual decrease.
          accepted = true;
        }
        if (accepted) {
          E = Et;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        rep.message = "line search failed";
        return out;
      }
      for (std::size_t i = 0; i < N; ++i)
        if (g.on_boundary(i)) trial[i] = boundary_data[i];
      u = std::move(trial);
      rep.energy_trace.push_back(E);
      ++rep.iterations;
    }
  }
  rep.converged = true;
  rep.message = "converged";
  return out;
}

ScalarField harmonic_initial_guess(const ScalarField& boundary_data, PreconditionerKind kind) {
  ModelBundle m;
  m.grid = boundary_data.grid();
  m.nonlinearity = Nonlinearity::zero();
  ScalarField u = boundary_data;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!m.grid.on_boundary(i)) u[i] = 0.0;
  const std::vector<double> grad = energy_gradient(u, m);
  std::vector<double> rhs(grad.size()), delta(grad.size(), 0.0);
  for (std::size_t i = 0; i < grad.size(); ++i) rhs[i] = -grad[i];
  const StencilMatrix L = hessian_matrix(u, m);
  CgOptions cg;
  cg.rel_tol = 1e-12;
  solve_spd(L, rhs, delta, kind, cg);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!m.grid.on_boundary(i)) u[i] += delta[i];
  return u;
}

SolveResult solve_nested(const std::function<ModelBundle(const Grid&)>& make_model,
                         const std::function<double(std::span<const double>)>& boundary,
                         const Grid& fine, const SolverOptions& options, int coarsest_points) {
  std::vector<Grid> levels{fine};
  while (true) {
    const Grid& g = levels.back();
    std::vector<int> sizes = g.sizes();
    bool ok = true;
    for (int k : g.active_axes()) {
      if ((sizes[k] - 1) % 2 != 0 || (sizes[k] - 1) / 2 + 1 < coarsest_points) ok = false;
      sizes[k] = (sizes[k] - 1) / 2 + 1;
    }
    if (!ok) break;
    levels.emplace_back(g.m(), g.n_minus_m(), sizes, g.extents());
  }
  std::reverse(levels.begin(), levels.end());

  SolveResult result;
  int total_iters = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const Grid& g = levels[l];
    const ModelBundle model = make_model(g);
    const ScalarField bd = ScalarField::sample(g, boundary);
    ScalarField guess = l == 0 ? harmonic_initial_guess(bd, options.preconditioner) : refine_linear(result.u);
    for (std::size_t i = 0; i < g.num_points(); ++i)
      if (g.on_boundary(i)) guess[i] = bd[i];
    result = solve(model, bd, guess, options);
    total_iters += result.report.iterations;
    if (!result.report.converged) {
      result.report.message += " on level " + std::to_string(l) + " (" + g.describe() + ")";
      return result;
    }
  }
  result.report.message += " after " + std::to_string(total_iters) + " Newton steps over " +
                           std::to_string(levels.size()) + " levels";
  return result;
}

SolveResult solve_1d_profile(const FiberProblem& problem, const SolverOptions& options) {
  const int m = static_cast<int>(problem.x.size());
  if (m < 1) throw std::invalid_argument("fiber problem needs at least one x-coordinate");
  std::vector<int> sizes(static_cast<std::size_t>(m), 1);
  sizes.push_back(problem.points);
  std::vector<Interval> extents;
  for (double x : problem.x) extents.push_back({x, x});
  extents.push_back(problem.range);
  ModelBundle model;
  model.grid = Grid(m, 1, sizes, extents);
  model.coefficients = problem.coefficients;
  model.nonlinearity = problem.nonlinearity;
  model.eps_reg = options.eps_reg;
  const double lo = problem.range.lo, hi = problem.range.hi;
  const double h = model.grid.spacing(m);
  // Sharp ramp two cells wide at the midpoint; an affine guess can be drawn
  // into oscillating critical points on long intervals.
  const ScalarField guess = ScalarField::sample(model.grid, [&](std::span<const double> X) {
    if (X[m] == lo) return problem.left;
    if (X[m] == hi) return problem.right;
    const double t = std::clamp((X[m] - 0.5 * (lo + hi)) / (2.0 * h), -1.0, 1.0);
    return 0.5 * (problem.left + problem.right) + 0.5 * t * (problem.right - problem.left);
  });
  // The layer's translation mode is neutral to roundoff; the lexicographic
  // multigrid smoother drifts along it, Jacobi is mirror-symmetric and does not.
  SolverOptions fiber_options = options;
  fiber_options.preconditioner = PreconditionerKind::jacobi;
  return solve(model, guess, guess, fiber_options);
}

}  // namespace plap
