#include "plap/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace plap {
namespace {

/// Calls fn(x) for the x-coordinates of every x-slice of the grid.
template <class Fn>
void for_each_x_slice(const Grid& grid, Fn&& fn) {
  const int m = grid.m();
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  std::vector<double> x(static_cast<std::size_t>(m));
  while (true) {
    for (int k = 0; k < m; ++k) x[k] = grid.coord(k, idx[k]);
    fn(std::span<const double>(x));
    int k = m - 1;
    while (k >= 0 && ++idx[k] == grid.size(k)) idx[k--] = 0;
    if (k < 0) return;
  }
}

void check_axis(const XFunction& fn, const Grid& grid, const char* name) {
  if (fn.axis < 0 || fn.axis >= grid.m())
    throw std::invalid_argument(std::string(name) + " references x" + std::to_string(fn.axis + 1) +
                                " but the grid has m = " + std::to_string(grid.m()));
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                         0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.2369268850561891, 0.4786286704993665,
                                           0.5688888888888889, 0.4786286704993665,
                                           0.2369268850561891};

template <class Fn>
double gauss_legendre(Fn&& f, double a, double b, int panels) {
  if (a == b) return 0.0;
  const double step = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * step;
    const double mid = lo + 0.5 * step;
    double s = 0.0;
    for (int q = 0; q < 5; ++q) s += kGlWeights[q] * f(mid + 0.5 * step * kGlNodes[q]);
    total += 0.5 * step * s;
  }
  return total;
}

/// Forcing of the manufactured pair as a function of (x, s) and of (x, r).
class ExampleForcing {
 public:
  ExampleForcing(ExampleSpec spec, double s_min, double s_max)
      : spec_(std::move(spec)), s_min_(s_min), s_max_(s_max) {
    x_independent_ = spec_.beta.is_constant() && spec_.coefficients.x_independent();
    if (x_independent_) build_table();
  }

  double g(std::span<const double> x, double s) const { return example_forcing(spec_, x, s); }

  double g_s(std::span<const double> x, double s) const {
    const double d = 1e-3 * std::max(1.0, std::abs(s));
    return (g(x, s - 2 * d) - 8 * g(x, s - d) + 8 * g(x, s + d) - g(x, s + 2 * d)) / (12 * d);
  }

  double r_lo(std::span<const double> x) const { return spec_.beta.value(x) * spec_.gamma.value(s_min_); }
  double r_hi(std::span<const double> x) const { return spec_.beta.value(x) * spec_.gamma.value(s_max_); }

  /// In-range f_u = g_s / (β γ'(s)).
  double f_u_at_s(std::span<const double> x, double s) const {
    return g_s(x, s) / (spec_.beta.value(x) * spec_.gamma.derivative(s, 1));
  }

  double f(std::span<const double> x, double r) const {
    const double beta = spec_.beta.value(x);
    const double lo = beta * spec_.gamma.value(s_min_);
    const double hi = beta * spec_.gamma.value(s_max_);
    if (r < lo) return g(x, s_min_) + f_u_at_s(x, s_min_) * (r - lo);
    if (r > hi) return g(x, s_max_) + f_u_at_s(x, s_max_) * (r - hi);
    return g(x, s_of(x, r, beta));
  }

  double f_u(std::span<const double> x, double r) const {
    const double beta = spec_.beta.value(x);
    const double lo = beta * spec_.gamma.value(s_min_);
    const double hi = beta * spec_.gamma.value(s_max_);
    if (r < lo) return f_u_at_s(x, s_min_);
    if (r > hi) return f_u_at_s(x, s_max_);
    return f_u_at_s(x, s_of(x, r, beta));
  }

  double F(std::span<const double> x, double t) const {
    return primitive(x, t) - primitive(x, spec_.t0);
  }

 private:
  double s_of(std::span<const double>, double r, double beta) const {
    return std::clamp(spec_.gamma_inv(r / beta), s_min_, s_max_);
  }

  /// ∫_{r_lo}^{r} f, extended analytically outside the sampled range.
  double primitive(std::span<const double> x, double r) const {
    const double lo = r_lo(x), hi = r_hi(x);
    if (r < lo) {
      const double d = r - lo;
      return g(x, s_min_) * d + 0.5 * f_u_at_s(x, s_min_) * d * d;
    }
    if (r > hi) {
      const double d = r - hi;
      return inside(x, hi) + g(x, s_max_) * d + 0.5 * f_u_at_s(x, s_max_) * d * d;
    }
    return inside(x, r);
  }

  double inside(std::span<const double> x, double r) const {
    if (!x_independent_) {
      const double lo = r_lo(x);
      return gauss_legendre([&](double q) { return f(x, q); }, lo, r, 32);
    }
    // Cubic Hermite on the precomputed table, slopes = f.
    const double t = (r - table_lo_) / table_dr_;
    const std::size_t n = table_F_.size() - 1;
    std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(t), 0.0, static_cast<double>(n - 1)));
    const double u = t - static_cast<double>(i);
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * table_F_[i] + h10 * table_dr_ * table_f_[i] + h01 * table_F_[i + 1] +
           h11 * table_dr_ * table_f_[i + 1];
  }

  void build_table() {
    // Every coefficient is x-independent here, so any x works.
    const std::vector<double> x0(16, 0.0);
    const std::span<const double> x(x0);
    table_lo_ = r_lo(x);
    const double hi = r_hi(x);
    constexpr int kIntervals = 4096;
    table_dr_ = (hi - table_lo_) / kIntervals;
    table_F_.assign(kIntervals + 1, 0.0);
    table_f_.assign(kIntervals + 1, 0.0);
    for (int i = 0; i <= kIntervals; ++i) {
      const double r = table_lo_ + i * table_dr_;
      table_f_[i] = f(x, std::min(r, hi));
      if (i > 0)
        table_F_[i] = table_F_[i - 1] +
                      gauss_legendre([&](double q) { return f(x, q); }, r - table_dr_, r, 1);
    }
  }

  ExampleSpec spec_;
  double s_min_, s_max_;
  bool x_independent_ = false;
  double table_lo_ = 0.0, table_dr_ = 1.0;
  std::vector<double> table_F_, table_f_;
};

}  // namespace

void Coefficients::validate(const Grid& grid) const {
  check_axis(alpha, grid, "alpha");
  check_axis(p, grid, "p");
  double inf_alpha = INFINITY;
  for_each_x_slice(grid, [&](std::span<const double> x) {
    const double a = alpha.value(x);
    const double e = p.value(x);
    if (!std::isfinite(a) || !std::isfinite(e))
      throw std::invalid_argument("coefficients are not finite at x = " + std::to_string(x[0]));
    if (e < 2.0)
      throw std::invalid_argument("exponent p(x) = " + std::to_string(e) + " < 2 at x1 = " +
                                  std::to_string(x[0]));
    inf_alpha = std::min(inf_alpha, a);
  });
  if (!(inf_alpha > 0.0))
    throw std::invalid_argument("inf alpha = " + std::to_string(inf_alpha) + " is not positive");
}

Nonlinearity Nonlinearity::from_profile(const Profile& poly, const XFunction& scale, double t0) {
  Nonlinearity n;
  n.t0 = t0;
  n.f = [poly, scale](std::span<const double> x, double u) { return scale.value(x) * poly.value(u); };
  n.f_u = [poly, scale](std::span<const double> x, double u) {
    return scale.value(x) * poly.derivative(u, 1);
  };
  const double A0 = poly.antiderivative(t0);
  n.F = [poly, scale, A0](std::span<const double> x, double t) {
    return scale.value(x) * (poly.antiderivative(t) - A0);
  };
  const bool unit = scale.is_constant() && scale.profile.value(0.0) == 1.0;
  n.description = unit ? poly.to_string() : "(" + scale.to_string() + ") * " + poly.to_string();
  return n;
}

void Nonlinearity::self_check(const Grid& grid, double u_lo, double u_hi, int samples) const {
  if (!f || !f_u || !F) throw std::invalid_argument("nonlinearity is missing f, f_u or F");
  for_each_x_slice(grid, [&](std::span<const double> x) {
    const double F0 = F(x, t0);
    if (F0 != 0.0 && std::abs(F0) > 1e-12)
      throw std::invalid_argument("F(x, t0) = " + std::to_string(F0) + " is not zero");
    for (int i = 0; i < samples; ++i) {
      const double u = samples == 1 ? u_lo : u_lo + (u_hi - u_lo) * i / (samples - 1);
      const double d = 1e-5 * std::max(1.0, std::abs(u));
      const double fd = (f(x, u + d) - f(x, u - d)) / (2 * d);
      const double fu = f_u(x, u);
      if (!(std::abs(fu - fd) <= 1e-6 * std::max(1.0, std::abs(fu)))) {
        std::ostringstream os;
        os << "f_u disagrees with a finite difference of f at u = " << u << ": " << fu
           << " vs " << fd;
        throw std::invalid_argument(os.str());
      }
    }
  });
}

void ModelBundle::validate() const {
  coefficients.validate(grid);
  if (!nonlinearity.f || !nonlinearity.f_u || !nonlinearity.F)
    throw std::invalid_argument("nonlinearity is missing f, f_u or F");
  if (!(eps_reg >= 0.0) || !std::isfinite(eps_reg))
    throw std::invalid_argument("eps_reg must be finite and non-negative");
}

void ExampleSpec::validate(const Grid& grid) const {
  coefficients.validate(grid);
  check_axis(beta, grid, "beta");
  if (static_cast<int>(omega.size()) != grid.n_minus_m())
    throw std::invalid_argument("omega has " + std::to_string(omega.size()) +
                                " components, expected n - m = " + std::to_string(grid.n_minus_m()));
  double norm2 = 0.0;
  for (double w : omega) norm2 += w * w;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw std::invalid_argument("|omega| must be 1");
  double inf_beta = INFINITY;
  for_each_x_slice(grid, [&](std::span<const double> x) { inf_beta = std::min(inf_beta, beta.value(x)); });
  if (!(inf_beta > 0.0))
    throw std::invalid_argument("inf beta = " + std::to_string(inf_beta) + " is not positive");

  double s_min = 0.0, s_max = 0.0;
  for (int j = 0; j < grid.n_minus_m(); ++j) {
    const Interval& e = grid.extent(grid.m() + j);
    s_min += std::min(omega[j] * e.lo, omega[j] * e.hi);
    s_max += std::max(omega[j] * e.lo, omega[j] * e.hi);
  }
  if (!gamma.strictly_increasing_on(s_min, s_max))
    throw std::invalid_argument("gamma = " + gamma.to_string() +
                                " is not strictly increasing on the sampled range [" +
                                std::to_string(s_min) + ", " + std::to_string(s_max) + "]");
  for (int i = 0; i <= 200; ++i) {
    const double t = s_min + (s_max - s_min) * i / 200.0;
    double back = 0.0;
    try {
      back = gamma_inv(gamma.value(t));
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("gamma cannot be inverted: ") + e.what());
    }
    // The inverse loses digits where γ' is tiny; compare in the image.
    const double slack = 1e-10 * std::max(1.0, std::abs(t)) +
                         4e-16 * std::max(1.0, std::abs(gamma.value(t))) / gamma.derivative(t, 1);
    if (!(std::abs(back - t) <= slack))
      throw std::invalid_argument("Gamma(gamma(t)) != t at t = " + std::to_string(t));
  }
}

double ExampleSpec::value(std::span<const double> X, int m) const {
  double s = 0.0;
  for (std::size_t j = 0; j < omega.size(); ++j) s += omega[j] * X[m + j];
  return beta.value(X.first(m)) * gamma.value(s);
}

double example_forcing(const ExampleSpec& spec, std::span<const double> x, double s) {
  const int kb = spec.beta.axis;
  const double beta = spec.beta.value(x), b1 = spec.beta.d1(x), b2 = spec.beta.d2(x);
  const double G = spec.gamma.value(s), G1 = spec.gamma.derivative(s, 1),
               G2 = spec.gamma.derivative(s, 2);
  const auto& c = spec.coefficients;
  const double alpha = c.alpha.value(x), p = c.p.value(x);
  const double a1 = c.alpha.axis == kb ? c.alpha.d1(x) : 0.0;
  const double p1 = c.p.axis == kb ? c.p.d1(x) : 0.0;

  // Q = |∇u|², a = α Q^{(p-2)/2}; g = -(∂_x a β' γ + ∂_s a β γ' + a Δu).
  const double Q = b1 * b1 * G * G + beta * beta * G1 * G1;
  const double lap = b2 * G + beta * G2;
  double a = 0.0, da_x = 0.0, da_s = 0.0;
  if (Q > 0.0) {
    a = alpha * std::pow(Q, 0.5 * (p - 2.0));
    const double Qx = 2.0 * b1 * b2 * G * G + 2.0 * beta * b1 * G1 * G1;
    const double Qs = 2.0 * b1 * b1 * G * G1 + 2.0 * beta * beta * G1 * G2;
    da_x = a * (a1 / alpha + 0.5 * p1 * std::log(Q) + 0.5 * (p - 2.0) * Qx / Q);
    da_s = a * 0.5 * (p - 2.0) * Qs / Q;
  } else if (p == 2.0) {
    a = alpha;
    da_x = a1;
  }
  return -(da_x * b1 * G + da_s * beta * G1 + a * lap);
}

ExactExample exact_example(const ExampleSpec& spec, const Grid& grid) {
  spec.validate(grid);
  double s_min = 0.0, s_max = 0.0;
  for (int j = 0; j < grid.n_minus_m(); ++j) {
    const Interval& e = grid.extent(grid.m() + j);
    s_min += std::min(spec.omega[j] * e.lo, spec.omega[j] * e.hi);
    s_max += std::max(spec.omega[j] * e.lo, spec.omega[j] * e.hi);
  }
  auto forcing = std::make_shared<const ExampleForcing>(spec, s_min, s_max);

  ExactExample out;
  out.s_min = s_min;
  out.s_max = s_max;
  const int m = grid.m();
  out.u_exact = [spec, m](std::span<const double> X) { return spec.value(X, m); };
  out.u = ScalarField::sample(grid, out.u_exact);

  Nonlinearity& n = out.model.nonlinearity;
  n.t0 = spec.t0;
  n.f = [forcing](std::span<const double> x, double r) { return forcing->f(x, r); };
  n.f_u = [forcing](std::span<const double> x, double r) { return forcing->f_u(x, r); };
  n.F = [forcing](std::span<const double> x, double t) { return forcing->F(x, t); };
  n.description = "exact-example(beta = " + spec.beta.to_string() +
                  ", gamma = " + spec.gamma.to_string() + ")";

  out.model.coefficients = spec.coefficients;
  out.model.grid = grid;
  out.model.validate();

  // Self-check strictly inside the sampled range (f is only C^1 at its ends).
  const double g_lo = spec.gamma.value(s_min), g_hi = spec.gamma.value(s_max);
  const double lo = g_lo + 0.05 * (g_hi - g_lo), hi = g_hi - 0.05 * (g_hi - g_lo);
  std::vector<double> x0(static_cast<std::size_t>(m), 0.0);
  for (int k = 0; k < m; ++k) x0[k] = grid.coord(k, 0);
  const double beta0 = spec.beta.value(x0);
  if (spec.beta.is_constant()) n.self_check(grid, beta0 * lo, beta0 * hi, 11);
  return out;
}

double smooth_step_psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

double smooth_transition(double t) {
  const double a = smooth_step_psi(t), b = smooth_step_psi(1.0 - t);
  return a / (a + b);
}

double counterexample_tau(double x) { return smooth_step_psi(std::abs(x) - 1.0); }

std::array<double, 2> counterexample_omega(double x) {
  const double theta = 0.5 * std::numbers::pi * smooth_transition(x + 0.5);
  return {std::cos(theta), std::sin(theta)};
}

Counterexample counterexample(const Grid& grid) {
  if (grid.m() != 1 || grid.n_minus_m() != 2)
    throw std::invalid_argument("the counterexample lives in R^1 x R^2 (m = 1, n - m = 2)");
  Counterexample out;
  out.omega = counterexample_omega;
  out.tau = counterexample_tau;
  out.u = ScalarField::sample(grid, [](std::span<const double> X) {
    const auto w = counterexample_omega(X[0]);
    return counterexample_tau(X[0]) * std::tanh(w[0] * X[1] + w[1] * X[2]);
  });
  return out;
}

}  // namespace plap
