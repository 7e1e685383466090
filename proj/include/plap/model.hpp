#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "plap/grid.hpp"
#include "plap/profile.hpp"

namespace plap {

/// Weight α(x) and exponent p(x) of the operator div(α |∇u|^{p-2} ∇u).
struct Coefficients {
  XFunction alpha = XFunction::constant(1.0);
  XFunction p = XFunction::constant(2.0);

  double alpha_at(std::span<const double> x) const { return alpha.value(x); }
  double p_at(std::span<const double> x) const { return p.value(x); }
  bool x_independent() const { return alpha.is_constant() && p.is_constant(); }

  /// Throws std::invalid_argument unless α > 0 and p >= 2 at every x-slice of
  /// the grid, and both functions reference an existing x-axis.
  void validate(const Grid& grid) const;
};

/// Fibered right-hand side f(x, u) with its u-derivative and the primitive
/// F(x, t) = ∫_{t0}^t f(x, r) dr. The x argument holds the m x-coordinates.
struct Nonlinearity {
  using Fn = std::function<double(std::span<const double> x, double u)>;

  Fn f;
  Fn f_u;
  Fn F;
  double t0 = 0.0;
  std::string description;

  /// f(x, u) = c(x) P(u) with c = `scale`.
  static Nonlinearity from_profile(const Profile& poly, const XFunction& scale = XFunction::constant(1.0),
                                   double t0 = 0.0);
  static Nonlinearity zero() { return from_profile(Profile::constant(0.0)); }
  /// f(x, u) = K u.
  static Nonlinearity linear(double K) { return from_profile(Profile::polynomial({0.0, K})); }
  /// f(x, u) = 2 λ (u - u^3).
  static Nonlinearity allen_cahn(double lambda = 1.0) {
    return from_profile(Profile::polynomial({0.0, 2.0 * lambda, 0.0, -2.0 * lambda}));
  }

  /// Checks |f_u - central FD of f| <= 1e-6 max(1, |f_u|) and F(x, t0) = 0 at
  /// `samples` u-values in [u_lo, u_hi] on every x-slice of the grid.
  void self_check(const Grid& grid, double u_lo, double u_hi, int samples = 21) const;
};

/// Everything needed to evaluate the discrete operator and energy.
struct ModelBundle {
  Coefficients coefficients;
  Nonlinearity nonlinearity;
  Grid grid;
  /// Gradient regularization: |η|_ε = sqrt(|η|² + ε²).
  double eps_reg = 1e-8;

  void validate() const;
};

/// u(x, y) = β(x) γ(ω·y).
struct ExampleSpec {
  XFunction beta = XFunction::constant(1.0);
  Profile gamma = Profile::tanh();
  std::vector<double> omega{1.0};
  Coefficients coefficients;
  double t0 = 0.0;

  double gamma_inv(double r) const { return gamma.inverse(r); }
  /// Throws unless inf β > 0, |ω| = 1, ω matches the fiber dimension and Γ
  /// inverts γ on the sampled range of ω·y.
  void validate(const Grid& grid) const;
  double value(std::span<const double> X, int m) const;
};

struct ExactExample {
  ScalarField u;
  ModelBundle model;
  /// The closed-form u at a point (for boundary data and error norms).
  std::function<double(std::span<const double>)> u_exact;
  /// Range of ω·y over the grid box, the sampled range used to build f.
  double s_min = 0.0;
  double s_max = 0.0;
};

/// Builds the manufactured pair (u, f): f(x, β(x)γ(s)) = g(x, s) with
/// g = -div(α |∇u|^{p-2} ∇u) in closed form. f is linearly extended in u
/// outside β(x) γ([s_min, s_max]).
ExactExample exact_example(const ExampleSpec& spec, const Grid& grid);

/// g(x, s) of the manufactured pair at a point (x, y) with s = ω·y.
double example_forcing(const ExampleSpec& spec, std::span<const double> x, double s);

/// Field u(x, y) = τ(x) tanh(ω(x)·y) in R^1 x R^2 with τ = 0 exactly on
/// [-1, 1] and ω rotating from (1, 0) to (0, 1) across [-1/2, 1/2].
struct Counterexample {
  ScalarField u;
  std::function<std::array<double, 2>(double)> omega;
  std::function<double(double)> tau;
};

Counterexample counterexample(const Grid& grid);

/// C-infinity building blocks of the counterexample.
double smooth_step_psi(double s);       // exp(-1/s) for s > 0, else 0
double smooth_transition(double t);     // 0 for t <= 0, 1 for t >= 1
double counterexample_tau(double x);
std::array<double, 2> counterexample_omega(double x);

}  // namespace plap
