#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "plap/operator_energy.hpp"
#include "plap/solver.hpp"
#include "plap/stability.hpp"
#include "plap/test_functions.hpp"
#include "test_support.hpp"

using namespace plap;
using plap::testing::dense_min_eigenvalue;

namespace {

constexpr double kPi = std::numbers::pi;

ModelBundle make(const Grid& g, double p, Nonlinearity f, double alpha = 1.0) {
  ModelBundle m;
  m.grid = g;
  m.coefficients.p = XFunction::constant(p);
  m.coefficients.alpha = XFunction::constant(alpha);
  m.nonlinearity = std::move(f);
  return m;
}

Grid interval(int cells, double length = kPi) { return Grid(1, 1, {1, cells + 1}, {{0, 0}, {0, length}}); }

ScalarField zero_field_like(const Grid& g) { return ScalarField(g); }

}  // namespace

TEST(QuadraticForm, LaplacianIsDirichletIntegral) {
  const Grid g = plap::testing::square(1, 1, 17);
  const ModelBundle m = make(g, 2.0, Nonlinearity::zero());
  const StencilMatrix A = quadratic_form(zero_field_like(g), m);
  EXPECT_TRUE(A.is_symmetric());
  for (const ScalarField& xi : random_test_functions(g, 3, 6)) {
    // E(ξ) = ½∫|∇ξ|² exactly for p = 2, f = 0.
    const double dirichlet = 2.0 * energy(xi, m).total;
    EXPECT_NEAR(A.quadratic(xi.values()), dirichlet, 1e-12 * dirichlet);
  }
}

TEST(QuadraticForm, ConstantFuShiftsByMass) {
  const Grid g = plap::testing::square(1, 1, 17);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return X[0] + X[1]; });
  const StencilMatrix A0 = quadratic_form(u, make(g, 2.0, Nonlinearity::zero()));
  const StencilMatrix Ac = quadratic_form(u, make(g, 2.0, Nonlinearity::linear(0.7)));
  for (const ScalarField& xi : random_test_functions(g, 4, 4)) {
    const double mass = integrate(pointwise_product(xi, xi), Region::whole(g));
    EXPECT_NEAR(Ac.quadratic(xi.values()), A0.quadratic(xi.values()) - 0.7 * mass, 1e-12);
  }
}

TEST(QuadraticForm, MatchesSecondVariationForP3) {
  const Grid g = plap::testing::square(1, 1, 21);
  std::mt19937_64 rng(11);
  const ScalarField u = plap::testing::random_smooth(g, rng, 1.0, 0.2);
  const ModelBundle m = make(g, 3.0, Nonlinearity::allen_cahn());
  const StencilMatrix A = quadratic_form(u, m);
  for (const ScalarField& xi : random_test_functions(g, 5, 20)) {
    const double q = second_variation(u, xi, m);
    EXPECT_NEAR(A.quadratic(xi.values()), q, 1e-12 * std::abs(q));
  }
}

TEST(MinRayleigh, DirichletIntervalIsOne) {
  const Grid g = interval(512);
  const StabilityReport r = min_rayleigh(zero_field_like(g), make(g, 2.0, Nonlinearity::zero()));
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.min_rayleigh, 1.0, 1e-3);
  // Discrete eigenvalue of the 3-point Laplacian: (4/h²) sin²(h/2).
  const double h = kPi / 512;
  EXPECT_NEAR(r.min_rayleigh, 4.0 / (h * h) * std::pow(std::sin(h / 2), 2), 1e-9);
  EXPECT_LE(r.residual_of_eigenpair, EigenOptions{}.tol);
  // The eigenvector is sin y up to scale.
  const ScalarField& v = r.eigenvector;
  const double ratio = v[256] / std::sin(256 * h);
  for (std::size_t i = 1; i < 512; ++i) EXPECT_NEAR(v[i], ratio * std::sin(i * h), 1e-6 * ratio);
}

TEST(MinRayleigh, UnitFuShiftsToZero) {
  const Grid g = interval(512);
  const StabilityReport r = min_rayleigh(zero_field_like(g), make(g, 2.0, Nonlinearity::linear(1.0)));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.min_rayleigh, 0.0, 1e-3);
}

TEST(MinRayleigh, MatchesDenseOracle) {
  const Grid g = interval(64);
  const StencilMatrix A = quadratic_form(zero_field_like(g), make(g, 2.0, Nonlinearity::zero()));
  const StabilityReport r = min_rayleigh(A);
  const double dense = dense_min_eigenvalue(A);
  EXPECT_NEAR(r.min_rayleigh, dense, 1e-9 * std::abs(dense));

  // Variable-coefficient nonlinear form in 2D, 961 unknowns.
  const Grid g2 = plap::testing::square(1, 1, 33, -1.0, 1.0);
  std::mt19937_64 rng(21);
  const ScalarField u = plap::testing::random_smooth(g2, rng, 1.0, 0.3);
  ModelBundle m = make(g2, 3.0, Nonlinearity::allen_cahn(2.0));
  m.coefficients.alpha = XFunction::parse("polynomial(1.5, 0.4) @ x1");
  const StencilMatrix A2 = quadratic_form(u, m);
  const StabilityReport r2 = min_rayleigh(A2);
  ASSERT_TRUE(r2.converged) << r2.message;
  const double dense2 = dense_min_eigenvalue(A2);
  EXPECT_NEAR(r2.min_rayleigh, dense2, 1e-9 * std::abs(dense2));
}

TEST(MinRayleigh, AlphaScalingScalesEigenvalue) {
  const Grid g = plap::testing::square(1, 1, 33);
  std::mt19937_64 rng(8);
  const ScalarField u = plap::testing::random_smooth(g, rng, 1.0, 0.2);
  const StabilityReport a = min_rayleigh(u, make(g, 3.0, Nonlinearity::zero(), 1.0));
  const StabilityReport b = min_rayleigh(u, make(g, 3.0, Nonlinearity::zero(), 2.5));
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_NEAR(b.min_rayleigh, 2.5 * a.min_rayleigh, 1e-9 * b.min_rayleigh);
}

TEST(MinRayleigh, LinearForcingAboveFirstEigenvalueIsUnstable) {
  const Grid g(1, 1, {33, 33}, {{0, kPi}, {0, kPi}});
  const ModelBundle m = make(g, 2.0, Nonlinearity::linear(3.0));
  const StencilMatrix A = quadratic_form(zero_field_like(g), m);
  const StabilityReport r = min_rayleigh(A);
  ASSERT_TRUE(r.converged);
  // λ₁ = 2 on the square, so the shifted form has λ_min ≈ -1.
  EXPECT_NEAR(r.min_rayleigh, -1.0, 5e-3);
  EXPECT_FALSE(is_stable(r, default_tol_stability(A)));
}

TEST(MinRayleigh, MonotoneManufacturedSolutionIsStable) {
  const Grid g = Grid::with_spacing(1, 1, {{-8, 8}, {-8, 8}}, 0.125);
  const ExactExample ex = exact_example({}, g);
  const SolveResult s = solve(ex.model, ex.u, ex.u, {});
  ASSERT_TRUE(s.report.converged);
  const StabilityReport r = min_rayleigh(s.u, ex.model);
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_GE(r.min_rayleigh, -1e-8);
  ASSERT_TRUE(r.monotone_direction_found.has_value());
  EXPECT_EQ(*r.monotone_direction_found, 1);
}

TEST(MonotoneStability, MonotoneLayerIsStable) {
  const Grid g = Grid::with_spacing(1, 1, {{-4, 4}, {-8, 8}}, 0.125);
  const ExactExample ex = exact_example({}, g);
  const MonotoneStabilityResult r = verify_monotone_stability(ex.u, ex.model, 0);
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.stable) << r.message;
  EXPECT_TRUE(r.chain_holds);
  EXPECT_GT(r.worst_chain_quotient, 0.0);
}

TEST(MonotoneStability, InteriorCriticalPointIsNotApplicable) {
  const Grid g = plap::testing::square(1, 1, 17, -1.0, 1.0);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return X[1] * X[1]; });
  const MonotoneStabilityResult r = verify_monotone_stability(u, make(g, 2.0, Nonlinearity::zero()), 0);
  EXPECT_FALSE(r.applicable);
  EXPECT_NE(r.message.find("not applicable"), std::string::npos);
  EXPECT_THROW(verify_monotone_stability(u, make(g, 2.0, Nonlinearity::zero()), 1), std::invalid_argument);
}

TEST(MonotoneDirection, PrefersFiberAxes) {
  const Grid g = plap::testing::square(1, 1, 9);
  EXPECT_EQ(monotone_direction(ScalarField::sample(g, [](std::span<const double> X) { return X[0] + X[1]; })), 1);
  EXPECT_EQ(monotone_direction(ScalarField::sample(g, [](std::span<const double> X) { return X[0] - X[1]; })), 0);
  EXPECT_FALSE(monotone_direction(ScalarField(g, 1.0)).has_value());
}
