#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "plap/operator_energy.hpp"
#include "test_support.hpp"

namespace plap {
namespace {

using testing::random_bump;
using testing::random_smooth;
using testing::square;

ModelBundle laplace_model(const Grid& g, double p = 2.0, double alpha = 1.0) {
  ModelBundle m;
  m.grid = g;
  m.coefficients.alpha = XFunction::constant(alpha);
  m.coefficients.p = XFunction::constant(p);
  m.nonlinearity = Nonlinearity::zero();
  return m;
}

TEST(AssembleB, TwoIsIdentity) {
  const double eta[] = {0.3, -2.0, 1.5};
  const Eigen::MatrixXd B = assemble_B(1.0, 2.0, eta);
  EXPECT_TRUE(B.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
}

TEST(AssembleB, ZeroGradientContinuity) {
  const double zero[] = {0.0, 0.0};
  EXPECT_EQ(assemble_B(2.0, 3.0, zero).norm(), 0.0);
  EXPECT_TRUE(assemble_B(2.0, 2.0, zero).isApprox(2.0 * Eigen::MatrixXd::Identity(2, 2)));
}

TEST(AssembleB, HandEvaluatedP4) {
  const double eta[] = {1.0, 0.0};
  const Eigen::MatrixXd B = assemble_B(1.0, 4.0, eta);
  EXPECT_DOUBLE_EQ(B(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(B(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(B(0, 1), 0.0);
}

TEST(AssembleB, PsdAndBoundsOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0), P(2.0, 5.0), A(0.1, 3.0);
  for (int t = 0; t < 2000; ++t) {
    const int n = 2 + t % 3;
    std::vector<double> eta(n);
    Eigen::VectorXd v(n), w(n);
    for (int i = 0; i < n; ++i) {
      eta[i] = U(rng);
      v[i] = U(rng);
      w[i] = U(rng);
    }
    const double a = A(rng), p = P(rng);
    const Eigen::MatrixXd B = assemble_B(a, p, eta);
    EXPECT_EQ((B - B.transpose()).norm(), 0.0);
    const double bw = w.dot(B * w), bv = v.dot(B * v);
    EXPECT_GE(bw, 0.0);
    double e2 = 0.0;
    for (double e : eta) e2 += e * e;
    const double bound = a * (p - 1.0) * std::pow(e2, 0.5 * (p - 2.0)) * w.squaredNorm();
    EXPECT_LE(bw, bound * (1.0 + 1e-12));
    EXPECT_LE(2.0 * v.dot(B * w), (bv + bw) * (1.0 + 1e-12) + 1e-300);
  }
}

TEST(Residual, ConstantAndAffineVanish) {
  const Grid g = square(1, 1, 17);
  const ModelBundle m = laplace_model(g);
  const ScalarField c(g, 3.0);
  EXPECT_EQ(residual(c, m).max_abs(), 0.0);
  const ScalarField aff = ScalarField::sample(g, [](std::span<const double> X) { return X[0]; });
  EXPECT_LE(residual(aff, m).max_abs(), 1e-10);
  ModelBundle m3 = laplace_model(g, 3.0);
  EXPECT_LE(residual(aff, m3).max_abs(), 1e-10);
}

TEST(Residual, FivePointLaplacianForP2) {
  const Grid g = square(1, 1, 9);
  std::mt19937_64 rng(3);
  const ScalarField u = random_smooth(g, rng, 1.0, 0.5);
  const ScalarField r = residual(u, laplace_model(g));
  const double h = g.spacing(0);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (g.on_boundary(i)) {
      EXPECT_EQ(r[i], 0.0);
      continue;
    }
    const auto s0 = static_cast<std::size_t>(g.stride(0)), s1 = static_cast<std::size_t>(g.stride(1));
    const double lap = (u[i + s0] + u[i - s0] + u[i + s1] + u[i - s1] - 4 * u[i]) / (h * h);
    EXPECT_NEAR(r[i], -lap, 1e-10);
  }
}

TEST(Energy, Examples) {
  const Grid g = square(1, 1, 11);
  ModelBundle m = laplace_model(g);
  const ScalarField aff = ScalarField::sample(g, [](std::span<const double> X) { return X[0]; });
  EXPECT_NEAR(energy(aff, m).total, 0.5, 1e-10);

  m.nonlinearity = Nonlinearity::from_profile(Profile::constant(1.0), XFunction::constant(1.0), 0.0);
  const ScalarField zero(g, 0.0);
  const EnergyReport e0 = energy(zero, m);
  EXPECT_EQ(e0.total, 0.0);

  // F(x, t) = -1 - t... choose f ≡ -1 with t0 = 1 so F(x, 0) = 1 -> E = -|Ω|;
  // f ≡ 1, t0 = 1 gives F(x, 0) = -1 -> E = |Ω|.
  m.nonlinearity = Nonlinearity::from_profile(Profile::constant(1.0), XFunction::constant(1.0), 1.0);
  const Region ball = Region::ball(g, 0.7);
  const EnergyReport eb = energy(zero, m, ball);
  EXPECT_NEAR(eb.total, measure(ball), 1e-14);
  EXPECT_EQ(eb.total, eb.dirichlet_part + eb.potential_part);
}

TEST(Energy, EmptyRegionIsFlagged) {
  const Grid g = square(1, 1, 5);
  const auto rep = energy(ScalarField(g, 1.0), laplace_model(g), Region::ball(g, -1.0 + 1e-9).minus(Region::whole(g)));
  EXPECT_TRUE(rep.empty_region);
  EXPECT_EQ(rep.total, 0.0);
}

TEST(Variations, RejectBoundaryNonzero) {
  const Grid g = square(1, 1, 5);
  const ModelBundle m = laplace_model(g);
  const ScalarField u(g, 0.0), one(g, 1.0);
  EXPECT_THROW(weak_pairing(u, one, m), std::invalid_argument);
  EXPECT_THROW(first_variation(u, one, m), std::invalid_argument);
  EXPECT_THROW(second_variation(u, one, m), std::invalid_argument);
  EXPECT_EQ(first_variation(u, ScalarField(g, 0.0), m), 0.0);
  EXPECT_EQ(second_variation(u, ScalarField(g, 0.0), m), 0.0);
}

class VariationsVsEnergy : public ::testing::TestWithParam<double> {};

TEST_P(VariationsVsEnergy, FirstAndSecondMatchDifferences) {
  const double p = GetParam();
  std::mt19937_64 rng(100 + static_cast<int>(p));
  const Grid g = square(1, 1, 21);
  ModelBundle m = laplace_model(g, p, 1.5);
  m.nonlinearity = Nonlinearity::allen_cahn();
  for (int t = 0; t < 5; ++t) {
    const ScalarField u = random_smooth(g, rng, 1.0, 0.2);
    const ScalarField phi = random_bump(g, rng);
    auto E = [&](double s) { return energy(u + s * phi, m).total; };
    const double e1 = 1e-4;
    const double fd1 = (E(e1) - E(-e1)) / (2 * e1);
    const double fv = first_variation(u, phi, m);
    EXPECT_NEAR(fv, fd1, 1e-6 * std::max(1.0, std::abs(fv)));
    EXPECT_EQ(fv, weak_pairing(u, phi, m));
    const double e2 = 1e-3;
    const double fd2 = (E(e2) - 2 * E(0.0) + E(-e2)) / (e2 * e2);
    const double sv = second_variation(u, phi, m);
    EXPECT_NEAR(sv, fd2, 1e-4 * std::abs(sv));
    // Quadratic form.
    EXPECT_NEAR(second_variation(u, 3.0 * phi, m), 9.0 * sv, 1e-12 * std::abs(9.0 * sv));
    // Hessian matrix reproduces the form.
    const StencilMatrix A = hessian_matrix(u, m);
    EXPECT_TRUE(A.is_symmetric());
    EXPECT_NEAR(A.quadratic(phi.values()), sv, 1e-12 * std::abs(sv));
  }
}

INSTANTIATE_TEST_SUITE_P(Exponents, VariationsVsEnergy, ::testing::Values(2.0, 3.0, 4.0));

TEST(Variations, VariableCoefficients3D) {
  std::mt19937_64 rng(8);
  const Grid g = square(1, 2, 9, -1.0, 1.0);
  ModelBundle m = laplace_model(g);
  m.coefficients.alpha = XFunction::parse("atan(0.5, 1, 0) @ x1");
  m.coefficients.alpha.profile = Profile::polynomial({2.0, 0.5});
  m.coefficients.p = XFunction{Profile::gaussian_bump(1.0, 0.0, 1.0), 0};
  m.coefficients.p.profile = Profile::polynomial({3.0, 0.4});
  m.nonlinearity = Nonlinearity::linear(0.7);
  const ScalarField u = random_smooth(g, rng, 1.0, 0.2);
  const ScalarField phi = random_bump(g, rng);
  auto E = [&](double s) { return energy(u + s * phi, m).total; };
  const double e2 = 1e-3;
  const double fd2 = (E(e2) - 2 * E(0.0) + E(-e2)) / (e2 * e2);
  const double sv = second_variation(u, phi, m);
  EXPECT_NEAR(sv, fd2, 1e-4 * std::abs(sv));
  const StencilMatrix A = hessian_matrix(u, m);
  EXPECT_TRUE(A.is_symmetric());
  EXPECT_NEAR(A.quadratic(phi.values()), sv, 1e-12 * std::abs(sv));
}

TEST(Variations, LaplaceFormIsDirichletIntegral) {
  std::mt19937_64 rng(5);
  const Grid g = square(1, 1, 33);
  const ModelBundle m = laplace_model(g);
  const ScalarField phi = random_bump(g, rng);
  const double sv = second_variation(ScalarField(g, 0.0), phi, m);
  EXPECT_GT(sv, 0.0);
  // Equals twice the p = 2 Dirichlet energy of φ.
  EXPECT_NEAR(sv, 2.0 * energy(phi, m).dirichlet_part, 1e-12 * sv);
}

TEST(Variations, ManufacturedSolutionIsNearlyCritical) {
  ExampleSpec spec;
  spec.omega = {1.0};
  double prev = INFINITY;
  for (int pts : {33, 65, 129}) {
    const Grid g(1, 1, {pts, pts}, {{-4.0, 4.0}, {-4.0, 4.0}});
    const ExactExample ex = exact_example(spec, g);
    ScalarField phi = ScalarField::sample(g, [](std::span<const double> X) {
      return std::exp(-(X[0] - 0.3) * (X[0] - 0.3) - (X[1] - 0.7) * (X[1] - 0.7));
    });
    for (std::size_t i = 0; i < g.num_points(); ++i)
      if (g.on_boundary(i)) phi[i] = 0.0;
    const double v = std::abs(first_variation(ex.u, phi, ex.model));
    EXPECT_LT(v, prev / 3.0);
    prev = v;
  }
  EXPECT_LT(prev, 1e-3);
}

}  // namespace
}  // namespace plap
