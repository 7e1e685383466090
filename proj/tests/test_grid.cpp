#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "plap/grid.hpp"
#include "test_support.hpp"

namespace plap {
namespace {

using testing::square;

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(Grid(0, 1, {3, 3}, {{0, 1}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(Grid(1, 0, {3}, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(Grid(1, 1, {2, 3}, {{0, 1}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(Grid(1, 1, {3, 3}, {{1, 1}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(Grid(1, 1, {1, 1}, {{0, 0}, {0, 0}}), std::invalid_argument);
}

TEST(Grid, LayoutIsRowMajorWithLastAxisFastest) {
  const Grid g(1, 2, {3, 4, 5}, {{0, 2}, {0, 3}, {0, 4}});
  EXPECT_EQ(g.stride(2), 1);
  EXPECT_EQ(g.stride(1), 5);
  EXPECT_EQ(g.stride(0), 20);
  EXPECT_EQ(g.num_points(), 60u);
  int multi[3];
  g.unravel(37, multi);
  EXPECT_EQ(g.ravel(multi), 37u);
  EXPECT_DOUBLE_EQ(g.spacing(0), 1.0);
}

TEST(Grid, CollapsedAxisIsAFiberSlice) {
  const Grid g(1, 1, {1, 9}, {{0.5, 0.5}, {0, 1}});
  EXPECT_EQ(g.active_axes().size(), 1u);
  EXPECT_FALSE(g.on_boundary(3));
  EXPECT_TRUE(g.on_boundary(0));
  EXPECT_DOUBLE_EQ(g.trapezoid_weight(3), 0.125);
}

TEST(Gradient, ConstantAndAffineExact) {
  const Grid g(1, 2, {5, 6, 7}, {{-1, 1}, {0, 2}, {0.5, 1.5}});
  const ScalarField c(g, 7.0);
  for (const auto& comp : gradient(c).components) EXPECT_EQ(comp.max_abs(), 0.0);
  const double a[] = {0.3, -1.7, 2.5};
  const ScalarField aff = ScalarField::sample(g, [&](std::span<const double> X) {
    return a[0] * X[0] + a[1] * X[1] + a[2] * X[2];
  });
  const VectorField grad = gradient(aff);
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < g.num_points(); ++i) EXPECT_NEAR(grad[k][i], a[k], 1e-13);
}

TEST(Gradient, QuadraticOnThreePointGrid) {
  const Grid g = square(1, 1, 3, -1.0, 1.0);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) {
    return 0.5 * (X[0] * X[0] + X[1] * X[1]);
  });
  const VectorField grad = gradient(u);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    double X[2];
    g.coords(i, X);
    EXPECT_NEAR(grad[0][i], X[0], 1e-14);
    EXPECT_NEAR(grad[1][i], X[1], 1e-14);
  }
}

TEST(Hessian, HandDifferentiatedFields) {
  const Grid g = square(1, 1, 7, -1.0, 1.0);
  const ScalarField xy = ScalarField::sample(g, [](std::span<const double> X) { return X[0] * X[1]; });
  const ScalarField q = ScalarField::sample(g, [](std::span<const double> X) {
    return 0.5 * (X[0] * X[0] + X[1] * X[1]);
  });
  const HessianField H1 = hessian(xy), H2 = hessian(q);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (g.on_boundary(i)) continue;
    EXPECT_NEAR(H1(i, 0, 1), 1.0, 1e-12);
    EXPECT_NEAR(H1(i, 0, 0), 0.0, 1e-12);
    EXPECT_NEAR(H2(i, 0, 0), 1.0, 1e-12);
    EXPECT_NEAR(H2(i, 1, 1), 1.0, 1e-12);
    EXPECT_NEAR(H2(i, 0, 1), 0.0, 1e-12);
  }
}

TEST(Calculus, LinearityAndSymmetry) {
  std::mt19937_64 rng(1);
  const Grid g = square(1, 2, 9);
  const ScalarField f = testing::random_smooth(g, rng, 1.0, 1.0);
  const ScalarField h = testing::random_smooth(g, rng, 1.0, 1.0);
  const ScalarField comb = 2.0 * f + (-3.0) * h;
  const VectorField gf = gradient(f), gh = gradient(h), gc = gradient(comb);
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < g.num_points(); ++i)
      EXPECT_NEAR(gc[k][i], 2.0 * gf[k][i] - 3.0 * gh[k][i], 1e-11);
  const HessianField H = hessian(f);
  for (std::size_t i = 0; i < g.num_points(); ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) EXPECT_EQ(H(i, a, b), H(i, b, a));
}

TEST(Gradient, SecondOrderConvergence) {
  std::vector<double> err;
  for (int pts : {17, 33, 65, 129}) {
    const Grid g = square(1, 1, pts);
    const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) {
      return std::sin(X[0]) * std::sin(X[1]);
    });
    const VectorField grad = gradient(u);
    double e = 0.0;
    for (std::size_t i = 0; i < g.num_points(); ++i) {
      double X[2];
      g.coords(i, X);
      e = std::max(e, std::abs(grad[0][i] - std::cos(X[0]) * std::sin(X[1])));
      e = std::max(e, std::abs(grad[1][i] - std::sin(X[0]) * std::cos(X[1])));
    }
    err.push_back(e);
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.9);
}

TEST(Integrate, Examples) {
  const Grid g = square(1, 1, 11);
  EXPECT_NEAR(integrate(ScalarField(g, 1.0), Region::whole(g)), 1.0, 1e-12);
  const ScalarField x1 = ScalarField::sample(g, [](std::span<const double> X) { return X[0]; });
  EXPECT_NEAR(integrate(x1, Region::whole(g)), 0.5, 1e-12);
  EXPECT_EQ(integrate(x1, Region::ball(g, -1.0)), 0.0);
}

TEST(Integrate, AnnulusAreaConvergesAtFirstOrder) {
  const double exact = std::numbers::pi * 0.75;
  for (int pts : {101, 401}) {
    const Grid g = square(1, 1, pts, -1.0, 1.0);
    const double h = g.spacing(0);
    const double area = measure(Region::annulus(g, 0.5, 1.0));
    EXPECT_NEAR(area, exact, 8.0 * h);
  }
  const Grid g = square(1, 1, 5, -1.0, 1.0);
  EXPECT_THROW(Region::annulus(g, 1.0, 0.5), std::invalid_argument);
}

TEST(Region, AnnulusMarksExactlyTheShell) {
  const Grid g = square(1, 1, 21, -1.0, 1.0);
  const Region a = Region::annulus(g, 0.3, 0.8);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    const double r = g.radius(i);
    EXPECT_EQ(a.contains(i), r >= 0.3 && r <= 0.8);
  }
}

TEST(Integrate, PartitionAdditivity) {
  std::mt19937_64 rng(4);
  const Grid g = square(1, 1, 41, -1.0, 1.0);
  const ScalarField f = testing::random_smooth(g, rng, 1.0, 1.0);
  const Region inner = Region::interior(g);
  std::vector<std::uint8_t> m1(g.num_points()), m2(g.num_points());
  std::bernoulli_distribution coin(0.4);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    const bool c = coin(rng);
    m1[i] = inner.contains(i) && c;
    m2[i] = inner.contains(i) && !c;
  }
  const double total = integrate(f, inner);
  const double parts = integrate(f, Region::custom(g, m1)) + integrate(f, Region::custom(g, m2));
  EXPECT_NEAR(total, parts, 1e-13 * std::max(1.0, std::abs(total)));
}

TEST(RefineLinear, InterpolatesAffineExactly) {
  const Grid g = square(1, 1, 5);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return 2 * X[0] - X[1]; });
  const ScalarField f = refine_linear(u);
  EXPECT_EQ(f.grid().size(0), 9);
  const ScalarField exact = ScalarField::sample(f.grid(), [](std::span<const double> X) { return 2 * X[0] - X[1]; });
  EXPECT_LE((f - exact).max_abs(), 1e-14);
}

}  // namespace
}  // namespace plap
