#include <gtest/gtest.h>

#include <cmath>

#include "plap/geometry.hpp"
#include "plap/model.hpp"
#include "test_support.hpp"

using namespace plap;

namespace {

/// Fiber box [lo, hi]^k at a single x = 0, spacing h.
Grid fiber(int k, double lo, double hi, double h) {
  const int pts = static_cast<int>(std::lround((hi - lo) / h)) + 1;
  std::vector<int> sizes{1};
  std::vector<Interval> ext{{0, 0}};
  for (int a = 0; a < k; ++a) {
    sizes.push_back(pts);
    ext.push_back({lo, hi});
  }
  return Grid(1, k, sizes, ext);
}

ScalarField radial(const Grid& g) {
  return ScalarField::sample(g, [&](std::span<const double> X) {
    double r2 = 0.0;
    for (int a = g.m(); a < g.dim(); ++a) r2 += X[a] * X[a];
    return std::sqrt(r2);
  });
}

ScalarField rotated_layer(const Grid& g, double w1, double w2) {
  return ScalarField::sample(g, [&](std::span<const double> X) { return std::tanh(w1 * X[1] + w2 * X[2]); });
}

double radius_y(const Grid& g, std::size_t i) {
  std::vector<double> X(static_cast<std::size_t>(g.dim()));
  g.coords(i, X);
  double r2 = 0.0;
  for (int a = g.m(); a < g.dim(); ++a) r2 += X[a] * X[a];
  return std::sqrt(r2);
}

}  // namespace

TEST(Region, EmptyWhenIndependentOfY) {
  const Grid g = plap::testing::square(1, 1, 17);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return std::sin(X[0]); });
  EXPECT_TRUE(region(u, 1e-6).empty());
  EXPECT_TRUE(compute_geometry(u).region_mask.empty());
  EXPECT_THROW(region(u, 0.0), std::invalid_argument);
}

TEST(Region, FullInteriorForLinearY) {
  const Grid g = plap::testing::square(1, 1, 17);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return X[1]; });
  EXPECT_EQ(region(u, 0.99).count(), Region::interior(g).count());
}

TEST(Region, TanhLayerSlabWidth) {
  const double h = 1.0 / 16;
  const Grid g = fiber(1, -8, 8, h);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return std::tanh(X[1]); });
  const Region R = region(u, 1e-3);
  // sech²(y) > 1e-3 ⇔ |y| < acosh(√1000).
  const double half = std::acosh(std::sqrt(1000.0));
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!R.contains(i)) continue;
    lo = std::min(lo, g.coord(1, g.axis_index(i, 1)));
    hi = std::max(hi, g.coord(1, g.axis_index(i, 1)));
  }
  EXPECT_NEAR(lo, -half, h);
  EXPECT_NEAR(hi, half, h);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    const double y = g.coord(1, g.axis_index(i, 1));
    if (y > lo && y < hi) EXPECT_TRUE(R.contains(i));
  }
}

TEST(TangentialGradient, KillsTheNormalDirection) {
  const Grid g = fiber(2, -1, 1, 1.0 / 64);
  const ScalarField u = rotated_layer(g, 0.6, 0.8) + 0.3 * radial(g);
  const Region R = region(u, 1e-3);
  const VectorField t = tangential_gradient(u, u, R);
  const VectorField grad = gradient(u);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!R.contains(i)) {
      EXPECT_TRUE(std::isnan(t[0][i]));
      continue;
    }
    EXPECT_NEAR(t[0][i], 0.0, 1e-12);
    EXPECT_NEAR(t[1][i], 0.0, 1e-12);
  }
  // ⟨∇_L G, ν⟩ = 0 for an unrelated G.
  const ScalarField G = ScalarField::sample(g, [](std::span<const double> X) { return std::sin(3 * X[1]) * X[2]; });
  const VectorField tg = tangential_gradient(u, G, R);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!R.contains(i)) continue;
    const double n = std::hypot(grad[1][i], grad[2][i]);
    EXPECT_NEAR((tg[0][i] * grad[1][i] + tg[1][i] * grad[2][i]) / n, 0.0, 1e-12);
  }
}

TEST(TangentialGradient, RadialProjectionOfCoordinate) {
  const Grid g = fiber(2, -1, 1, 1.0 / 128);
  const ScalarField u = radial(g);
  const ScalarField G = ScalarField::sample(g, [](std::span<const double> X) { return X[1]; });
  const Region R = region(u, 0.5);
  const VectorField t = tangential_gradient(u, G, R);
  std::vector<double> X(3);
  int checked = 0;
  for (std::size_t i = 0; i < g.num_points(); i += 97) {
    if (!R.contains(i) || radius_y(g, i) < 0.25) continue;
    g.coords(i, X);
    const double r = radius_y(g, i);
    EXPECT_NEAR(t[0][i], 1.0 - X[1] * X[1] / (r * r), 1e-3);
    EXPECT_NEAR(t[1][i], -X[1] * X[2] / (r * r), 1e-3);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Curvature, FlatLevelSets) {
  const Grid g = fiber(2, -1, 1, 1.0 / 32);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return 0.6 * X[1] + 0.8 * X[2]; });
  const GeometryFields geo = compute_geometry(u);
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (geo.region_mask.contains(i)) EXPECT_NEAR(geo.Ksq[i], 0.0, 1e-10);
}

TEST(Curvature, CircleAndSphere) {
  {
    const Grid g = fiber(2, -1, 1, 1.0 / 128);
    const ScalarField u = radial(g);
    const Region R = region(u, 1e-4);
    const CurvatureFields c = curvatures(u, R, true);
    ASSERT_EQ(c.kappa.size(), 1u);
    EXPECT_EQ(c.eigen_failures, 0u);
    for (std::size_t i = 0; i < g.num_points(); ++i) {
      const double r = radius_y(g, i);
      if (!R.contains(i) || r < 0.1) continue;
      EXPECT_NEAR(c.Ksq[i] * r * r, 1.0, 0.02);
      EXPECT_NEAR(c.kappa[0][i] * r, 1.0, 0.01);
    }
  }
  {
    const Grid g = fiber(3, -1, 1, 1.0 / 32);
    const ScalarField u = radial(g);
    const Region R = region(u, 1e-4);
    const CurvatureFields c = curvatures(u, R, true);
    ASSERT_EQ(c.kappa.size(), 2u);
    for (std::size_t i = 0; i < g.num_points(); ++i) {
      const double r = radius_y(g, i);
      if (!R.contains(i) || r < 0.4) continue;
      EXPECT_NEAR(c.Ksq[i] * r * r, 2.0, 0.04);
      EXPECT_NEAR(c.kappa[0][i] * r, 1.0, 0.02);
      EXPECT_NEAR(c.kappa[1][i] * r, 1.0, 0.02);
    }
  }
}

TEST(SandT, VanishForOneFiberAxis) {
  const Grid g = Grid::with_spacing(1, 1, {{-2, 2}, {-4, 4}}, 1.0 / 32);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) {
    return (1.2 + std::sin(X[0])) * std::tanh(X[1] + 0.3 * X[0]);
  });
  const GeometryFields geo = compute_geometry(u);
  // Scales: Σ u_{xy}² for S, (|∇u| |∇u_y|)² for T.
  const VectorField grad = gradient(u);
  const HessianField H = hessian(u);
  double worst_S = 0.0, worst_T = 0.0, scale_S = 0.0, scale_T = 0.0;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!geo.core_mask.contains(i)) continue;
    worst_S = std::max(worst_S, std::abs(geo.S[i]));
    worst_T = std::max(worst_T, std::abs(geo.T[i]));
    scale_S = std::max(scale_S, H(i, 0, 1) * H(i, 0, 1));
    scale_T = std::max(scale_T, (grad[0][i] * grad[0][i] + grad[1][i] * grad[1][i]) *
                                    (H(i, 0, 1) * H(i, 0, 1) + H(i, 1, 1) * H(i, 1, 1)));
  }
  EXPECT_LE(worst_S, 1e-2 * scale_S);
  EXPECT_LE(worst_T, 1e-2 * scale_T);
}

TEST(SandT, BilinearFieldHasPositiveS) {
  const double h = 1.0 / 128;
  const Grid g(1, 2, {257, 33, 33}, {{-1, 1}, {-0.125, 0.125}, {-0.125, 0.125}});
  ASSERT_DOUBLE_EQ(g.spacing(0), h);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return X[0] * X[1] + X[2]; });
  const GeometryFields geo = compute_geometry(u);
  std::vector<double> X(3);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!geo.core_mask.contains(i)) continue;
    g.coords(i, X);
    EXPECT_NEAR(geo.S[i] * (X[0] * X[0] + 1.0), 1.0, 0.02);
    EXPECT_GE(geo.T[i], -1e-10);
  }
}

TEST(SandT, RadialHasZeroS) {
  const Grid g(1, 2, {9, 65, 65}, {{0, 1}, {-1, 1}, {-1, 1}});
  const GeometryFields geo = compute_geometry(radial(g));
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (geo.core_mask.contains(i)) EXPECT_NEAR(geo.S[i], 0.0, 1e-12);
}

TEST(IdentitySZ, FlatFieldHasNoDefect) {
  const Grid g = fiber(2, -1, 1, 1.0 / 32);
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return 0.6 * X[1] + 0.8 * X[2]; });
  const IdentityReport r = verify_identity_SZ(u);
  EXPECT_GT(r.points, 0u);
  EXPECT_LE(r.max_abs_defect, 1e-10);
}

TEST(IdentitySZ, RotatedLayerConvergesUnderRefinement) {
  const double w = 1.0 / std::sqrt(2.0);
  std::vector<double> defects;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const Grid g = fiber(2, -2, 2, h);
    const IdentityReport r = verify_identity_SZ(rotated_layer(g, w, w));
    defects.push_back(r.max_relative_defect);
  }
  EXPECT_LE(defects[2], 5e-2);
  EXPECT_LT(defects[1], defects[0]);
  EXPECT_LT(defects[2], defects[1]);
  EXPECT_GE(std::log2(defects[1] / defects[2]), 0.8);
}

TEST(IdentitySZ, RadialAwayFromOrigin) {
  std::vector<double> defects;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const Grid g = fiber(2, -1, 1, h);
    defects.push_back(verify_identity_SZ(radial(g), GeometryOptions{}, 0.25).max_relative_defect);
  }
  EXPECT_LE(defects[2], 5e-2);
  EXPECT_LT(defects[2], defects[1]);
  EXPECT_LT(defects[1], defects[0]);
}

TEST(Parallelism, OneDimensionalFieldIsParallel) {
  const Grid g(1, 2, {17, 65, 65}, {{-1, 1}, {-2, 2}, {-2, 2}});
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) {
    return (1.5 + X[0]) * std::tanh(0.6 * X[1] + 0.8 * X[2] + 0.2 * X[0]);
  });
  const GeometryFields geo = compute_geometry(u);
  const ParallelismReport r = check_parallelism(u, geo);
  EXPECT_TRUE(r.verdict) << r.max_ratio;
  EXPECT_LE(r.max_S_parallel, 1e-2);
}

TEST(Parallelism, BilinearFieldIsNot) {
  const Grid g(1, 2, {33, 17, 17}, {{-1, 1}, {-0.5, 0.5}, {-0.5, 0.5}});
  const ScalarField u = ScalarField::sample(g, [](std::span<const double> X) { return X[0] * X[1] + X[2]; });
  const GeometryFields geo = compute_geometry(u);
  const ParallelismReport r = check_parallelism(u, geo);
  EXPECT_FALSE(r.verdict);
  EXPECT_GT(r.non_parallel_points, 0u);
  EXPECT_GT(core_min(geo.S, geo), 0.4);
}

TEST(Parallelism, CounterexampleIsParallelWhileOmegaRotates) {
  const Grid g(1, 2, {129, 65, 65}, {{-2, 2}, {-2, 2}, {-2, 2}});
  const Counterexample ce = counterexample(g);
  const GeometryFields geo = compute_geometry(ce.u);
  EXPECT_TRUE(check_parallelism(ce.u, geo).verdict);
  const OmegaFit fit = fit_omega(ce.u, geo);
  EXPECT_GE(fit.constancy_score, 1.5);
  EXPECT_GT(fit.skipped_slices, 0u);
}

TEST(FitOmega, RecoversConstantDirection) {
  const Grid g(1, 2, {5, 257, 257}, {{0, 1}, {-2, 2}, {-2, 2}});
  const ScalarField u = rotated_layer(g, 0.6, 0.8);
  const OmegaFit fit = fit_omega(u);
  // The two x-boundary slices carry no interior points.
  EXPECT_EQ(fit.skipped_slices, 2u);
  for (const SliceOmega& s : fit.slices) {
    if (s.x_index[0] == 0 || s.x_index[0] == 4) continue;
    ASSERT_FALSE(s.skipped);
    EXPECT_NEAR(s.omega[0], 0.6, 1e-3);
    EXPECT_NEAR(s.omega[1], 0.8, 1e-3);
  }
  EXPECT_LE(fit.constancy_score, 1e-3);
  EXPECT_LE(fit.symmetry_defect, 1e-3);
}

TEST(FitOmega, SignIsFixedByFirstComponent) {
  const Grid g = fiber(2, -2, 2, 1.0 / 32);
  const OmegaFit fit = fit_omega(rotated_layer(g, -0.8, 0.6));
  EXPECT_NEAR(fit.slices[0].omega[0], 0.8, 1e-2);
  EXPECT_NEAR(fit.slices[0].omega[1], -0.6, 1e-2);
}

TEST(FitOmega, RadialFieldIsNotOneDimensional) {
  const Grid g = fiber(2, -1, 1, 1.0 / 64);
  EXPECT_GT(fit_omega(radial(g)).symmetry_defect, 0.1);
}

TEST(CauchySchwarz, ChainHoldsUpToDiscretization) {
  const Grid g(1, 2, {33, 33, 33}, {{-1, 1}, {-1, 1}, {-1, 1}});
  std::mt19937_64 rng(3);
  const ScalarField u = plap::testing::random_smooth(g, rng, 1.0, 0.3);
  const GeometryFields geo = compute_geometry(u);
  EXPECT_LE(cauchy_schwarz_excess(u, geo), 1e-2);
  EXPECT_GE(core_min(geo.S, geo), -1e-2);
  EXPECT_GE(core_min(geo.T, geo), -1e-2);
}
