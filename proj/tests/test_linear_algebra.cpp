#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "plap/linear_algebra.hpp"
#include "plap/operator_energy.hpp"
#include "test_support.hpp"

namespace plap {
namespace {

StencilMatrix laplacian(const Grid& g, double shift = 0.0) {
  ModelBundle m;
  m.grid = g;
  m.nonlinearity = Nonlinearity::linear(shift);  // A = -Δ_h - shift·M
  return hessian_matrix(ScalarField(g, 0.0), m);
}

TEST(StencilMatrix, OffsetCodes) {
  const Grid g = testing::square(1, 1, 5);
  const StencilMatrix A(g, interior_unknowns(g));
  EXPECT_EQ(A.num_offsets(), 9u);
  EXPECT_EQ(A.offset(A.center()), 0);
  for (int o = 0; o < 9; ++o) EXPECT_EQ(A.offset(A.opposite(o)), -A.offset(o));
  const int steps[] = {1, -1};
  const int o = A.offset_index(steps);
  EXPECT_EQ(A.step(o, 0), 1);
  EXPECT_EQ(A.step(o, 1), -1);
  EXPECT_EQ(A.offset(o), g.stride(0) - g.stride(1));
}

class SolveSpd : public ::testing::TestWithParam<PreconditionerKind> {};

TEST_P(SolveSpd, ConvergesOnShiftedLaplacian) {
  for (const Grid& g : {Grid(1, 1, {65, 33}, {{0, 2}, {0, 1}}), testing::square(1, 2, 17),
                        Grid(1, 1, {1, 129}, {{0, 0}, {0, 1}})}) {
    const StencilMatrix A = laplacian(g, -0.5);
    std::mt19937_64 rng(9);
    std::vector<double> xs(g.num_points(), 0.0), b(g.num_points(), 0.0), x(g.num_points(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (A.unknowns()[i]) xs[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
    A.apply(xs, b);
    CgOptions opts;
    opts.rel_tol = 1e-12;
    const CgResult r = solve_spd(A, b, x, GetParam(), opts);
    EXPECT_TRUE(r.converged);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(x[i] - xs[i]));
    EXPECT_LT(err, 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(Preconditioners, SolveSpd,
                         ::testing::Values(PreconditionerKind::jacobi, PreconditionerKind::multigrid));

TEST(Multigrid, IterationCountIsMeshIndependent) {
  std::vector<int> iters;
  for (int pts : {65, 129, 257}) {
    const Grid g = testing::square(1, 1, pts);
    const StencilMatrix A = laplacian(g);
    std::vector<double> b(g.num_points(), 0.0), x(g.num_points(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = A.unknowns()[i] ? 1.0 : 0.0;
    CgOptions opts;
    opts.rel_tol = 1e-10;
    const CgResult r = solve_spd(A, b, x, PreconditionerKind::multigrid, opts);
    EXPECT_TRUE(r.converged);
    iters.push_back(r.iterations);
  }
  EXPECT_LE(iters.back(), iters.front() + 4);
  EXPECT_LE(iters.back(), 20);
}

TEST(Pcg, DetectsNegativeCurvature) {
  const Grid g = testing::square(1, 1, 17);
  const StencilMatrix A = laplacian(g, 200.0);  // strongly indefinite
  std::vector<double> b(g.num_points(), 0.0), x(g.num_points(), 0.0);
  // The lowest Dirichlet mode has Rayleigh quotient 2π² - 200 < 0.
  for (std::size_t i = 0; i < b.size(); ++i) {
    double X[2];
    g.coords(i, X);
    b[i] = A.unknowns()[i] ? std::sin(M_PI * X[0]) * std::sin(M_PI * X[1]) : 0.0;
  }
  CgOptions opts;
  opts.stop_on_negative_curvature = true;
  const auto M = make_preconditioner(A, PreconditionerKind::jacobi);
  const CgResult r = pcg([&](auto in, auto out) { A.apply(in, out); }, M, b, x, opts);
  EXPECT_TRUE(r.negative_curvature);
}

TEST(Preconditioner, NamesRoundTrip) {
  EXPECT_EQ(parse_preconditioner("jacobi"), PreconditionerKind::jacobi);
  EXPECT_EQ(parse_preconditioner(to_string(PreconditionerKind::multigrid)), PreconditionerKind::multigrid);
  EXPECT_THROW(parse_preconditioner("ilu"), std::invalid_argument);
}

}  // namespace
}  // namespace plap
