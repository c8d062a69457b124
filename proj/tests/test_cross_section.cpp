#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "wglab/cross_section.hpp"
#include "wglab/errors.hpp"

using namespace wglab;

namespace {

constexpr double kPi = std::numbers::pi;

CrossSectionSpec interval(BoundaryCondition bc, int res, double length = kPi) {
  CrossSectionSpec s;
  s.shape = Interval{length};
  s.bc = bc;
  s.resolution = res;
  return s;
}

CrossSectionSpec rectangle(BoundaryCondition bc, int res, double lx, double ly) {
  CrossSectionSpec s;
  s.shape = Rectangle{lx, ly};
  s.bc = bc;
  s.resolution = res;
  return s;
}

// Eigenvalues of the three-point Laplacian on n nodes with spacing h, known in
// closed form: (2/h) sin(k pi / (2 (n - 1))).
double discrete_lambda(int k, int n, double length) {
  const double h = length / (n - 1);
  return 2.0 / h * std::sin(k * kPi / (2.0 * (n - 1)));
}

}  // namespace

TEST(ModeBasis, IntervalNeumannClosedForm) {
  const auto b = build_mode_basis(interval(BoundaryCondition::Neumann, 64, 2.0), 8);
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(b.lambda(j), j * kPi / 2.0, 1e-13);
  EXPECT_LT(b.gram_deviation(), 1e-8);
}

TEST(ModeBasis, IntervalDirichletClosedForm) {
  const auto b = build_mode_basis(interval(BoundaryCondition::Dirichlet, 64), 8);
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(b.lambda(j), j + 1.0, 1e-13);
  EXPECT_LT(b.gram_deviation(), 1e-8);
  // modes vanish on the boundary
  for (int j = 0; j < 8; ++j) {
    EXPECT_EQ(b.mode(j).front(), 0.0);
    EXPECT_NEAR(b.mode(j).back(), 0.0, 1e-14);
  }
}

TEST(ModeBasis, FiniteDifferenceMatchesDiscreteSpectrum) {
  for (auto bc : {BoundaryCondition::Neumann, BoundaryCondition::Dirichlet}) {
    const int n = 41;
    const auto b = build_mode_basis(interval(bc, n, 1.7), 12, BasisBackend::FiniteDifference);
    for (int j = 0; j < 12; ++j) {
      const int k = bc == BoundaryCondition::Neumann ? j : j + 1;
      EXPECT_NEAR(b.lambda(j), discrete_lambda(k, n, 1.7), 1e-10) << to_string(bc) << " j=" << j;
    }
    EXPECT_LT(b.gram_deviation(), 1e-6);
  }
}

TEST(ModeBasis, FiniteDifferenceGapIsSecondOrder) {
  // lambda_fd = lambda (1 - (lambda h)^2 / 24 + ...)
  std::vector<double> gaps;
  for (int n : {33, 65, 129}) {
    const auto fd = build_mode_basis(interval(BoundaryCondition::Dirichlet, n), 4, BasisBackend::FiniteDifference);
    gaps.push_back(std::abs(fd.lambda(3) - 4.0));
  }
  EXPECT_NEAR(gaps[0] / gaps[1], 4.0, 0.1);
  EXPECT_NEAR(gaps[1] / gaps[2], 4.0, 0.1);
}

TEST(ModeBasis, EigenResidualSmall) {
  const auto fd = build_mode_basis(interval(BoundaryCondition::Neumann, 65), 8, BasisBackend::FiniteDifference);
  for (int j = 0; j < 8; ++j) EXPECT_LT(fd.eigen_residual(j), 1e-8);
  const auto cf = build_mode_basis(interval(BoundaryCondition::Neumann, 65), 8);
  const double h = kPi / 64;
  for (int j = 0; j < 8; ++j) EXPECT_LT(cf.eigen_residual(j), std::pow(cf.lambda(j), 4) * h * h / 12 + 1e-10);
}

TEST(ModeBasis, NeumannZeroModeIsConstant) {
  for (auto backend : {BasisBackend::ClosedForm, BasisBackend::FiniteDifference}) {
    const auto b = build_mode_basis(interval(BoundaryCondition::Neumann, 32, 3.0), 4, backend);
    EXPECT_EQ(b.lambda(0), 0.0);
    for (double v : b.mode(0)) EXPECT_NEAR(v, 1.0 / std::sqrt(3.0), 1e-14);
  }
}

TEST(ModeBasis, RectangleSpectrumIsSortedSumOfSquares) {
  const double lx = kPi, ly = 2.0 * kPi;
  const auto b = build_mode_basis(rectangle(BoundaryCondition::Dirichlet, 32, lx, ly), 12);
  std::vector<double> expected;
  for (int a = 1; a <= 12; ++a) {
    for (int c = 1; c <= 12; ++c) expected.push_back(std::sqrt(a * a + 0.25 * c * c));
  }
  std::sort(expected.begin(), expected.end());
  for (int j = 0; j < 12; ++j) EXPECT_NEAR(b.lambda(j), expected[j], 1e-12);
  EXPECT_LT(b.gram_deviation(), 1e-8);
  const auto [a0, c0] = b.labels(0);
  EXPECT_EQ(a0, 1);
  EXPECT_EQ(c0, 1);
}

TEST(ModeBasis, RectangleNeumannHasZeroMode) {
  const auto b = build_mode_basis(rectangle(BoundaryCondition::Neumann, 16, 2.0, 3.0), 6);
  EXPECT_EQ(b.lambda(0), 0.0);
  EXPECT_NEAR(b.lambda(1), kPi / 3.0, 1e-13);
  EXPECT_NEAR(b.lambda(2), kPi / 2.0, 1e-13);
}

TEST(ModeBasis, PlancherelOnRandomBandLimitedFields) {
  // property: sum c_j^2 equals the quadrature norm for band-limited fields
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (auto bc : {BoundaryCondition::Neumann, BoundaryCondition::Dirichlet}) {
    for (auto backend : {BasisBackend::ClosedForm, BasisBackend::FiniteDifference}) {
      const auto b = build_mode_basis(interval(bc, 48), 16, backend);
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> c(16);
        for (auto& v : c) v = normal(rng);
        const auto f = b.reconstruct(c);
        const auto back = b.project(f);
        double s2 = 0.0;
        for (int j = 0; j < 16; ++j) {
          s2 += back[j] * back[j];
          EXPECT_NEAR(back[j], c[j], 1e-10);
        }
        EXPECT_NEAR(s2, b.inner(f, f), 1e-8 * s2);
      }
    }
  }
}

TEST(ModeBasis, BatchedTransformsRoundTrip) {
  const auto b = build_mode_basis(rectangle(BoundaryCondition::Neumann, 12, 1.0, 1.5), 6);
  const int cols = 5;
  std::vector<double> modes(6 * cols), phys(static_cast<std::size_t>(b.points()) * cols), back(modes.size());
  for (std::size_t k = 0; k < modes.size(); ++k) modes[k] = std::sin(1.0 + static_cast<double>(k));
  b.synthesize(modes, phys, cols);
  b.analyze(phys, back, cols);
  for (std::size_t k = 0; k < modes.size(); ++k) EXPECT_NEAR(back[k], modes[k], 1e-12);
}

TEST(ModeBasis, GradientMatchesClosedForm) {
  const auto b = build_mode_basis(interval(BoundaryCondition::Neumann, 64), 4);
  const auto y = b.coordinates(0);
  const double norm = std::sqrt(2.0 / kPi);
  for (int q = 0; q < b.points(); ++q) {
    EXPECT_NEAR(b.mode_gradient(2, 0)[q], -2.0 * norm * std::sin(2.0 * y[q]), 1e-12);
  }
}

TEST(ModeBasis, WeylGrowth) {
  const auto b1 = build_mode_basis(interval(BoundaryCondition::Dirichlet, 80), 40);
  EXPECT_TRUE(weyl_check(b1, 1).pass);
  const auto b2 = build_mode_basis(rectangle(BoundaryCondition::Neumann, 80, kPi, kPi), 40);
  EXPECT_TRUE(weyl_check(b2, 2).pass);
  EXPECT_THROW(weyl_check(build_mode_basis(interval(BoundaryCondition::Dirichlet, 32), 8), 1), ValidationError);
}

TEST(ModeBasis, BoundaryPointsCarryOutwardNormals) {
  const auto b = build_mode_basis(interval(BoundaryCondition::Neumann, 16), 4);
  const auto pts = b.boundary_points();
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].normal[0], -1.0);
  EXPECT_EQ(pts[1].normal[0], 1.0);
}

TEST(ModeBasis, RejectsUnderResolvedRequests) {
  EXPECT_THROW(build_mode_basis(interval(BoundaryCondition::Neumann, 16), 9), ResolutionError);
  EXPECT_THROW(build_mode_basis(interval(BoundaryCondition::Neumann, 16), 0), ValidationError);
  EXPECT_THROW(build_mode_basis(interval(BoundaryCondition::Neumann, 2), 1), ValidationError);
  CrossSectionSpec bad = interval(BoundaryCondition::Neumann, 16, -1.0);
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(BoundaryCondition, ParseRoundTrip) {
  for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
    EXPECT_EQ(parse_boundary_condition(to_string(bc)), bc);
  }
  EXPECT_THROW(parse_boundary_condition("robin"), ValidationError);
}
