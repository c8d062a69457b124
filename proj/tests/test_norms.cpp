#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "wglab/errors.hpp"
#include "wglab/norms.hpp"
#include "wglab/numerics.hpp"

using namespace wglab;

namespace {

constexpr double kPi = std::numbers::pi;

ModeBasis interval_basis(BoundaryCondition bc, int res = 16, int j = 4) {
  CrossSectionSpec s;
  s.bc = bc;
  s.resolution = res;
  return build_mode_basis(s, j);
}

KGTrajectory kick(double mu, double amp, double T) {
  const auto grid = RadialGrid::for_horizon(3, 1.0, T, 0.05);
  KGState s;
  s.mu = mu;
  for (int i = 0; i < grid.size(); ++i) {
    s.u.push_back(0.0);
    s.ut.push_back(amp * polynomial_bump(grid.r(i), 1.0, 8));
  }
  EvolveOptions o;
  o.dt = 0.025;
  o.t_final = T;
  o.output_interval = 0.25;
  return evolve_kg(grid, s, o);
}

WaveguideTrajectory waveguide_run(const ModeBasis& b, double amp) {
  const auto grid = RadialGrid::for_horizon(3, 1.0, 4.0, 0.05);
  DataProfile p;
  p.f = [amp](double r, std::span<const double> y) {
    return amp * polynomial_bump(r, 1.0, 8) * (1.0 + std::cos(y[0]));
  };
  return solve_linear_modewise(sample_data(p, grid, b, 1.0, 1.0), 0.0, b, {0.025, 4.0, 0.25});
}

}  // namespace

TEST(Energy, GaussianClosedForm) {
  // u = u_t = exp(-r^2), mu = 1: E = (1 + 3 + 1) (pi / 2)^{3/2}
  const RadialGrid g{3, 7.0, 0.005};
  KGState s;
  s.mu = 1.0;
  for (int i = 0; i < g.size(); ++i) {
    s.u.push_back(std::exp(-g.r(i) * g.r(i)));
    s.ut.push_back(s.u.back());
  }
  const double exact = 5.0 * std::pow(kPi / 2.0, 1.5);
  EXPECT_NEAR(energy(s, g) / exact, 1.0, 1e-4);
  s.ut.pop_back();
  EXPECT_THROW(energy(s, g), ValidationError);
}

TEST(Energy, ModeSumMatchesRadialEnergiesAndPhysicalQuadrature) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const RadialGrid g{3, 4.0, 0.05};
  WaveguideField f;
  f.modes = b.size();
  f.columns = g.size();
  f.u.assign(static_cast<std::size_t>(f.modes * f.columns), 0.0);
  f.ut = f.u;
  double sum = 0.0;
  const double m = 0.5;
  for (int j : {0, 2}) {
    KGState s;
    s.mu = std::sqrt(m * m + b.lambda(j) * b.lambda(j));
    for (int i = 0; i < g.size(); ++i) {
      s.u.push_back(polynomial_bump(g.r(i), 1.5, 6) * (j + 1));
      s.ut.push_back(polynomial_bump(g.r(i), 1.0, 4));
      f.u[j * g.size() + i] = s.u.back();
      f.ut[j * g.size() + i] = s.ut.back();
    }
    sum += energy(s, g);
  }
  EXPECT_NEAR(energy(f, g, b, m), sum, 1e-12 * sum);
  EXPECT_NEAR(energy_physical(f, g, b, m), sum, 1e-8 * sum);
}

TEST(Energy, DriftOfModewiseEvolutionIsSecondOrder) {
  // the stepper conserves a discrete invariant; the quadrature energy drifts by O(h^2)
  const auto b = interval_basis(BoundaryCondition::Neumann);
  auto drift = [&](double h) {
    const auto grid = RadialGrid::for_horizon(3, 1.0, 4.0, h);
    DataProfile p;
    p.f = [](double r, std::span<const double> y) { return polynomial_bump(r, 1.0, 8) * (1.0 + std::cos(y[0])); };
    const auto traj = solve_linear_modewise(sample_data(p, grid, b, 1.0, 1.0), 0.0, b, {h / 2.0, 4.0, 0.25});
    const double e0 = energy(traj.states.front(), grid, b, 0.0);
    double worst = 0.0;
    for (const auto& st : traj.states) worst = std::max(worst, std::abs(energy(st, grid, b, 0.0) - e0) / e0);
    return worst;
  };
  const double d1 = drift(0.05), d2 = drift(0.025);
  EXPECT_LT(d2, 5e-3);
  EXPECT_NEAR(d1 / d2, 4.0, 0.3);
}

TEST(Poincare, SharpOnTheFirstModeStrictAbove) {
  const auto b = interval_basis(BoundaryCondition::Dirichlet);
  const RadialGrid g{3, 2.0, 0.05};
  WaveguideField f;
  f.modes = b.size();
  f.columns = g.size();
  f.u.assign(static_cast<std::size_t>(f.modes * f.columns), 0.0);
  f.ut = f.u;
  for (int i = 0; i < g.size(); ++i) f.u[i] = polynomial_bump(g.r(i), 1.0, 4);
  auto r = poincare_check(f, g, b);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.ratio, 1.0, 1e-10);
  for (int i = 0; i < g.size(); ++i) f.u[2 * g.size() + i] = polynomial_bump(g.r(i), 1.0, 4);
  r = poincare_check(f, g, b);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.ratio, 0.8);

  const auto nb = interval_basis(BoundaryCondition::Neumann);
  EXPECT_THROW(poincare_check(f, g, nb), ValidationError);
}

TEST(Kss, BoundedByEnergyTimesHorizon) {
  // weights are <= 1, so lhs^2 <= T E(0) = T ||g||^2 for a massless kick
  const auto traj = kick(0.0, 1.0, 20.0);
  KssSource src;
  src.impulse = traj.states.front().ut;
  for (double T : {5.0, 10.0, 20.0}) {
    const auto r = kss_ratio(traj, src, KssVariant::SigmaWeighted, 0.5, T);
    EXPECT_LE(r.lhs, std::sqrt(T) * r.rhs * 1.001);
  }
}

TEST(Kss, LeftSideGrowsWithHorizonRatioIsHomogeneous) {
  const auto a = kick(1.0, 1.0, 20.0);
  const auto b = kick(1.0, 3.0, 20.0);
  KssSource sa, sb;
  sa.impulse = a.states.front().ut;
  sb.impulse = b.states.front().ut;
  double prev = 0.0;
  for (double T : {5.0, 10.0, 20.0}) {
    for (auto v : {KssVariant::LogWeighted, KssVariant::SigmaWeighted}) {
      const auto ra = kss_ratio(a, sa, v, 0.5, T);
      const auto rb = kss_ratio(b, sb, v, 0.5, T);
      EXPECT_NEAR(rb.ratio, ra.ratio, 1e-10 * ra.ratio);
      EXPECT_NEAR(rb.lhs, 3.0 * ra.lhs, 1e-10 * rb.lhs);
    }
    const double l = kss_ratio(a, sa, KssVariant::SigmaWeighted, 0.5, T).lhs;
    EXPECT_GT(l, prev);
    prev = l;
  }
}

TEST(Kss, Errors) {
  const auto traj = kick(1.0, 1.0, 2.0);
  KssSource src;
  src.impulse = traj.states.front().ut;
  EXPECT_THROW(kss_ratio(traj, src, KssVariant::Waveguide, 0.5, 1.0), ValidationError);
  EXPECT_THROW(kss_ratio(traj, src, KssVariant::SigmaWeighted, 0.0, 1.0), ValidationError);
  EXPECT_THROW(kss_ratio(traj, src, KssVariant::LogWeighted, 0.5, 5.0), ValidationError);
  src.impulse.pop_back();
  EXPECT_THROW(kss_ratio(traj, src, KssVariant::LogWeighted, 0.5, 1.0), ValidationError);
  EXPECT_EQ(parse_kss_variant(to_string(KssVariant::WaveguideSigma)), KssVariant::WaveguideSigma);
  EXPECT_THROW(parse_kss_variant("nope"), ValidationError);
}

TEST(Kss, WaveguideHomogeneousForm) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const auto t1 = waveguide_run(b, 1.0);
  const auto t2 = waveguide_run(b, 2.0);
  for (auto v : {KssVariant::Waveguide, KssVariant::WaveguideSigma}) {
    const auto r1 = kss_ratio(t1, v, 0.5, 4.0);
    const auto r2 = kss_ratio(t2, v, 0.5, 4.0);
    EXPECT_GT(r1.lhs, 0.0);
    EXPECT_NEAR(r2.ratio, r1.ratio, 1e-10 * r1.ratio);
  }
}

TEST(GammaBudget, ClassEnumeration) {
  const GammaBudget def;
  const std::vector<std::array<int, 3>> want = {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0},
                                                {0, 0, 2}, {0, 1, 1}, {1, 0, 1}};
  EXPECT_EQ(def.classes(), want);
  GammaBudget flat{0, 0, 0, 0};
  EXPECT_EQ(flat.classes().size(), 1u);
  GammaBudget yonly{0, 0, 2, 2};
  EXPECT_EQ(yonly.classes().size(), 3u);
  for (GammaBudget bad : {GammaBudget{1, 2, 2, 3}, GammaBudget{2, 2, 2, 2}, GammaBudget{-1, 2, 2, 2}}) {
    EXPECT_THROW(bad.validate(), ValidationError);
  }
}

TEST(GammaNorm, HomogeneousAndZeroOnEqualIterates) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const auto t1 = waveguide_run(b, 1.0);
  const auto t2 = waveguide_run(b, 2.0);
  const GammaBudget budget;
  const double n1 = gamma_norm(t1, 4.0, budget);
  EXPECT_GT(n1, 0.0);
  EXPECT_NEAR(gamma_norm(t2, 4.0, budget), 2.0 * n1, 1e-10 * n1);
  // sup over t is monotone in T
  EXPECT_LE(gamma_norm(t1, 2.0, budget), n1);

  const auto [m, a] = iteration_norms(t1, t1, 4.0, budget);
  EXPECT_NEAR(m, n1, 1e-12 * n1);
  EXPECT_EQ(a, 0.0);
  const auto [m2, a2] = iteration_norms(t2, t1, 4.0, budget);
  EXPECT_NEAR(a2, n1, 1e-10 * n1);  // t2 - t1 = t1

  const auto d = difference(t2, t1);
  for (std::size_t k = 0; k < d.states.back().u.size(); ++k) {
    EXPECT_NEAR(d.states.back().u[k], t1.states.back().u[k], 1e-14);
  }
  const auto profile = gamma_profile(t1, 4.0, budget);
  ASSERT_EQ(profile.t.size(), profile.total.size());
  for (std::size_t k = 0; k < profile.t.size(); ++k) EXPECT_GE(profile.total[k], profile.energy[k]);
}

TEST(EnergyInequality, FreeManufacturedAndRejected) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const double k = kPi / 4.0;
  ManufacturedField wave;
  wave.w = [k](double t, double r, std::span<const double> y) {
    const double om = std::sqrt(k * k + 1.0);
    const double radial = r < 1e-8 ? 1.0 - (k * r) * (k * r) / 6.0 : std::sin(k * r) / (k * r);
    return std::cos(om * t) * radial * std::cos(y[0]);
  };
  EnergyInequalityOptions eo;
  eo.t_final = 5.0;
  eo.dt_sample = 0.25;
  const auto r0 = verify_energy_inequality({}, wave, 0.0, BoundaryCondition::Neumann, RadialGrid{3, 8.0, 0.1}, b, eo);
  EXPECT_TRUE(r0.pass) << r0.lhs << " " << r0.rhs;

  const RadialGrid g{3, 3.0, 0.05};
  ManufacturedField bump;
  bump.w = [](double t, double r, std::span<const double> y) {
    return polynomial_bump(r, 1.0, 8) * std::cos(t) * std::cos(y[0]);
  };
  CoefficientField diag;
  diag.d = 1;
  diag.eval = [](double, double, std::span<const double>, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[0] = o[4] = o[8] = 0.1;
  };
  EXPECT_TRUE(verify_energy_inequality(diag, bump, 0.0, BoundaryCondition::Neumann, g, b, eo).pass);

  CoefficientField big = diag;
  big.eval = [](double, double, std::span<const double>, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[0] = o[4] = o[8] = 0.3;
  };
  EXPECT_THROW(verify_energy_inequality(big, bump, 0.0, BoundaryCondition::Neumann, g, b, eo), ValidationError);

  CoefficientField mixed = diag;
  mixed.eval = [](double, double, std::span<const double>, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[2] = o[6] = 0.1;
  };
  EXPECT_THROW(verify_energy_inequality(mixed, bump, 0.0, BoundaryCondition::Neumann, g, b, eo),
               ConditionViolation);
  // the same field is admissible under Dirichlet conditions
  const auto db = interval_basis(BoundaryCondition::Dirichlet);
  ManufacturedField sine;
  sine.w = [](double t, double r, std::span<const double> y) {
    return polynomial_bump(r, 1.0, 8) * std::cos(t) * std::sin(y[0]);
  };
  EXPECT_TRUE(verify_energy_inequality(mixed, sine, 0.0, BoundaryCondition::Dirichlet, g, db, eo).pass);
}
