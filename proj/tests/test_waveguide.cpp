#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"
#include "wglab/waveguide.hpp"

using namespace wglab;

namespace {

constexpr double kPi = std::numbers::pi;

ModeBasis interval_basis(BoundaryCondition bc, int res = 16, int j = 4) {
  CrossSectionSpec s;
  s.bc = bc;
  s.resolution = res;
  return build_mode_basis(s, j);
}

DataProfile profile(std::function<double(double, double)> f, std::function<double(double, double)> g = {}) {
  DataProfile p;
  p.f = [f](double r, std::span<const double> y) { return f(r, y[0]); };
  if (g) p.g = [g](double r, std::span<const double> y) { return g(r, y[0]); };
  return p;
}

double bump(double r) { return polynomial_bump(r, 1.0, 8); }

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(CauchyData, SamplingAndValidation) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const RadialGrid g{3, 4.0, 0.1};
  const auto d = sample_data(profile([](double r, double y) { return bump(r) * std::cos(y); }), g, b, 1.0, 0.5);
  EXPECT_EQ(d.f.size(), static_cast<std::size_t>(g.size() * b.points()));
  EXPECT_NEAR(d.f[0], 0.5, 1e-15);  // r = 0, y = 0
  EXPECT_NO_THROW(d.validate(b));

  const auto wide = sample_data(profile([](double r, double) { return polynomial_bump(r, 2.0, 4); }), g, b, 1.0, 1.0);
  EXPECT_THROW(wide.validate(b), ValidationError);
  const auto rough =
      sample_data(profile([](double r, double y) { return bump(r) * std::cos(7.0 * y); }), g, b, 1.0, 1.0);
  EXPECT_THROW(rough.validate(b), ResolutionError);
  EXPECT_THROW(sample_data(DataProfile{}, g, b, 0.0, 1.0), ValidationError);
}

TEST(QuadraticForm, Builders) {
  const auto z = QuadraticForm::zero(3, 1);
  EXPECT_TRUE(z.is_zero());
  EXPECT_TRUE(z.is_semilinear());
  const auto g = QuadraticForm::gradsq(3, 1);
  EXPECT_FALSE(g.is_zero());
  EXPECT_TRUE(g.is_semilinear());
  EXPECT_EQ(g.r(2, 2), 1.0);
  EXPECT_EQ(g.r(1, 1), 0.0);  // no u_t^2
  auto q = z;
  q.a(0, 4, 0) = 1.0;
  EXPECT_FALSE(q.is_semilinear());
  q.quasi.pop_back();
  EXPECT_THROW(q.validate(), ValidationError);
}

TEST(ModewiseSolver, AgreesWithFullGridOracle) {
  CrossSectionSpec s;
  s.bc = BoundaryCondition::Neumann;
  s.resolution = 17;
  const auto b = build_mode_basis(s, 8);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 4.0, 0.05);
  const auto p = profile([](double r, double y) { return bump(r) * (1.0 + std::cos(y) + 0.5 * std::cos(2 * y)); },
                         [](double r, double y) { return bump(r) * std::cos(y); });
  const auto data = sample_data(p, grid, b, 1.0, 1.0);
  const LinearOptions lo{0.005, 4.0, 1.0};
  const auto mw = solve_linear_modewise(data, 0.0, b, lo);
  const auto full = solve_full_grid(p, 1.0, grid, s, 129, 0.0, lo);
  ASSERT_EQ(full.size(), mw.states.size());
  const int nr = grid.size(), stride = 8;
  for (std::size_t k = 0; k < full.size(); ++k) {
    const auto u = mw.states[k].physical(b);
    std::vector<double> sub(u.size());
    for (int q = 0; q < b.points(); ++q) {
      for (int i = 0; i < nr; ++i) sub[q * nr + i] = full[k].u[(q * stride) * nr + i];
    }
    EXPECT_LT(rel_diff(u, sub), 1e-3) << "t=" << full[k].t;
  }
}

TEST(ModewiseSolver, ModesDoNotMix) {
  const auto b = interval_basis(BoundaryCondition::Dirichlet);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 3.0, 0.05);
  const auto data =
      sample_data(profile([](double r, double y) { return bump(r) * std::sin(2.0 * y); }), grid, b, 1.0, 1.0);
  const auto tr = solve_linear_modewise(data, 0.5, b, {0.025, 3.0, 1.0});
  const int nr = grid.size();
  for (const auto& s : tr.states) {
    for (int j = 0; j < b.size(); ++j) {
      if (j == 1) continue;
      for (int i = 0; i < nr; ++i) EXPECT_LT(std::abs(s.u[j * nr + i]), 1e-12);
    }
  }
  EXPECT_NEAR(tr.mode_mass(1), std::sqrt(0.25 + 4.0), 1e-14);
}

TEST(ModewiseSolver, EachModeIsARadialKleinGordonSolution) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 3.0, 0.05);
  const auto data =
      sample_data(profile([](double r, double y) { return bump(r) * std::cos(y); }), grid, b, 1.0, 1.0);
  const auto tr = solve_linear_modewise(data, 0.0, b, {0.025, 3.0, 3.0});
  // mode 1 of the data is sqrt(pi / 2) bump(r); evolve it directly with mass 1
  KGState s;
  s.mu = 1.0;
  for (int i = 0; i < grid.size(); ++i) {
    s.u.push_back(std::sqrt(kPi / 2.0) * bump(grid.r(i)));
    s.ut.push_back(0.0);
  }
  EvolveOptions o;
  o.dt = 0.025;
  o.t_final = 3.0;
  o.stepper = Stepper::Leapfrog;
  const auto kg = evolve_kg(grid, s, o);
  const int nr = grid.size();
  for (int i = 0; i < nr; ++i) EXPECT_NEAR(tr.states.back().u[nr + i], kg.states.back().u[i], 1e-10);
}

TEST(NonlinearSolver, ZeroFormConvergesToLinearSolution) {
  // RK4 and leapfrog share the spatial operator, so they differ only by the O(dt^2) leapfrog error
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 3.0, 0.05);
  const auto data = sample_data(profile([](double r, double y) { return bump(r) * (1.0 + std::cos(y)); }), grid,
                                b, 1.0, 1.0);
  auto gap = [&](double dt) {
    NonlinearOptions no;
    no.dt = dt;
    no.t_final = 3.0;
    no.output_interval = 3.0;
    const auto nl = solve_nonlinear(data, QuadraticForm::zero(3, 1), b, 0.0, no);
    const auto lin = solve_linear_modewise(data, 0.0, b, {dt, 3.0, 3.0});
    EXPECT_FALSE(nl.blowup.has_value());
    return rel_diff(nl.trajectory.states.back().u, lin.states.back().u);
  };
  const double g1 = gap(0.0125), g2 = gap(0.00625);
  EXPECT_LT(g1, 1e-2);
  EXPECT_NEAR(g1 / g2, 4.0, 0.2);
}

TEST(NonlinearSolver, QuadraticCorrectionScalesLikeEpsilonSquared) {
  // u_eps - eps u_lin = O(eps^2) for a quadratic nonlinearity
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 2.0, 0.05);
  const auto p = profile([](double r, double y) { return bump(r) * (1.0 + 0.5 * std::cos(y)); });
  NonlinearOptions no;
  no.dt = 0.0125;
  no.t_final = 2.0;
  auto defect = [&](double eps) {
    const auto data = sample_data(p, grid, b, 1.0, eps);
    const auto nl = solve_nonlinear(data, QuadraticForm::gradsq(3, 1), b, 0.0, no);
    const auto lin = solve_nonlinear(data, QuadraticForm::zero(3, 1), b, 0.0, no);
    double s = 0.0;
    const auto& a = nl.trajectory.states.back().u;
    const auto& c = lin.trajectory.states.back().u;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - c[k]) * (a[k] - c[k]);
    return std::sqrt(s);
  };
  const double d1 = defect(0.02), d2 = defect(0.01);
  EXPECT_NEAR(d1 / d2, 4.0, 0.2);
}

TEST(NonlinearSolver, DetectsBlowupOfLargeZeroModeData) {
  const auto b = interval_basis(BoundaryCondition::Neumann, 8, 4);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 20.0, 0.025);
  const auto data =
      sample_data(profile([](double r, double) { return 4.0 * polynomial_bump(r, 1.0, 2); }), grid, b, 1.0, 1.0);
  NonlinearOptions no;
  no.dt = 0.0125;
  no.t_final = 20.0;
  const auto res = solve_nonlinear(data, QuadraticForm::gradsq(3, 1), b, 0.0, no);
  ASSERT_TRUE(res.blowup.has_value());
  EXPECT_GT(res.blowup->time, 0.0);
  EXPECT_LT(res.blowup->time, 20.0);
  EXPECT_TRUE(std::isfinite(res.threshold));
}

TEST(NonlinearSolver, RejectsQuasilinearFormsAndBadSteps) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 1.0, 0.05);
  const auto data = sample_data(profile([](double r, double) { return bump(r); }), grid, b, 1.0, 0.1);
  NonlinearOptions no;
  no.dt = 0.0125;
  no.t_final = 1.0;
  auto q = QuadraticForm::zero(3, 1);
  q.a(0, 0, 1) = 1.0;
  EXPECT_THROW(solve_nonlinear(data, q, b, 0.0, no), ValidationError);
  no.dt = 0.05;
  EXPECT_THROW(solve_nonlinear(data, QuadraticForm::gradsq(3, 1), b, 0.0, no), ConfigurationError);
}

TEST(NeumannCondition, ReferenceForms) {
  const auto b = interval_basis(BoundaryCondition::Neumann);
  const int t = 0, x1 = 1, y1 = 4;
  EXPECT_TRUE(check_neumann_condition(QuadraticForm::gradsq(3, 1), BoundaryCondition::Neumann, b).pass);

  auto away = QuadraticForm::zero(3, 1);
  away.a(t, t, y1) = 1.0;
  away.a(x1, x1, t) = 1.0;
  away.b(t, x1) = 1.0;
  EXPECT_TRUE(check_neumann_condition(away, BoundaryCondition::Neumann, b).pass);

  auto mixed = QuadraticForm::zero(3, 1);
  mixed.a(t, y1, t) = 1.0;  // d_t u d_t d_y u
  const auto rep = check_neumann_condition(mixed, BoundaryCondition::Neumann, b);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.witness.empty());
  EXPECT_TRUE(check_neumann_condition(mixed, BoundaryCondition::Dirichlet, b).pass);

  auto literal = QuadraticForm::zero(3, 1);
  literal.a(y1, y1, t) = 1.0;  // d_t u d_y^2 u
  EXPECT_TRUE(check_neumann_condition(literal, BoundaryCondition::Neumann, b).pass);
}

TEST(NeumannCondition, RectangleChecksBothNormals) {
  CrossSectionSpec s;
  s.shape = Rectangle{1.0, 2.0};
  s.bc = BoundaryCondition::Neumann;
  s.resolution = 8;
  const auto b = build_mode_basis(s, 4);
  auto q = QuadraticForm::zero(3, 2);
  q.a(0, 5, 0) = 1.0;  // d_t u d_t d_{y_2} u: fails where y_2 is normal
  EXPECT_FALSE(check_neumann_condition(q, BoundaryCondition::Neumann, b).pass);
  EXPECT_TRUE(check_neumann_condition(QuadraticForm::gradsq(3, 2), BoundaryCondition::Neumann, b).pass);
}

TEST(Compatibility, ReferenceVerdicts) {
  const RadialGrid g{3, 3.0, 0.05};
  const auto dir = interval_basis(BoundaryCondition::Dirichlet);
  const auto neu = interval_basis(BoundaryCondition::Neumann);
  const auto zero = QuadraticForm::zero(3, 1);

  auto inner = [](double y) {
    if (y <= 0.8 || y >= 2.3) return 0.0;
    const double s = (y - 0.8) / 1.5;
    return std::exp(4.0 - 1.0 / (s * (1.0 - s)));
  };
  const auto a = sample_data(profile([&](double r, double y) { return bump(r) * inner(y); },
                                     [&](double r, double y) { return bump(r) * inner(y); }),
                             g, dir, 1.0, 1.0);
  const auto ra = check_compatibility(a, BoundaryCondition::Dirichlet, 0.0, zero, 2, dir);
  EXPECT_TRUE(ra.all_pass());

  const auto s = sample_data(profile([](double r, double y) { return bump(r) * std::sin(y); }), g, dir, 1.0, 1.0);
  const auto rs = check_compatibility(s, BoundaryCondition::Dirichlet, 1.0, zero, 2, dir);
  EXPECT_TRUE(rs.all_pass());
  ASSERT_EQ(rs.residual.size(), 3u);

  const auto l = sample_data(profile([](double r, double y) { return bump(r) * y; }), g, neu, 1.0, 1.0);
  const auto rl = check_compatibility(l, BoundaryCondition::Neumann, 0.0, zero, 0, neu);
  EXPECT_FALSE(rl.all_pass());
  EXPECT_GT(rl.residual[0], 0.5);

  // a constant is not Dirichlet compatible at order 0
  const auto c = sample_data(profile([](double r, double) { return bump(r); }), g, dir, 1.0, 1.0);
  EXPECT_FALSE(check_compatibility(c, BoundaryCondition::Dirichlet, 0.0, zero, 0, dir).all_pass());
  EXPECT_THROW(check_compatibility(c, BoundaryCondition::Dirichlet, 0.0, zero, 3, dir), ValidationError);
}

TEST(Cutoff, ProfileAndDerivatives) {
  const Cutoff eta{1.0};
  EXPECT_EQ(eta.value(2.0), 1.0);
  EXPECT_EQ(eta.value(2.5), 1.0);
  EXPECT_EQ(eta.value(3.0), 0.0);
  EXPECT_EQ(eta.d1(2.2), 0.0);
  const double h = 1e-5;
  for (double t : {2.6, 2.75, 2.9}) {
    EXPECT_GT(eta.value(t), 0.0);
    EXPECT_LT(eta.value(t), 1.0);
    EXPECT_NEAR(eta.d1(t), (eta.value(t + h) - eta.value(t - h)) / (2 * h), 1e-6);
    EXPECT_NEAR(eta.d2(t), (eta.d1(t + h) - eta.d1(t - h)) / (2 * h), 1e-4);
  }
}

TEST(Reduction, SmallDirichletResidualAndCutoff) {
  const auto b = interval_basis(BoundaryCondition::Dirichlet, 8, 4);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 4.0, 0.05);
  const auto data = sample_data(profile([](double r, double y) { return bump(r) * std::sin(y); }), grid, b, 1.0,
                                0.05, 2.0);
  const auto red = reduce_to_zero_data(data, QuadraticForm::gradsq(3, 1), b, 0.0, 0.0125);
  EXPECT_TRUE(red.residual.pass) << red.residual.lhs << " vs " << red.residual.rhs;
  EXPECT_LT(red.residual.lhs, 10.0 * 0.05 * 0.05);

  std::vector<double> u0(static_cast<std::size_t>(b.size() * grid.size())), u0t(u0.size());
  cutoff_solution(red, 3.5, u0, u0t);
  EXPECT_EQ(*std::max_element(u0.begin(), u0.end()), 0.0);
  cutoff_solution(red, 2.0, u0, u0t);
  // at the data time u0 is the data itself
  std::vector<double> column(static_cast<std::size_t>(b.points()));
  for (int q = 0; q < b.points(); ++q) column[q] = 0.05 * std::sin(b.coordinates(0)[q]);
  EXPECT_NEAR(u0[4], b.project(column)[0] * bump(grid.r(4)), 1e-10);  // r = 0 is extrapolated

  const auto early = sample_data(profile([](double r, double y) { return bump(r) * std::sin(y); }), grid, b, 1.0,
                                 0.05, 0.0);
  EXPECT_THROW(reduce_to_zero_data(early, QuadraticForm::gradsq(3, 1), b, 0.0, 0.0125), ValidationError);
}

TEST(Lifespan, SweepValidation) {
  const auto b = interval_basis(BoundaryCondition::Neumann, 8, 4);
  DataFactory f = [&](double eps, const RadialGrid& g) {
    return sample_data(profile([](double r, double) { return polynomial_bump(r, 1.0, 2); }), g, b, 1.0, eps, 2.0);
  };
  LifespanOptions o;
  o.solver.dt = 0.025;
  o.horizon = 2.0;
  o.refine = false;
  const auto q = QuadraticForm::gradsq(3, 1);
  EXPECT_THROW(lifespan_sweep({0.3, 0.2, 0.1}, q, b, 0.0, 0.05, f, o), ValidationError);
  EXPECT_THROW(lifespan_sweep({0.3, 0.4, 0.2, 0.1}, q, b, 0.0, 0.05, f, o), ValidationError);
  // tiny data never blow up on a short horizon: every row censored
  const auto res = lifespan_sweep({0.04, 0.03, 0.02, 0.01}, q, b, 0.0, 0.05, f, o, false);
  EXPECT_EQ(res.blowups, 0);
  EXPECT_FALSE(res.fit.pass);
  for (const auto& r : res.rows) EXPECT_TRUE(r.censored);
  EXPECT_THROW(lifespan_sweep({0.04, 0.03, 0.02, 0.01}, q, b, 0.0, 0.05, f, o, true), ValidationError);
}

TEST(Lifespan, LargerDataBlowUpSooner) {
  const auto b = interval_basis(BoundaryCondition::Neumann, 8, 4);
  DataFactory f = [&](double eps, const RadialGrid& g) {
    return sample_data(profile([](double r, double) { return 2.5 * polynomial_bump(r, 1.0, 2); }), g, b, 1.0, eps,
                       2.0);
  };
  LifespanOptions o;
  o.solver.dt = 0.0125;
  o.horizon = 15.0;
  o.refine = false;
  const auto res = lifespan_sweep({1.2, 1.0, 0.9, 0.8}, QuadraticForm::gradsq(3, 1), b, 0.0, 0.025, f, o, false);
  EXPECT_EQ(res.blowups, 4);
  for (std::size_t k = 1; k < res.rows.size(); ++k) EXPECT_GT(res.rows[k].t_star, res.rows[k - 1].t_star);
  ASSERT_TRUE(res.fit.slope.has_value());
  EXPECT_GT(*res.fit.slope, 0.0);
}
