#include "wglab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "wglab/errors.hpp"
#include "wglab/iteration.hpp"
#include "wglab/norms.hpp"
#include "wglab/numerics.hpp"
#include "wglab/radial.hpp"
#include "wglab/vector_fields.hpp"
#include "wglab/waveguide.hpp"

namespace wglab {

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> catalog = {
      {"eigen", "cross-section spectra, orthonormality, Plancherel and Weyl growth"},
      {"decouple", "mode-wise solve against the full (r, y) grid oracle"},
      {"decay", "radial Klein-Gordon sup-norm decay rates across masses"},
      {"kss", "mass-uniform weighted space-time (KSS) ratios over a horizon ladder"},
      {"ks-sobolev", "Klainerman-Sobolev ratios and vector-field commutator table"},
      {"energy", "energy conservation, Plancherel, Poincare and the energy inequality"},
      {"check-q", "nonlinear Neumann condition checker on reference forms"},
      {"compat", "compatibility conditions of Cauchy data up to order 2"},
      {"lifespan", "blowup times against 1/epsilon, Neumann ladder and Dirichlet control"},
      {"iterate", "Picard iteration norms M_k, A_k and contraction"},
  };
  return catalog;
}

bool ExperimentOutput::all_pass() const {
  return std::all_of(reports.begin(), reports.end(), [](const EstimateReport& r) { return r.pass; });
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

BasisBackend backend_of(const ExperimentConfig& c) {
  return c.backend == "fd" ? BasisBackend::FiniteDifference : BasisBackend::ClosedForm;
}

ModeBasis basis_of(const ExperimentConfig& c) { return build_mode_basis(c.cross_section(), c.j_max, backend_of(c)); }

EstimateReport bound_report(std::string name, double lhs, double rhs) {
  EstimateReport r;
  r.name = std::move(name);
  r.set_sides(lhs, rhs);
  r.tolerance = rhs;
  r.pass = !r.degenerate && lhs <= rhs;
  return r;
}

EstimateReport verdict_report(std::string name, bool expected, bool actual, double worst) {
  EstimateReport r;
  r.name = std::move(name);
  r.lhs = worst;
  r.add_param("expected_pass", expected ? 1.0 : 0.0);
  r.add_param("actual_pass", actual ? 1.0 : 0.0);
  r.pass = expected == actual;
  return r;
}

constexpr double kRotationLeak = 0.05;

double spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0.0 ? *hi / *lo : INFINITY;
}

// Smooth bump supported in [a, b] (used for data vanishing near the boundary).
double interval_bump(double y, double a, double b) {
  if (y <= a || y >= b) return 0.0;
  const double s = (y - a) / (b - a);
  return std::exp(-1.0 / (s * (1.0 - s)) + 4.0);
}

// ---------------------------------------------------------------------------

ExperimentOutput run_eigen(const ExperimentConfig& c) {
  ExperimentOutput out;
  const CrossSectionSpec spec = c.cross_section();
  const ModeBasis closed = build_mode_basis(spec, c.j_max, BasisBackend::ClosedForm);
  const ModeBasis fd = build_mode_basis(spec, c.j_max, BasisBackend::FiniteDifference);
  const double hy = spec.lengths()[0] / (spec.resolution - 1);

  CsvTable t({"j", "a", "b", "lambda", "lambda_fd", "relative_gap", "gap_bound"});
  double worst = 0.0;
  for (int j = 0; j < closed.size(); ++j) {
    const auto [a, b] = closed.labels(j);
    const double l = closed.lambda(j), lf = fd.lambda(j);
    const double gap = l > 0.0 ? std::abs(lf - l) / l : std::abs(lf - l);
    const double bound = std::max((l * hy) * (l * hy) / 12.0, 1e-12);
    worst = std::max(worst, gap / bound);
    t.add_row({static_cast<long long>(j + 1), static_cast<long long>(a), static_cast<long long>(b), l, lf, gap, bound});
  }
  out.tables.emplace_back("eigen", std::move(t));

  auto g1 = bound_report("gram_closed_form", closed.gram_deviation(), 1e-8);
  auto g2 = bound_report("gram_finite_difference", fd.gram_deviation(), 1e-6);
  auto gap = bound_report("fd_eigenvalue_gap", worst, 1.0);
  gap.note = "max over j of the relative FD gap divided by (lambda h)^2 / 12";
  out.reports.push_back(g1);
  out.reports.push_back(g2);
  out.reports.push_back(gap);

  // Plancherel on a random band-limited field.
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal;
  std::vector<double> coeffs(static_cast<std::size_t>(closed.size()));
  for (auto& v : coeffs) v = normal(rng);
  const auto field = closed.reconstruct(coeffs);
  const auto back = closed.project(field);
  double s2 = 0.0;
  for (double v : back) s2 += v * v;
  const double q2 = closed.inner(field, field);
  auto pl = bound_report("plancherel", std::abs(s2 - q2) / q2, 1e-8);
  pl.add_param("seed", static_cast<double>(c.seed));
  out.reports.push_back(pl);

  if (closed.size() >= 20) out.reports.push_back(weyl_check(closed, spec.dimension()));
  return out;
}

// ---------------------------------------------------------------------------

DataProfile mixed_mode_profile(double amp) {
  DataProfile p;
  p.f = [amp](double r, std::span<const double> y) {
    return amp * polynomial_bump(r, 1.0, 8) * (1.0 + std::cos(y[0]) + 0.5 * std::cos(2.0 * y[0]));
  };
  p.g = [amp](double r, std::span<const double> y) {
    return amp * polynomial_bump(r, 1.0, 8) * 0.5 * std::cos(y[0]);
  };
  return p;
}

ExperimentOutput run_decouple(const ExperimentConfig& c) {
  ExperimentOutput out;

  const auto t0 = Clock::now();
  const ModeBasis basis = basis_of(c);
  const RadialGrid grid = RadialGrid::for_horizon(3, c.support, c.horizon, c.h);
  const DataProfile prof = mixed_mode_profile(c.amplitude);
  const CauchyData data = sample_data(prof, grid, basis, c.support, 1.0);
  LinearOptions lo{c.dt, c.horizon, c.output_interval};
  const auto modewise = solve_linear_modewise(data, c.m, basis, lo);
  const auto full = solve_full_grid(prof, 1.0, grid, c.cross_section(), c.y_points, c.m, lo);

  RadialOperator op(grid);
  const int nr = grid.size();
  const int stride = (c.y_points - 1) / (c.resolution - 1);
  const auto w = basis.weights();
  CsvTable t({"t", "relative_l2"});
  double final_err = 0.0, worst = 0.0;
  for (const auto& snap : full) {
    const WaveguideField* match = nullptr;
    for (const auto& s : modewise.states) {
      if (std::abs(s.t - snap.t) < 1e-9) match = &s;
    }
    if (!match) continue;
    const auto u = match->physical(basis);
    CompensatedSum num, den;
    for (int q = 0; q < basis.points(); ++q) {
      for (int i = 0; i < nr; ++i) {
        const double a = u[static_cast<std::size_t>(q) * nr + i];
        const double b = snap.u[static_cast<std::size_t>(q * stride) * nr + i];
        num.add(w[q] * op.quadrature_weight(i) * (a - b) * (a - b));
        den.add(w[q] * op.quadrature_weight(i) * b * b);
      }
    }
    final_err = std::sqrt(num.value() / den.value());
    worst = std::max(worst, final_err);
    t.add_row({snap.t, final_err});
  }
  out.tables.emplace_back("decouple", std::move(t));
  auto r = bound_report("decoupling", final_err, 1e-3);
  r.add_param("T", c.horizon);
  r.add_param("max_over_time", worst);
  r.add_param("seconds", seconds_since(t0));
  out.reports.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------

KGTrajectory kick_run(int n, double mu, double amp, double support, double horizon, double h, double dt,
                      double output_interval) {
  const RadialGrid grid = RadialGrid::for_horizon(n, support, horizon, h);
  KGState s;
  s.mu = mu;
  s.u.assign(static_cast<std::size_t>(grid.size()), 0.0);
  s.ut.resize(s.u.size());
  for (int i = 0; i < grid.size(); ++i) s.ut[i] = amp * polynomial_bump(grid.r(i), support, 8);
  s.ut.back() = 0.0;
  EvolveOptions o;
  o.dt = dt;
  o.t_final = horizon;
  o.output_interval = output_interval;
  o.stepper = Stepper::Leapfrog;
  return evolve_kg(grid, s, o);
}

ExperimentOutput run_decay(const ExperimentConfig& c) {
  ExperimentOutput out;
  const double p = decay_exponent(c.n);
  const double tol = c.n == 3 ? 0.15 : 0.2;
  CsvTable t({"mu", "t", "sup_u", "weighted_sup"});
  std::vector<double> weighted;
  for (double mu : c.mus) {
    const auto traj = kick_run(c.n, mu, c.amplitude, c.support, c.horizon, c.h, c.dt, c.output_interval);
    for (const auto& s : traj.states) {
      if (s.t <= 0.0) continue;
      double sup = 0.0;
      for (double v : s.u) sup = std::max(sup, std::abs(v));
      t.add_row({mu, s.t, sup, std::pow(s.t, p) * sup});
    }
    auto r = measure_decay(traj, c.fit_begin, c.fit_end, tol, c.amplitude);
    r.name = fmt::format("decay_n{}_mu{}", c.n, mu);
    r.add_param("n", c.n);
    weighted.push_back(r.lhs);
    out.reports.push_back(r);
  }
  out.tables.emplace_back("decay", std::move(t));
  if (weighted.size() >= 2) {
    auto r = bound_report(fmt::format("decay_mass_uniformity_n{}", c.n), spread(weighted), 3.0);
    r.note = "max / min of the weighted sup over the mass sweep";
    out.reports.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_kss(const ExperimentConfig& c) {
  ExperimentOutput out;
  const double tmax = *std::max_element(c.horizons.begin(), c.horizons.end());
  CsvTable t({"variant", "mu", "T", "lhs", "rhs", "ratio"});
  std::vector<double> sigma_ratios;
  double worst_log = 0.0;
  for (double mu : c.mus) {
    const auto traj = kick_run(c.n, mu, c.amplitude, c.support, tmax, c.h, c.dt, c.output_interval);
    KssSource src;
    src.impulse = traj.states.front().ut;
    std::vector<double> log_ratios;
    for (double T : c.horizons) {
      for (auto v : {KssVariant::LogWeighted, KssVariant::SigmaWeighted}) {
        auto r = kss_ratio(traj, src, v, c.sigma, T);
        t.add_row({to_string(v), mu, T, r.lhs, r.rhs, r.ratio});
        if (v == KssVariant::SigmaWeighted) {
          sigma_ratios.push_back(r.ratio);
        } else {
          log_ratios.push_back(r.ratio);
        }
        out.reports.push_back(r);
      }
    }
    worst_log = std::max(worst_log, spread(log_ratios));
  }
  out.tables.emplace_back("kss", std::move(t));
  auto s = bound_report("kss_sigma_spread", spread(sigma_ratios), 3.0);
  s.note = "max / min of the sigma-weighted ratio over all masses and horizons";
  s.add_param("sigma", c.sigma);
  out.reports.push_back(s);
  auto l = bound_report("kss_log_spread", worst_log, 2.0);
  l.note = "worst over masses of max / min of ratio / sqrt(log(2 + T)) across the horizon ladder";
  out.reports.push_back(l);
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_ks_sobolev(const ExperimentConfig& c) {
  ExperimentOutput out;
  CsvTable t({"R", "spacing", "lhs", "rhs", "ratio", "rotation_terms"});
  std::vector<double> ratios;
  const int half = 38;
  for (double R : c.radii) {
    const double spacing = (R + 1.0) / (half - 3);
    auto gauss = [](std::span<const double> x) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return std::exp(-r2 / 200.0);
    };
    const auto sample = SpacetimeSample::centred(false, 3, 0, spacing, half, gauss);
    auto r = klainerman_sobolev_ratio(sample, R);
    r.name = fmt::format("klainerman_sobolev_R{}", R);
    const double rot = r.param("rotation_terms").value_or(0.0);
    t.add_row({R, spacing, r.lhs, r.rhs, r.ratio, rot});
    ratios.push_back(r.ratio);
    out.reports.push_back(r);
    // Exact zero in the continuum; on the lattice only the O(h^2) stencil error survives.
    auto z = bound_report(fmt::format("ks_rotations_vanish_R{}", R), rot, kRotationLeak * spacing * spacing * r.rhs);
    out.reports.push_back(z);
  }
  out.tables.emplace_back("ks_sobolev", std::move(t));
  if (ratios.size() >= 2) out.reports.push_back(bound_report("ks_ratio_spread", spread(ratios), 2.0));

  // Commutator table on a (t, x, y) Gaussian.
  CsvTable ct({"field", "mu", "residual", "tolerance", "naive_residual"});
  const double hs = 0.2;
  auto g = [](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::exp(-r2);
  };
  const auto s = SpacetimeSample::centred(true, 3, 1, hs, 6, g);
  const double tol = stencil_tolerance(s);
  auto fields = commuting_fields(3, 1);
  fields.push_back(VectorFieldId::scaling());
  for (double mu : c.mus) {
    for (const auto& id : fields) {
      const double res = commutator_residual(id, mu, s);
      const double naive = naive_commutator_residual(id, mu, s);
      ct.add_row({id.name(), mu, res, tol, naive});
      auto r = bound_report(fmt::format("commutator_{}_mu{}", id.name(), mu), res, tol);
      r.add_param("naive", naive);
      out.reports.push_back(r);
    }
  }
  out.tables.emplace_back("commutators", std::move(ct));
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_energy(const ExperimentConfig& c) {
  ExperimentOutput out;
  // Discrete energy of the linear leapfrog run.
  {
    const auto traj = kick_run(3, 1.0, c.amplitude, c.support, c.horizon, c.h, c.dt, c.output_interval);
    CsvTable t({"t", "energy", "invariant"});
    const double i0 = leapfrog_invariant(traj.grid, traj.states.front(), traj.dt);
    double drift = 0.0;
    for (const auto& s : traj.states) {
      const double inv = leapfrog_invariant(traj.grid, s, traj.dt);
      drift = std::max(drift, std::abs(inv - i0) / i0);
      t.add_row({s.t, energy(s, traj.grid), inv});
    }
    out.tables.emplace_back("energy", std::move(t));
    auto r = bound_report("energy_drift", drift, 1e-6);
    r.add_param("T", c.horizon);
    out.reports.push_back(r);
  }
  // Plancherel: mode energy against physical quadrature.
  {
    const ModeBasis basis = basis_of(c);
    const RadialGrid grid = RadialGrid::for_horizon(3, c.support, 10.0, c.h);
    const CauchyData data = sample_data(mixed_mode_profile(c.amplitude), grid, basis, c.support, 1.0);
    const auto traj = solve_linear_modewise(data, c.m, basis, {c.dt, 10.0, 1.0});
    double worst = 0.0;
    CsvTable t({"t", "mode_energy", "physical_energy"});
    for (const auto& s : traj.states) {
      const double em = energy(s, grid, basis, c.m);
      const double ep = energy_physical(s, grid, basis, c.m);
      worst = std::max(worst, std::abs(em - ep) / em);
      t.add_row({s.t, em, ep});
    }
    out.tables.emplace_back("plancherel", std::move(t));
    out.reports.push_back(bound_report("plancherel_energy", worst, 1e-8));
  }
  // Poincare bound on a Dirichlet run.
  {
    CrossSectionSpec spec = c.cross_section();
    spec.bc = BoundaryCondition::Dirichlet;
    const ModeBasis basis = build_mode_basis(spec, c.j_max, backend_of(c));
    const RadialGrid grid = RadialGrid::for_horizon(3, c.support, 5.0, c.h);
    DataProfile p;
    p.f = [amp = c.amplitude](double r, std::span<const double> y) {
      return amp * polynomial_bump(r, 1.0, 8) * (std::sin(y[0]) + 0.3 * std::sin(3.0 * y[0]));
    };
    const CauchyData data = sample_data(p, grid, basis, c.support, 1.0);
    const auto traj = solve_linear_modewise(data, c.m, basis, {c.dt, 5.0, 1.0});
    EstimateReport worst;
    double best = -1.0;
    for (const auto& s : traj.states) {
      auto r = poincare_check(s, grid, basis);
      if (r.ratio > best) {
        best = r.ratio;
        worst = r;
      }
    }
    out.reports.push_back(worst);
  }
  // Energy inequality: trivial, manufactured and rejected coefficient fields.
  {
    CrossSectionSpec spec;
    spec.bc = BoundaryCondition::Neumann;
    spec.resolution = 16;
    const ModeBasis basis = build_mode_basis(spec, 4, BasisBackend::ClosedForm);
    const double k = std::numbers::pi / 4.0;
    const RadialGrid standing{3, 8.0, 0.1};
    ManufacturedField wave;
    wave.w = [k](double t, double r, std::span<const double> y) {
      const double om = std::sqrt(k * k + 1.0);
      const double radial = r < 1e-8 ? 1.0 - (k * r) * (k * r) / 6.0 : std::sin(k * r) / (k * r);
      return std::cos(om * t) * radial * std::cos(y[0]);
    };
    EnergyInequalityOptions eo;
    eo.t_final = 5.0;
    eo.dt_sample = 0.25;
    auto r0 = verify_energy_inequality({}, wave, 0.0, BoundaryCondition::Neumann, standing, basis, eo);
    r0.name = "energy_inequality_free";
    out.reports.push_back(r0);

    const RadialGrid g2{3, 3.0, 0.05};
    ManufacturedField bumpw;
    bumpw.w = [](double t, double r, std::span<const double> y) {
      return polynomial_bump(r, 1.0, 8) * std::cos(t) * std::cos(y[0]);
    };
    CoefficientField diag;
    diag.d = 1;
    diag.eval = [](double, double, std::span<const double>, std::span<double> o) {
      std::fill(o.begin(), o.end(), 0.0);
      o[0] = o[4] = o[8] = 0.1;
    };
    auto r1 = verify_energy_inequality(diag, bumpw, 0.0, BoundaryCondition::Neumann, g2, basis, eo);
    r1.name = "energy_inequality_manufactured";
    out.reports.push_back(r1);

    CoefficientField bad;
    bad.d = 1;
    bad.eval = [](double, double, std::span<const double>, std::span<double> o) {
      std::fill(o.begin(), o.end(), 0.0);
      o[2] = o[6] = 0.1;  // gamma^{ty} = gamma^{yt}
    };
    EstimateReport r2;
    r2.name = "energy_inequality_neumann_rejection";
    try {
      verify_energy_inequality(bad, bumpw, 0.0, BoundaryCondition::Neumann, g2, basis, eo);
      r2.pass = false;
      r2.note = "coefficient field was accepted";
    } catch (const ConditionViolation& e) {
      r2.pass = true;
      r2.note = e.witness();
    }
    out.reports.push_back(r2);
  }
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_check_q(const ExperimentConfig& c) {
  ExperimentOutput out;
  CrossSectionSpec spec = c.cross_section();
  spec.bc = BoundaryCondition::Neumann;
  const ModeBasis basis = build_mode_basis(spec, c.j_max, backend_of(c));
  const int n = c.n, d = spec.dimension();
  const int t = 0, x1 = 1, y1 = 1 + n;

  QuadraticForm away = QuadraticForm::zero(n, d);
  away.label = "no_y_second_derivatives";
  away.a(t, t, y1) = 1.0;   // d_y u d_t^2 u
  away.a(x1, x1, t) = 1.0;  // d_t u d_x^2 u
  away.b(t, x1) = 1.0;      // u d_t d_x u
  QuadraticForm grad = QuadraticForm::gradsq(n, d);
  QuadraticForm mixed = QuadraticForm::zero(n, d);
  mixed.label = "dt_u_dt_dy_u";
  mixed.a(t, y1, t) = 1.0;
  QuadraticForm literal = QuadraticForm::zero(n, d);
  literal.label = "dt_u_dyy_u";
  literal.a(y1, y1, t) = 1.0;

  struct Case {
    const QuadraticForm* q;
    BoundaryCondition bc;
    bool expected;
  };
  const std::vector<Case> cases = {{&away, BoundaryCondition::Neumann, true},
                                   {&grad, BoundaryCondition::Neumann, true},
                                   {&mixed, BoundaryCondition::Neumann, false},
                                   {&literal, BoundaryCondition::Neumann, true},
                                   {&mixed, BoundaryCondition::Dirichlet, true}};
  CsvTable tab({"form", "bc", "pass", "worst", "witness"});
  for (const auto& cs : cases) {
    const auto rep = check_neumann_condition(*cs.q, cs.bc, basis);
    tab.add_row({cs.q->label, to_string(cs.bc), rep.pass, rep.worst, rep.witness});
    auto r = verdict_report(fmt::format("neumann_condition_{}_{}", cs.q->label, to_string(cs.bc)), cs.expected,
                            rep.pass, rep.worst);
    r.note = rep.witness;
    out.reports.push_back(r);
  }
  out.tables.emplace_back("check_q", std::move(tab));
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_compat(const ExperimentConfig& c) {
  ExperimentOutput out;
  CsvTable tab({"case", "bc", "order", "residual", "pass"});
  const RadialGrid grid{3, 3.0, 0.05};
  auto run_case = [&](const std::string& label, BoundaryCondition bc, const DataProfile& p, int order,
                      const std::vector<bool>& expected) {
    CrossSectionSpec spec = c.cross_section();
    spec.bc = bc;
    const ModeBasis basis = build_mode_basis(spec, c.j_max, backend_of(c));
    const CauchyData data = sample_data(p, grid, basis, c.support, 1.0);
    const auto rep = check_compatibility(data, bc, c.m, QuadraticForm::zero(3, spec.dimension()), order, basis);
    bool match = true;
    for (int k = 0; k <= order; ++k) {
      tab.add_row({label, to_string(bc), static_cast<long long>(k), rep.residual[k], static_cast<bool>(rep.pass[k])});
      match = match && rep.pass[k] == expected[k];
    }
    EstimateReport r;
    r.name = "compatibility_" + label;
    r.lhs = *std::max_element(rep.residual.begin(), rep.residual.end());
    r.tolerance = rep.tolerance;
    r.pass = match;
    out.reports.push_back(r);
  };
  const double L = c.length;
  DataProfile interior;
  interior.f = [L](double r, std::span<const double> y) {
    return polynomial_bump(r, 1.0, 8) * interval_bump(y[0], 0.25 * L, 0.75 * L);
  };
  interior.g = interior.f;
  run_case("vanishing_near_boundary", BoundaryCondition::Dirichlet, interior, 2, {true, true, true});
  DataProfile sine;
  sine.f = [](double r, std::span<const double> y) { return polynomial_bump(r, 1.0, 8) * std::sin(y[0]); };
  run_case("sine_dirichlet", BoundaryCondition::Dirichlet, sine, 2, {true, true, true});
  DataProfile linear;
  linear.f = [](double r, std::span<const double> y) { return polynomial_bump(r, 1.0, 8) * y[0]; };
  run_case("linear_neumann", BoundaryCondition::Neumann, linear, 0, {false});
  out.tables.emplace_back("compat", std::move(tab));
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_lifespan(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto t0 = Clock::now();
  CsvTable tab({"bc", "epsilon", "t_star", "censored", "t_star_refined", "refined_censored", "relative_change"});
  const QuadraticForm q = QuadraticForm::gradsq(3, c.cross_section().dimension());
  LifespanOptions o;
  o.solver.dt = c.dt;
  o.horizon = c.horizon;

  auto sweep = [&](BoundaryCondition bc, bool refine) {
    CrossSectionSpec spec = c.cross_section();
    spec.bc = bc;
    const ModeBasis basis = build_mode_basis(spec, c.j_max, backend_of(c));
    DataProfile p;
    const double amp = c.amplitude;
    if (bc == BoundaryCondition::Neumann) {
      p.f = [amp](double r, std::span<const double>) { return amp * polynomial_bump(r, 1.0, 2); };
    } else {
      p.f = [amp](double r, std::span<const double> y) { return amp * polynomial_bump(r, 1.0, 2) * std::sin(y[0]); };
    }
    const double B = c.support;
    DataFactory factory = [p, &basis, B](double eps, const RadialGrid& g) {
      return sample_data(p, g, basis, B, eps, 2.0 * B);
    };
    LifespanOptions oo = o;
    oo.refine = refine;
    auto res = lifespan_sweep(c.epsilons, q, basis, c.m, c.h, factory, oo, false);
    for (const auto& r : res.rows) {
      tab.add_row({to_string(bc), r.epsilon, r.t_star, r.censored, r.t_star_refined, r.refined_censored,
                   r.relative_change});
    }
    return res;
  };
  const auto neu = sweep(BoundaryCondition::Neumann, true);
  auto fit = neu.fit;
  fit.name = "lifespan_fit";
  out.reports.push_back(fit);
  auto ref = bound_report("lifespan_refinement", neu.max_relative_change, 0.05);
  ref.note = "max relative change of uncensored T* under h/2, dt/2";
  out.reports.push_back(ref);
  const auto dir = sweep(BoundaryCondition::Dirichlet, false);
  EstimateReport ctrl;
  ctrl.name = "lifespan_dirichlet_control";
  ctrl.lhs = dir.blowups;
  ctrl.add_param("horizon", c.horizon);
  ctrl.pass = dir.blowups == 0;
  out.reports.push_back(ctrl);
  out.reports.back().add_param("seconds", seconds_since(t0));
  out.tables.emplace_back("lifespan", std::move(tab));
  return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_iterate(const ExperimentConfig& c) {
  ExperimentOutput out;
  CsvTable tab({"epsilon", "k", "M_k", "A_k", "ratio"});
  CrossSectionSpec spec = c.cross_section();
  const ModeBasis basis = build_mode_basis(spec, c.j_max, backend_of(c));
  for (double eps : c.epsilons) {
    IterationConfig ic;
    ic.k_max = c.k_max;
    ic.epsilon = eps;
    ic.horizon = c.horizon;
    ic.bc = c.bc;
    ic.q = QuadraticForm::gradsq(3, spec.dimension());
    ic.rho = c.rho;
    ic.m = c.m;
    ic.h = c.h;
    ic.dt = c.dt;
    ic.output_interval = c.output_interval;
    ic.budget = c.budget;
    const RadialGrid grid = RadialGrid::for_horizon(3, c.support, c.horizon, c.h);
    DataProfile p;
    const double amp = c.amplitude;
    p.f = [amp](double r, std::span<const double> y) {
      return amp * polynomial_bump(r, 1.0, 8) * (1.0 + 0.5 * std::cos(y[0]));
    };
    const CauchyData data = sample_data(p, grid, basis, c.support, eps, 2.0 * c.support);
    const auto res = picard_iterate(ic, data, basis);
    for (const auto& row : res.rows) {
      tab.add_row({eps, static_cast<long long>(row.k), row.m_k, row.a_k, row.ratio ? *row.ratio : NAN});
    }
    auto rr = res.reduction;
    rr.add_param("epsilon", eps);
    out.reports.push_back(rr);
    out.reports.push_back(res.report);
  }
  out.tables.emplace_back("iterate", std::move(tab));
  return out;
}

}  // namespace

ExperimentOutput execute(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string& e = cfg.experiment;
  if (e == "eigen") return run_eigen(cfg);
  if (e == "decouple") return run_decouple(cfg);
  if (e == "decay") return run_decay(cfg);
  if (e == "kss") return run_kss(cfg);
  if (e == "ks-sobolev") return run_ks_sobolev(cfg);
  if (e == "energy") return run_energy(cfg);
  if (e == "check-q") return run_check_q(cfg);
  if (e == "compat") return run_compat(cfg);
  if (e == "lifespan") return run_lifespan(cfg);
  if (e == "iterate") return run_iterate(cfg);
  throw ConfigurationError("unknown experiment '" + e + "'");
}

RunResult run(const ExperimentConfig& cfg) {
  RunResult rr;
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    rr.exit_code = kExitValidation;
    rr.message = e.what();
    return rr;
  }
  const std::filesystem::path dir = cfg.output_dir;
  const std::string config_text = serialize_config(cfg);
  ExperimentOutput out;
  std::string status = "pass";
  try {
    out = execute(cfg);
    rr.exit_code = out.all_pass() ? kExitPass : kExitTolerance;
    status = out.all_pass() ? "pass" : "tolerance-failure";
  } catch (const InstabilityError& e) {
    rr.exit_code = kExitInstability;
    rr.message = e.what();
    EstimateReport r;
    r.name = "instability";
    r.add_param("time", e.time());
    r.note = e.what();
    out.reports.push_back(r);
    status = "instability";
  } catch (const ValidationError& e) {
    rr.exit_code = kExitValidation;
    rr.message = e.what();
    return rr;
  }
  for (const auto& [stem, table] : out.tables) rr.files.push_back(write_text(dir, stem + ".csv", table.str()));
  rr.files.push_back(write_text(dir, "summary.json", summary_json(cfg.experiment, status, out.reports, rr.message)));
  rr.files.push_back(write_text(dir, "config.txt", config_text));
  write_text(dir, "manifest.json", manifest_json(cfg.experiment, config_text, rr.files));
  rr.files.push_back(dir / "manifest.json");
  rr.reports = std::move(out.reports);
  return rr;
}

}  // namespace wglab
