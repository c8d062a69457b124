#include "wglab/waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"

namespace wglab {

// ---------------------------------------------------------------------------
// Data and forms

void CauchyData::validate(const ModeBasis& basis) const {
  grid.validate();
  const int nr = grid.size();
  if (points != basis.points()) throw ValidationError("Cauchy data live on a different y-grid");
  const std::size_t total = static_cast<std::size_t>(nr) * static_cast<std::size_t>(points);
  if (f.size() != total || g.size() != total) throw ValidationError("Cauchy data size mismatch");
  for (int q = 0; q < points; ++q) {
    for (int i = 0; i < nr; ++i) {
      if (grid.r(i) <= support + 1e-12) continue;
      const std::size_t k = static_cast<std::size_t>(q) * nr + i;
      if (f[k] != 0.0 || g[k] != 0.0) {
        throw ValidationError("Cauchy data do not vanish for r > B = " + std::to_string(support));
      }
    }
  }
  // Band limitation: the data must be reproduced by the J retained modes.
  std::vector<double> modes(static_cast<std::size_t>(basis.size()) * nr), back(total);
  for (const auto* field : {&f, &g}) {
    basis.analyze(*field, modes, nr);
    basis.synthesize(modes, back, nr);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
      err = std::max(err, std::abs(back[k] - (*field)[k]));
      scale = std::max(scale, std::abs((*field)[k]));
    }
    if (err > 1e-8 * std::max(scale, 1e-300) && scale > 0.0) {
      throw ResolutionError("Cauchy data are not band-limited to the retained modes (residual " +
                            std::to_string(err / scale) + ")");
    }
  }
}

CauchyData sample_data(const DataProfile& profile, const RadialGrid& grid, const ModeBasis& basis, double support,
                       double epsilon, double t0) {
  if (!(support > 0.0)) throw ValidationError("support radius B must be positive");
  CauchyData d;
  d.grid = grid;
  d.points = basis.points();
  d.support = support;
  d.epsilon = epsilon;
  d.t0 = t0;
  d.profile = profile;
  const int nr = grid.size();
  d.f.assign(static_cast<std::size_t>(nr) * d.points, 0.0);
  d.g.assign(d.f.size(), 0.0);
  std::vector<double> y(static_cast<std::size_t>(basis.dimension()));
  for (int q = 0; q < d.points; ++q) {
    for (int a = 0; a < basis.dimension(); ++a) y[a] = basis.coordinates(a)[q];
    for (int i = 0; i < nr; ++i) {
      const std::size_t k = static_cast<std::size_t>(q) * nr + i;
      if (profile.f) d.f[k] = epsilon * profile.f(grid.r(i), y);
      if (profile.g) d.g[k] = epsilon * profile.g(grid.r(i), y);
    }
  }
  return d;
}

QuadraticForm QuadraticForm::zero(int n, int d) {
  QuadraticForm q;
  q.n = n;
  q.d = d;
  const int D = q.dim();
  q.quasi_l.assign(static_cast<std::size_t>(D * D * D), 0.0);
  q.quasi.assign(static_cast<std::size_t>(D * D), 0.0);
  q.semilinear.assign(static_cast<std::size_t>((D + 1) * (D + 1)), 0.0);
  q.label = "zero";
  return q;
}

QuadraticForm QuadraticForm::gradsq(int n, int d) {
  QuadraticForm q = zero(n, d);
  for (int i = 1; i <= n; ++i) q.set_semilinear(1 + i, 1 + i, 1.0);
  q.label = "gradsq";
  return q;
}

void QuadraticForm::set_semilinear(int p, int q, double v) {
  const int w = dim() + 1;
  semilinear[static_cast<std::size_t>(p * w + q)] = v;
  semilinear[static_cast<std::size_t>(q * w + p)] = v;
}

bool QuadraticForm::is_semilinear() const {
  return std::all_of(quasi_l.begin(), quasi_l.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(quasi.begin(), quasi.end(), [](double v) { return v == 0.0; });
}

bool QuadraticForm::is_zero() const {
  return is_semilinear() && std::all_of(semilinear.begin(), semilinear.end(), [](double v) { return v == 0.0; });
}

void QuadraticForm::validate() const {
  if (n < 1 || d < 1) throw ValidationError("quadratic form needs n >= 1 and d >= 1");
  const auto D = static_cast<std::size_t>(dim());
  if (quasi_l.size() != D * D * D || quasi.size() != D * D || semilinear.size() != (D + 1) * (D + 1)) {
    throw ValidationError("quadratic form coefficient arrays have the wrong size");
  }
  for (double v : quasi_l) {
    if (!std::isfinite(v)) throw ValidationError("non-finite quadratic form coefficient");
  }
}

std::vector<double> WaveguideField::physical(const ModeBasis& basis) const {
  std::vector<double> out(static_cast<std::size_t>(basis.points()) * columns);
  basis.synthesize(u, out, columns);
  return out;
}

std::vector<double> WaveguideField::physical_ut(const ModeBasis& basis) const {
  std::vector<double> out(static_cast<std::size_t>(basis.points()) * columns);
  basis.synthesize(ut, out, columns);
  return out;
}

double WaveguideTrajectory::mode_mass(int j) const {
  const double l = basis.lambda(j);
  return std::sqrt(m * m + l * l);
}

std::string to_string(BlowupTrigger t) { return t == BlowupTrigger::Threshold ? "threshold" : "nonfinite"; }

// ---------------------------------------------------------------------------
// Mode integrator

namespace detail {

ModeIntegrator::ModeIntegrator(const RadialGrid& grid, const ModeBasis& basis, double m) : op_(grid), basis_(basis) {
  if (!(m >= 0.0)) throw ValidationError("mass m must be nonnegative");
  for (int j = 0; j < basis.size(); ++j) mu2_.push_back(m * m + basis.lambda(j) * basis.lambda(j));
  const std::size_t total = static_cast<std::size_t>(basis.size()) * op_.size();
  lap_.resize(static_cast<std::size_t>(op_.size()));
  for (auto* v : {&k1p_, &k1v_, &k2p_, &k2v_, &k3p_, &k3v_, &k4p_, &k4v_, &tp_, &tv_}) v->resize(total);
}

void ModeIntegrator::acceleration(double t, std::span<const double> phi, std::span<const double> phit,
                                  std::span<double> acc, const ModeSource& source) const {
  const int nr = op_.size();
  std::fill(acc.begin(), acc.end(), 0.0);
  for (int j = 0; j < modes(); ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    op_.apply(phi.subspan(off, nr), lap_);
    const double mu2 = mu2_[static_cast<std::size_t>(j)];
    for (int i = op_.first_free(); i <= op_.last_free(); ++i) acc[off + i] = lap_[i] - mu2 * phi[off + i];
  }
  if (source) source(t, phi, phit, acc);
  for (int j = 0; j < modes(); ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    if (op_.first_free() == 1) acc[off] = 0.0;
    acc[off + nr - 1] = 0.0;
  }
}

void ModeIntegrator::rk4_step(double t, double dt, std::span<double> phi, std::span<double> phit,
                              const ModeSource& source) {
  const std::size_t n = phi.size();
  acceleration(t, phi, phit, k1v_, source);
  for (std::size_t i = 0; i < n; ++i) {
    k1p_[i] = phit[i];
    tp_[i] = phi[i] + 0.5 * dt * k1p_[i];
    tv_[i] = phit[i] + 0.5 * dt * k1v_[i];
  }
  acceleration(t + 0.5 * dt, tp_, tv_, k2v_, source);
  for (std::size_t i = 0; i < n; ++i) {
    k2p_[i] = tv_[i];
    tp_[i] = phi[i] + 0.5 * dt * k2p_[i];
    tv_[i] = phit[i] + 0.5 * dt * k2v_[i];
  }
  acceleration(t + 0.5 * dt, tp_, tv_, k3v_, source);
  for (std::size_t i = 0; i < n; ++i) {
    k3p_[i] = tv_[i];
    tp_[i] = phi[i] + dt * k3p_[i];
    tv_[i] = phit[i] + dt * k3v_[i];
  }
  acceleration(t + dt, tp_, tv_, k4v_, source);
  for (std::size_t i = 0; i < n; ++i) {
    k4p_[i] = tv_[i];
    phi[i] += dt / 6.0 * (k1p_[i] + 2.0 * k2p_[i] + 2.0 * k3p_[i] + k4p_[i]);
    phit[i] += dt / 6.0 * (k1v_[i] + 2.0 * k2v_[i] + 2.0 * k3v_[i] + k4v_[i]);
  }
}

void ModeIntegrator::to_working(std::span<const double> u, std::span<double> phi) const {
  const int nr = op_.size();
  for (int j = 0; j < modes(); ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    op_.to_working(u.subspan(off, nr), phi.subspan(off, nr));
  }
}

void ModeIntegrator::to_physical(std::span<const double> phi, std::span<double> u) const {
  const int nr = op_.size();
  for (int j = 0; j < modes(); ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    op_.to_physical(phi.subspan(off, nr), u.subspan(off, nr));
  }
}

void ModeIntegrator::radial_gradient(std::span<const double> u, std::span<double> ur) const {
  const int nr = op_.size();
  for (int j = 0; j < modes(); ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    op_.gradient(u.subspan(off, nr), ur.subspan(off, nr));
  }
}

NonlinearEvaluator::NonlinearEvaluator(const QuadraticForm& q, const ModeBasis& basis, const RadialOperator& op)
    : q_(q), basis_(basis), op_(op) {
  q.validate();
  if (!q.is_semilinear()) {
    throw ValidationError("quasilinear nonlinearities are checked algebraically but not evolved");
  }
  if (q.d != basis.dimension()) throw ValidationError("quadratic form and cross-section disagree on d");
  if (q.n != op.grid().n) throw ValidationError("quadratic form and radial grid disagree on n");
  // Radial symmetry needs the x-block of R to be isotropic and decoupled.
  const int D = q.dim();
  cx_ = q.r(2, 2);
  for (int a = 0; a <= D; ++a) {
    for (int b = 0; b <= D; ++b) {
      const bool ax = a >= 2 && a <= 1 + q.n, bx = b >= 2 && b <= 1 + q.n;
      const double v = q.r(a, b);
      if (ax && bx) {
        if (v != (a == b ? cx_ : 0.0)) throw ValidationError("x-block of R must be a multiple of the identity");
      } else if (ax || bx) {
        if (v != 0.0) throw ValidationError("R may not couple d_x u to other slots for radial fields");
      } else if (v != 0.0) {
        if (a == 0 || b == 0) uses_u_ = true;
        if (a == 1 || b == 1) uses_t_ = true;
        if (a > 1 + q.n || b > 1 + q.n) uses_y_ = true;
      }
    }
  }
  const std::size_t phys = static_cast<std::size_t>(basis.points()) * op.size();
  ur_modes_.resize(static_cast<std::size_t>(basis.size()) * op.size());
  uu_.resize(phys);
  ut_.resize(phys);
  ur_.resize(phys);
  qv_.resize(phys);
  if (uses_y_) uy_.assign(static_cast<std::size_t>(basis.dimension()), std::vector<double>(phys));
}

void NonlinearEvaluator::evaluate(std::span<const double> u, std::span<const double> ut, std::span<double> out) {
  const int nr = op_.size();
  const int J = basis_.size();
  for (int j = 0; j < J; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    op_.gradient(u.subspan(off, nr), std::span<double>(ur_modes_).subspan(off, nr));
  }
  basis_.synthesize(ur_modes_, ur_, nr);
  if (uses_u_) basis_.synthesize(u, uu_, nr);
  if (uses_t_) basis_.synthesize(ut, ut_, nr);
  for (std::size_t a = 0; a < uy_.size(); ++a) basis_.synthesize_gradient(u, uy_[a], nr, static_cast<int>(a));

  const int D = q_.dim();
  std::vector<int> slots;
  for (int a = 0; a <= D; ++a) {
    if (a < 2 || a > 1 + q_.n) slots.push_back(a);
  }
  std::vector<double> v(static_cast<std::size_t>(D + 1), 0.0);
  for (std::size_t k = 0; k < qv_.size(); ++k) {
    double val = cx_ * ur_[k] * ur_[k];
    if (uses_u_ || uses_t_ || uses_y_) {
      v[0] = uses_u_ ? uu_[k] : 0.0;
      v[1] = uses_t_ ? ut_[k] : 0.0;
      for (std::size_t a = 0; a < uy_.size(); ++a) v[static_cast<std::size_t>(2 + q_.n) + a] = uy_[a][k];
      for (int a : slots) {
        for (int b : slots) val += q_.r(a, b) * v[static_cast<std::size_t>(a)] * v[static_cast<std::size_t>(b)];
      }
    }
    qv_[k] = val;
  }
  basis_.analyze(qv_, out, nr);
}

void hermite_sample(const WaveguideTrajectory& dense, double t, std::span<double> u, std::span<double> ut) {
  const auto& st = dense.states;
  if (st.empty()) throw ValidationError("empty dense trajectory");
  if (t <= st.front().t) {
    std::copy(st.front().u.begin(), st.front().u.end(), u.begin());
    std::copy(st.front().ut.begin(), st.front().ut.end(), ut.begin());
    return;
  }
  if (t >= st.back().t) {
    std::copy(st.back().u.begin(), st.back().u.end(), u.begin());
    std::copy(st.back().ut.begin(), st.back().ut.end(), ut.begin());
    return;
  }
  const double t0 = st.front().t;
  std::size_t s = static_cast<std::size_t>(std::floor((t - t0) / dense.dt));
  s = std::min(s, st.size() - 2);
  while (s > 0 && st[s].t > t) --s;
  while (s + 2 < st.size() && st[s + 1].t < t) ++s;
  const auto& a = st[s];
  const auto& b = st[s + 1];
  if (a.utt.empty() || b.utt.empty()) throw ValidationError("dense trajectory lacks accelerations");
  const double dt = b.t - a.t;
  const double x = (t - a.t) / dt;
  const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
  const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] = h00 * a.u[k] + h10 * dt * a.ut[k] + h01 * b.u[k] + h11 * dt * b.ut[k];
    ut[k] = h00 * a.ut[k] + h10 * dt * a.utt[k] + h01 * b.ut[k] + h11 * dt * b.utt[k];
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear solves

WaveguideTrajectory solve_linear_modewise(const CauchyData& data, double m, const ModeBasis& basis,
                                          const LinearOptions& opts) {
  data.validate(basis);
  if (!(m >= 0.0)) throw ValidationError("mass m must be nonnegative");
  const int nr = data.grid.size();
  const int J = basis.size();
  std::vector<double> fh(static_cast<std::size_t>(J) * nr), gh(fh.size());
  basis.analyze(data.f, fh, nr);
  basis.analyze(data.g, gh, nr);

  std::vector<std::future<KGTrajectory>> jobs;
  for (int j = 0; j < J; ++j) {
    KGState s;
    s.u.assign(fh.begin() + static_cast<std::ptrdiff_t>(j) * nr, fh.begin() + static_cast<std::ptrdiff_t>(j + 1) * nr);
    s.ut.assign(gh.begin() + static_cast<std::ptrdiff_t>(j) * nr, gh.begin() + static_cast<std::ptrdiff_t>(j + 1) * nr);
    s.mu = std::sqrt(m * m + basis.lambda(j) * basis.lambda(j));
    s.t = data.t0;
    EvolveOptions eo;
    eo.dt = opts.dt;
    eo.t_final = opts.t_final;
    eo.output_interval = opts.output_interval;
    eo.stepper = Stepper::Leapfrog;
    const RadialGrid grid = data.grid;
    jobs.push_back(std::async(std::launch::deferred, [grid, s, eo, j]() {
      try {
        return evolve_kg(grid, s, eo);
      } catch (const InstabilityError& e) {
        throw InstabilityError(std::string(e.what()) + " in mode " + std::to_string(j), e.time());
      }
    }));
  }
  // Deferred tasks run in index order, which keeps the recombination fixed.
  std::vector<KGTrajectory> per_mode;
  for (auto& f : jobs) per_mode.push_back(f.get());

  WaveguideTrajectory out{data.grid, basis, m, per_mode.front().dt, {}};
  const std::size_t ns = per_mode.front().states.size();
  for (std::size_t s = 0; s < ns; ++s) {
    WaveguideField fld;
    fld.modes = J;
    fld.columns = nr;
    fld.t = per_mode.front().states[s].t;
    fld.u.resize(static_cast<std::size_t>(J) * nr);
    fld.ut.resize(fld.u.size());
    for (int j = 0; j < J; ++j) {
      const auto& ks = per_mode[static_cast<std::size_t>(j)].states[s];
      std::copy(ks.u.begin(), ks.u.end(), fld.u.begin() + static_cast<std::ptrdiff_t>(j) * nr);
      std::copy(ks.ut.begin(), ks.ut.end(), fld.ut.begin() + static_cast<std::ptrdiff_t>(j) * nr);
    }
    out.states.push_back(std::move(fld));
  }
  return out;
}

std::vector<GridSnapshot> solve_full_grid(const DataProfile& profile, double epsilon, const RadialGrid& grid,
                                          const CrossSectionSpec& section, int y_points, double m,
                                          const LinearOptions& opts, double t0) {
  if (section.dimension() != 1) throw ValidationError("full-grid oracle supports interval sections only");
  if (y_points < 8) throw ValidationError("full-grid oracle needs at least 8 y points");
  RadialOperator op(grid);
  const int nr = op.size();
  const int ny = y_points;
  const double hy = section.lengths()[0] / (ny - 1);
  if (!(opts.dt > 0.0) || opts.dt > 0.5 * std::min(grid.h, hy) * (1.0 + 1e-12)) {
    throw ConfigurationError("full-grid oracle needs 0 < dt <= min(h, h_y)/2");
  }
  const bool dir = section.bc == BoundaryCondition::Dirichlet;
  const std::size_t total = static_cast<std::size_t>(nr) * ny;
  std::vector<double> phi(total), phit(total), acc(total), lap(static_cast<std::size_t>(nr));
  std::vector<double> y(1);
  for (int q = 0; q < ny; ++q) {
    y[0] = q * hy;
    std::vector<double> uf(static_cast<std::size_t>(nr)), ug(static_cast<std::size_t>(nr));
    for (int i = 0; i < nr; ++i) {
      uf[i] = profile.f ? epsilon * profile.f(grid.r(i), y) : 0.0;
      ug[i] = profile.g ? epsilon * profile.g(grid.r(i), y) : 0.0;
    }
    if (dir && (q == 0 || q == ny - 1)) {
      std::fill(uf.begin(), uf.end(), 0.0);
      std::fill(ug.begin(), ug.end(), 0.0);
    }
    op.to_working(uf, std::span<double>(phi).subspan(static_cast<std::size_t>(q) * nr, nr));
    op.to_working(ug, std::span<double>(phit).subspan(static_cast<std::size_t>(q) * nr, nr));
  }
  const double m2 = m * m;
  auto accel = [&]() {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int q = 0; q < ny; ++q) {
      if (dir && (q == 0 || q == ny - 1)) continue;
      const std::size_t off = static_cast<std::size_t>(q) * nr;
      op.apply(std::span<const double>(phi).subspan(off, nr), lap);
      const double* c = phi.data() + off;
      const double* dn = q > 0 ? c - nr : c + nr;  // reflection at the Neumann ends
      const double* up = q < ny - 1 ? c + nr : c - nr;
      for (int i = op.first_free(); i <= op.last_free(); ++i) {
        acc[off + i] = lap[i] + (dn[i] - 2.0 * c[i] + up[i]) / (hy * hy) - m2 * c[i];
      }
    }
  };
  const double span_t = opts.t_final - t0;
  const long steps = static_cast<long>(std::ceil(span_t / opts.dt - 1e-9));
  const double dt = span_t / static_cast<double>(std::max(steps, 1L));
  const long every = opts.output_interval > 0.0 ? std::max(1L, std::lround(opts.output_interval / dt)) : std::max(steps, 1L);

  std::vector<GridSnapshot> out;
  auto emit = [&](double t) {
    GridSnapshot s;
    s.t = t;
    s.u.resize(total);
    for (int q = 0; q < ny; ++q) {
      const std::size_t off = static_cast<std::size_t>(q) * nr;
      op.to_physical(std::span<const double>(phi).subspan(off, nr), std::span<double>(s.u).subspan(off, nr));
    }
    out.push_back(std::move(s));
  };
  emit(t0);
  accel();
  for (long s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < total; ++k) {
      phit[k] += 0.5 * dt * acc[k];
      phi[k] += dt * phit[k];
    }
    accel();
    for (std::size_t k = 0; k < total; ++k) phit[k] += 0.5 * dt * acc[k];
    if ((s + 1) % every == 0 || s + 1 == steps) {
      if (!std::isfinite(phi[total / 2])) throw InstabilityError("full-grid oracle diverged", t0 + (s + 1) * dt);
      emit(s + 1 == steps ? opts.t_final : t0 + (s + 1) * dt);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinear solves

double sup_gradient(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis) {
  RadialOperator op(grid);
  const int nr = op.size();
  const int J = basis.size();
  std::vector<double> urm(static_cast<std::size_t>(J) * nr);
  for (int j = 0; j < J; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    op.gradient(std::span<const double>(field.u).subspan(off, nr), std::span<double>(urm).subspan(off, nr));
  }
  const std::size_t phys = static_cast<std::size_t>(basis.points()) * nr;
  std::vector<double> sq(phys, 0.0), tmp(phys);
  auto accumulate = [&]() {
    for (std::size_t k = 0; k < phys; ++k) sq[k] += tmp[k] * tmp[k];
  };
  basis.synthesize(field.ut, tmp, nr);
  accumulate();
  basis.synthesize(urm, tmp, nr);
  accumulate();
  for (int a = 0; a < basis.dimension(); ++a) {
    basis.synthesize_gradient(field.u, tmp, nr, a);
    accumulate();
  }
  double s = 0.0;
  for (double v : sq) {
    if (!std::isfinite(v)) return INFINITY;
    s = std::max(s, v);
  }
  return std::sqrt(s);
}

namespace {

struct NonlinearSystem {
  detail::ModeIntegrator integ;
  detail::NonlinearEvaluator eval;
  std::vector<double> u, ut, qhat, qwork;

  NonlinearSystem(const RadialGrid& grid, const ModeBasis& basis, const QuadraticForm& q, double m)
      : integ(grid, basis, m), eval(q, basis, integ.op()) {
    const std::size_t total = static_cast<std::size_t>(basis.size()) * grid.size();
    u.resize(total);
    ut.resize(total);
    qhat.resize(total);
    qwork.resize(total);
  }

  detail::ModeSource source(bool active) {
    if (!active) return {};
    return [this](double, std::span<const double> phi, std::span<const double> phit, std::span<double> acc) {
      integ.to_physical(phi, u);
      if (eval.needs_time_derivative()) integ.to_physical(phit, ut);
      eval.evaluate(u, ut, qhat);
      integ.to_working(qhat, qwork);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += qwork[k];
    };
  }

  WaveguideField field(std::span<const double> phi, std::span<const double> phit, double t) const {
    WaveguideField f;
    f.modes = integ.modes();
    f.columns = integ.columns();
    f.t = t;
    f.u.resize(phi.size());
    f.ut.resize(phi.size());
    integ.to_physical(phi, f.u);
    integ.to_physical(phit, f.ut);
    return f;
  }
};

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

NonlinearResult solve_nonlinear(const CauchyData& data, const QuadraticForm& q, const ModeBasis& basis, double m,
                                const NonlinearOptions& opts) {
  data.validate(basis);
  const RadialGrid& grid = data.grid;
  if (!(opts.dt > 0.0)) throw ValidationError("time step must be positive");
  if (opts.dt > 0.5 * grid.h * (1.0 + 1e-12)) throw ConfigurationError("CFL violated: dt > h/2");
  const double span_t = opts.t_final - data.t0;
  if (span_t < 0.0) throw ValidationError("t_final precedes the data time");

  NonlinearSystem sys(grid, basis, q, m);
  const int nr = grid.size();
  const int J = basis.size();
  const std::size_t total = static_cast<std::size_t>(J) * nr;
  std::vector<double> fh(total), gh(total), phi(total), phit(total), acc(total);
  basis.analyze(data.f, fh, nr);
  basis.analyze(data.g, gh, nr);
  sys.integ.to_working(fh, phi);
  sys.integ.to_working(gh, phit);
  const bool active = !q.is_zero();
  detail::ModeSource src = sys.source(active);

  const long steps = span_t > 0.0 ? static_cast<long>(std::ceil(span_t / opts.dt - 1e-9)) : 0;
  const double dt = steps > 0 ? span_t / static_cast<double>(steps) : opts.dt;
  long every = steps > 0 ? steps : 1;
  if (opts.output_interval > 0.0) every = std::max(1L, std::lround(opts.output_interval / dt));
  if (opts.dense) every = 1;

  NonlinearResult res;
  res.trajectory = WaveguideTrajectory{grid, basis, m, dt, {}};
  auto record = [&](double t) {
    WaveguideField f = sys.field(phi, phit, t);
    if (opts.dense) {
      sys.integ.acceleration(t, phi, phit, acc, src);
      f.utt.resize(total);
      sys.integ.to_physical(acc, f.utt);
    }
    res.trajectory.states.push_back(std::move(f));
  };
  record(data.t0);

  const double s0 = sup_gradient(res.trajectory.states.front(), grid, basis);
  double thr = INFINITY;
  if (opts.absolute_threshold > 0.0) {
    thr = opts.absolute_threshold;
  } else if (s0 > 0.0 && data.epsilon > 0.0) {
    thr = opts.threshold_factor * s0 / data.epsilon;
  }
  res.threshold = thr;
  const bool monitor = active && std::isfinite(thr);

  double last_sup = s0;
  std::vector<double> phi0(total), phit0(total);
  for (long s = 0; s < steps; ++s) {
    const double t = data.t0 + static_cast<double>(s) * dt;
    if (monitor) {
      phi0 = phi;
      phit0 = phit;
    }
    sys.integ.rk4_step(t, dt, phi, phit, src);
    const bool last = s + 1 == steps;
    const double tn = last ? opts.t_final : t + dt;
    double sup = 0.0;
    bool ok = true;
    if (monitor) {
      const bool fin = finite(phi) && finite(phit);
      sup = fin ? sup_gradient(sys.field(phi, phit, tn), grid, basis) : INFINITY;
      ok = fin && std::isfinite(sup) && sup <= thr;
      if (!ok) {
        BlowupEvent ev;
        ev.trigger = fin && std::isfinite(sup) ? BlowupTrigger::Threshold : BlowupTrigger::NonFinite;
        // Bisect the failing step: advance from the last good state by halves.
        double lo = t, width = dt;
        std::vector<double> p = phi0, v = phit0, pt(total), vt(total);
        for (int b = 0; b < opts.bisection_steps; ++b) {
          const double half = 0.5 * width;
          pt = p;
          vt = v;
          sys.integ.rk4_step(lo, half, pt, vt, src);
          const bool f2 = finite(pt) && finite(vt);
          const double s2 = f2 ? sup_gradient(sys.field(pt, vt, lo + half), grid, basis) : INFINITY;
          if (f2 && std::isfinite(s2) && s2 <= thr) {
            p.swap(pt);
            v.swap(vt);
            lo += half;
            last_sup = s2;
          }
          width = half;
        }
        ev.time = lo + width;
        ev.last_sup = last_sup;
        res.blowup = ev;
        return res;
      }
      last_sup = sup;
    } else if ((s + 1) % 64 == 0 || last) {
      if (!(finite(phi) && finite(phit))) throw InstabilityError("non-finite values in waveguide evolution", tn);
    }
    if ((s + 1) % every == 0 || last) record(tn);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Lifespan

LifespanResult lifespan_sweep(const std::vector<double>& eps_list, const QuadraticForm& q, const ModeBasis& basis,
                              double m, double h, const DataFactory& factory, const LifespanOptions& opts,
                              bool require_fit) {
  if (eps_list.size() < 4) throw ValidationError("lifespan sweep needs at least 4 epsilon values");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw ValidationError("epsilon ladder must be strictly decreasing");
  }
  if (eps_list.back() <= 0.0) throw ValidationError("epsilon values must be positive");
  if (q.n != 3) throw ValidationError("lifespan sweeps run in n = 3");

  auto run_one = [&](double eps, double hh, double dt) -> std::optional<BlowupEvent> {
    const RadialGrid grid = RadialGrid::for_horizon(3, 1.0, opts.horizon, hh);
    CauchyData data = factory(eps, grid);
    NonlinearOptions o = opts.solver;
    o.dt = dt;
    o.t_final = data.t0 + opts.horizon;
    o.output_interval = 0.0;
    o.dense = false;
    auto r = solve_nonlinear(data, q, basis, m, o);
    if (r.blowup) r.blowup->time -= data.t0;
    return r.blowup;
  };

  std::vector<std::future<LifespanRow>> jobs;
  for (double eps : eps_list) {
    jobs.push_back(std::async(std::launch::deferred, [&, eps]() {
      LifespanRow row;
      row.epsilon = eps;
      const auto ev = run_one(eps, h, opts.solver.dt);
      row.censored = !ev.has_value();
      row.t_star = ev ? ev->time : opts.horizon;
      if (ev) row.trigger = ev->trigger;
      if (opts.refine) {
        const auto evr = run_one(eps, 0.5 * h, 0.5 * opts.solver.dt);
        row.refined_censored = !evr.has_value();
        row.t_star_refined = evr ? evr->time : opts.horizon;
        if (!row.censored && !row.refined_censored) {
          row.relative_change = std::abs(row.t_star_refined - row.t_star) / row.t_star;
        } else if (row.censored != row.refined_censored) {
          row.relative_change = INFINITY;
        }
      }
      return row;
    }));
  }
  LifespanResult out;
  std::vector<double> x, y;
  for (auto& j : jobs) {
    LifespanRow row = j.get();
    if (!row.censored) {
      ++out.blowups;
      x.push_back(1.0 / row.epsilon);
      y.push_back(std::log(row.t_star));
    }
    out.max_relative_change = std::max(out.max_relative_change, row.relative_change);
    out.rows.push_back(row);
  }
  out.fit.name = "lifespan_fit";
  out.fit.add_param("horizon", opts.horizon);
  out.fit.add_param("h", h);
  out.fit.add_param("uncensored", static_cast<double>(x.size()));
  if (x.size() < 3) {
    if (require_fit) {
      throw ValidationError("lifespan fit needs 3 uncensored points, got " + std::to_string(x.size()));
    }
    out.fit.degenerate = true;
    out.fit.pass = false;
    out.fit.note = "fewer than 3 uncensored points";
    return out;
  }
  const LinearFit fit = fit_line(x, y);
  out.fit.slope = fit.slope;
  out.fit.r_squared = fit.r_squared;
  out.fit.set_sides(fit.r_squared, 0.9);
  out.fit.tolerance = 0.9;
  out.fit.add_param("intercept", fit.intercept);
  out.fit.pass = fit.r_squared >= 0.9 && fit.slope > 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Reduction to zero data

double Cutoff::value(double t) const { return 1.0 - smooth_step((t - start()) / (stop() - start())); }
double Cutoff::d1(double t) const {
  const double w = stop() - start();
  return -smooth_step_d1((t - start()) / w) / w;
}
double Cutoff::d2(double t) const {
  const double w = stop() - start();
  return -smooth_step_d2((t - start()) / w) / (w * w);
}

ReductionResult reduce_to_zero_data(const CauchyData& data, const QuadraticForm& q, const ModeBasis& basis, double m,
                                    double dt, double extra) {
  ReductionResult red;
  red.eta.support = data.support;
  if (std::abs(data.t0 - 2.0 * data.support) > 1e-12) {
    throw ValidationError("reduction expects data posed at t = 2B");
  }
  NonlinearOptions o;
  o.dt = dt;
  o.t_final = red.eta.stop() + extra;
  o.dense = true;
  NonlinearResult full = solve_nonlinear(data, q, basis, m, o);
  if (full.blowup) throw InstabilityError("local solve blew up before 2B + 1", full.blowup->time);

  const auto& st = full.trajectory.states;
  red.local = WaveguideTrajectory{data.grid, basis, m, full.trajectory.dt, {}};
  for (const auto& s : st) {
    if (s.t <= red.eta.stop() + 1e-9) red.local.states.push_back(s);
  }

  // Residual of (box + m^2) w - (1 - eta) Q(u) + [box, eta] u with w = (1 - eta) u.
  const int nr = data.grid.size();
  const int J = basis.size();
  const std::size_t total = static_cast<std::size_t>(J) * nr;
  detail::ModeIntegrator integ(data.grid, basis, m);
  detail::NonlinearEvaluator eval(q, basis, integ.op());
  std::vector<double> wm(total), w0(total), wp(total), phi(total), lap(total), lapu(total), qh(total);
  auto w_at = [&](std::size_t s, std::vector<double>& w) {
    const double e = red.eta.value(st[s].t);
    for (std::size_t k = 0; k < total; ++k) w[k] = (1.0 - e) * st[s].u[k];
  };
  const auto& ro = integ.op();
  double worst = 0.0, scale = 0.0;
  const double hh = full.trajectory.dt;
  for (std::size_t s = 1; s + 1 < st.size(); ++s) {
    w_at(s - 1, wm);
    w_at(s, w0);
    w_at(s + 1, wp);
    // Spatial part on w in mode space: -Delta_r w + lambda_j^2 w + m^2 w.
    integ.to_working(w0, phi);
    for (int j = 0; j < J; ++j) {
      const std::size_t off = static_cast<std::size_t>(j) * nr;
      ro.apply(std::span<const double>(phi).subspan(off, nr), std::span<double>(lap).subspan(off, nr));
    }
    integ.to_physical(lap, lapu);
    eval.evaluate(st[s].u, st[s].ut, qh);
    const double t = st[s].t;
    const double e = red.eta.value(t), e1 = red.eta.d1(t), e2 = red.eta.d2(t);
    CompensatedSum num, den;
    for (int j = 0; j < J; ++j) {
      const double l2 = basis.lambda(j) * basis.lambda(j) + m * m;
      for (int i = 0; i < nr - 1; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * nr + i;
        const double wtt = (wp[k] - 2.0 * w0[k] + wm[k]) / (hh * hh);
        const double lhs = wtt - lapu[k] + l2 * w0[k];
        const double rhs = (1.0 - e) * qh[k] - (e2 * st[s].u[k] + 2.0 * e1 * st[s].ut[k]);
        const double wgt = ro.quadrature_weight(i);
        num.add(wgt * (lhs - rhs) * (lhs - rhs));
        den.add(wgt * rhs * rhs);
      }
    }
    worst = std::max(worst, std::sqrt(num.value()));
    scale = std::max(scale, std::sqrt(den.value()));
  }
  red.residual.name = "reduction_residual";
  const double tol = 10.0 * data.grid.h * data.grid.h;
  red.residual.set_sides(worst, tol);
  red.residual.tolerance = tol;
  red.residual.pass = worst < tol;
  red.residual.add_param("rhs_scale", scale);
  red.residual.add_param("h", data.grid.h);
  red.residual.add_param("dt", hh);
  return red;
}

void cutoff_solution(const ReductionResult& red, double t, std::span<double> u0, std::span<double> u0t) {
  if (t < red.local.states.front().t - 1e-12 || t > red.eta.stop()) {
    std::fill(u0.begin(), u0.end(), 0.0);
    std::fill(u0t.begin(), u0t.end(), 0.0);
    return;
  }
  detail::hermite_sample(red.local, t, u0, u0t);
  const double e = red.eta.value(t), e1 = red.eta.d1(t);
  for (std::size_t k = 0; k < u0.size(); ++k) {
    u0t[k] = e1 * u0[k] + e * u0t[k];
    u0[k] *= e;
  }
}

}  // namespace wglab
