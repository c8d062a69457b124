#include "wglab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"

namespace wglab {

RadialGrid RadialGrid::for_horizon(int n, double support, double horizon, double h) {
  if (!(h > 0.0)) throw ValidationError("radial spacing must be positive");
  const double need = support + horizon + 2.0;
  RadialGrid g;
  g.n = n;
  g.h = h;
  g.r_max = std::ceil(need / h - 1e-9) * h;
  g.validate();
  return g;
}

int RadialGrid::size() const { return static_cast<int>(std::lround(r_max / h)) + 1; }

void RadialGrid::validate() const {
  if (n < 3 || n > 5) throw ValidationError("ambient dimension n must be 3, 4 or 5");
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("radial spacing must be positive");
  if (!(r_max > 0.0)) throw ValidationError("r_max must be positive");
  if (size() < 8) throw ValidationError("radial grid needs at least 8 points");
}

RadialOperator::RadialOperator(const RadialGrid& grid) : grid_(grid), size_(grid.size()) {
  grid_.validate();
  const int n = grid_.n;
  const double h = grid_.h;
  const double omega = sphere_area(n);
  volume_.resize(static_cast<std::size_t>(size_));
  face_.resize(static_cast<std::size_t>(size_));
  quad_.resize(static_cast<std::size_t>(size_));
  for (int i = 0; i < size_; ++i) {
    const double r = grid_.r(i);
    if (n == 3) {
      volume_[i] = h;
      face_[i] = 1.0;
      quad_[i] = omega * h * r * r;
    } else {
      const double lo = i == 0 ? 0.0 : r - 0.5 * h;
      const double hi = r + 0.5 * h;
      volume_[i] = (std::pow(hi, n) - std::pow(lo, n)) / n;
      face_[i] = std::pow(hi, n - 1);
      quad_[i] = omega * volume_[i];
    }
  }
}

void RadialOperator::apply(std::span<const double> phi, std::span<double> out) const {
  const int lo = first_free(), hi = last_free();
  const double h = grid_.h;
  out[0] = 0.0;
  out[static_cast<std::size_t>(size_ - 1)] = 0.0;
  if (grid_.n == 3) {
    const double c = 1.0 / (h * h);
    for (int i = lo; i <= hi; ++i) out[i] = c * (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]);
    return;
  }
  for (int i = lo; i <= hi; ++i) {
    const double right = face_[i] * (phi[i + 1] - phi[i]);
    const double left = i == 0 ? 0.0 : face_[i - 1] * (phi[i] - phi[i - 1]);
    out[i] = (right - left) / (h * volume_[i]);
  }
}

void RadialOperator::to_working(std::span<const double> u, std::span<double> phi) const {
  if (grid_.n == 3) {
    for (int i = 0; i < size_; ++i) phi[i] = grid_.r(i) * u[i];
  } else {
    std::copy(u.begin(), u.begin() + size_, phi.begin());
  }
  phi[0] = grid_.n == 3 ? 0.0 : phi[0];
  phi[static_cast<std::size_t>(size_ - 1)] = 0.0;
}

void RadialOperator::to_physical(std::span<const double> phi, std::span<double> u) const {
  if (grid_.n != 3) {
    std::copy(phi.begin(), phi.begin() + size_, u.begin());
    return;
  }
  const double h = grid_.h;
  for (int i = 1; i < size_; ++i) u[i] = phi[i] / grid_.r(i);
  // v = r u with u even in r: (8 v_1 - v_2) / (6h) cancels the r^3 term.
  u[0] = (8.0 * phi[1] - phi[2]) / (6.0 * h);
}

double RadialOperator::inner(std::span<const double> a, std::span<const double> b) const {
  CompensatedSum s;
  for (int i = 0; i < size_; ++i) s.add(volume_[i] * a[i] * b[i]);
  return s.value();
}

double RadialOperator::stiffness(std::span<const double> phi) const {
  CompensatedSum s;
  for (int i = 0; i + 1 < size_; ++i) {
    const double d = phi[i + 1] - phi[i];
    s.add(face_[i] * d * d / grid_.h);
  }
  return s.value();
}

void RadialOperator::gradient(std::span<const double> u, std::span<double> ur) const {
  const double h = grid_.h;
  ur[0] = 0.0;
  for (int i = 1; i + 1 < size_; ++i) ur[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  const int e = size_ - 1;
  ur[e] = (3.0 * u[e] - 4.0 * u[e - 1] + u[e - 2]) / (2.0 * h);
}

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

KGState snapshot(const RadialOperator& op, std::span<const double> phi, std::span<const double> phit, double mu,
                 double t) {
  KGState s;
  s.u.resize(static_cast<std::size_t>(op.size()));
  s.ut.resize(static_cast<std::size_t>(op.size()));
  op.to_physical(phi, s.u);
  op.to_physical(phit, s.ut);
  s.mu = mu;
  s.t = t;
  return s;
}

}  // namespace

KGTrajectory evolve_kg(const RadialGrid& grid, const KGState& initial, const EvolveOptions& opts) {
  RadialOperator op(grid);
  const int n = op.size();
  if (static_cast<int>(initial.u.size()) != n || static_cast<int>(initial.ut.size()) != n) {
    throw ValidationError("initial state does not match the radial grid");
  }
  if (!(initial.mu >= 0.0)) throw ValidationError("mass must be nonnegative");
  if (!(opts.dt > 0.0)) throw ValidationError("time step must be positive");
  if (opts.dt > 0.5 * grid.h * (1.0 + 1e-12)) {
    throw ConfigurationError("CFL violated: dt = " + std::to_string(opts.dt) + " > h/2 = " +
                             std::to_string(0.5 * grid.h));
  }
  const double span_t = opts.t_final - initial.t;
  if (span_t < 0.0) throw ValidationError("t_final precedes the initial time");

  const long steps = span_t > 0.0 ? static_cast<long>(std::ceil(span_t / opts.dt - 1e-9)) : 0;
  const double dt = steps > 0 ? span_t / static_cast<double>(steps) : opts.dt;
  long every = steps > 0 ? steps : 1;
  if (opts.output_interval > 0.0) every = std::max(1L, std::lround(opts.output_interval / dt));

  const bool forced = static_cast<bool>(opts.forcing);
  Stepper stepper = opts.stepper;
  if (stepper == Stepper::Auto) stepper = forced ? Stepper::RungeKutta4 : Stepper::Leapfrog;

  const double mu2 = initial.mu * initial.mu;
  std::vector<double> phi(n), phit(n), acc(n), lap(n), src(n), fphys(n);
  op.to_working(initial.u, phi);
  op.to_working(initial.ut, phit);

  auto source = [&](double t) {
    if (!forced) {
      std::fill(src.begin(), src.end(), 0.0);
      return;
    }
    opts.forcing(t, fphys);
    op.to_working(fphys, src);
  };
  auto accel = [&](std::span<const double> p, double t, std::span<double> out) {
    op.apply(p, lap);
    source(t);
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = op.first_free(); i <= op.last_free(); ++i) out[i] = lap[i] - mu2 * p[i] + src[i];
  };

  KGTrajectory traj;
  traj.grid = grid;
  traj.dt = dt;
  traj.states.push_back(snapshot(op, phi, phit, initial.mu, initial.t));

  std::vector<double> k1p(n), k1v(n), k2p(n), k2v(n), k3p(n), k3v(n), k4p(n), k4v(n), tp(n), tv(n);
  if (stepper == Stepper::Leapfrog) accel(phi, initial.t, acc);

  for (long s = 0; s < steps; ++s) {
    const double t = initial.t + static_cast<double>(s) * dt;
    if (stepper == Stepper::Leapfrog) {
      for (int i = 0; i < n; ++i) {
        phit[i] += 0.5 * dt * acc[i];
        phi[i] += dt * phit[i];
      }
      accel(phi, t + dt, acc);
      for (int i = 0; i < n; ++i) phit[i] += 0.5 * dt * acc[i];
    } else {
      accel(phi, t, k1v);
      for (int i = 0; i < n; ++i) {
        k1p[i] = phit[i];
        tp[i] = phi[i] + 0.5 * dt * k1p[i];
        tv[i] = phit[i] + 0.5 * dt * k1v[i];
      }
      accel(tp, t + 0.5 * dt, k2v);
      for (int i = 0; i < n; ++i) {
        k2p[i] = tv[i];
        tp[i] = phi[i] + 0.5 * dt * k2p[i];
        tv[i] = phit[i] + 0.5 * dt * k2v[i];
      }
      accel(tp, t + 0.5 * dt, k3v);
      for (int i = 0; i < n; ++i) {
        k3p[i] = tv[i];
        tp[i] = phi[i] + dt * k3p[i];
        tv[i] = phit[i] + dt * k3v[i];
      }
      accel(tp, t + dt, k4v);
      for (int i = 0; i < n; ++i) {
        k4p[i] = tv[i];
        phi[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        phit[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
      }
    }
    const bool emit = (s + 1) % every == 0 || s + 1 == steps;
    if ((emit || (s + 1) % 64 == 0) && !(all_finite(phi) && all_finite(phit))) {
      throw InstabilityError("non-finite values in radial evolution", t + dt);
    }
    if (emit) {
      const double tn = s + 1 == steps ? opts.t_final : t + dt;
      traj.states.push_back(snapshot(op, phi, phit, initial.mu, tn));
    }
  }
  return traj;
}

double leapfrog_invariant(const RadialGrid& grid, const KGState& state, double dt) {
  RadialOperator op(grid);
  const int n = op.size();
  std::vector<double> phi(n), phit(n), lap(n), kphi(n);
  op.to_working(state.u, phi);
  op.to_working(state.ut, phit);
  op.apply(phi, lap);
  const double mu2 = state.mu * state.mu;
  for (int i = op.first_free(); i <= op.last_free(); ++i) kphi[i] = -lap[i] + mu2 * phi[i];
  // |p|^2 + <q, K q> - dt^2/4 |K q|^2, all in the V-weighted product
  const double e = op.inner(phit, phit) + op.stiffness(phi) + mu2 * op.inner(phi, phi) -
                   0.25 * dt * dt * op.inner(kphi, kphi);
  return 0.5 * sphere_area(grid.n) * e;
}

double decay_exponent(int n) {
  if (n == 3) return 1.5;
  if (n == 4) return 2.0;
  return 1.0 + n / 4.0;
}

EstimateReport measure_decay(const KGTrajectory& traj, double t_begin, double t_end, double tolerance,
                             double data_scale) {
  if (!(t_end > t_begin) || t_begin <= 0.0) throw ValidationError("decay window must satisfy 0 < t_begin < t_end");
  const double p = decay_exponent(traj.grid.n);
  std::vector<double> lt, ls;
  double weighted = 0.0;
  for (const auto& s : traj.states) {
    if (s.t < t_begin - 1e-12 || s.t > t_end + 1e-12) continue;
    double sup = 0.0;
    for (double v : s.u) sup = std::max(sup, std::abs(v));
    if (!(sup > 0.0)) continue;
    lt.push_back(std::log(s.t));
    ls.push_back(std::log(sup));
    weighted = std::max(weighted, std::pow(s.t, p) * sup);
  }
  if (lt.size() < 4) {
    throw ValidationError("decay window holds " + std::to_string(lt.size()) + " samples, need at least 4");
  }
  const LinearFit fit = fit_line(lt, ls);
  EstimateReport r;
  r.name = "decay";
  r.set_sides(weighted, data_scale);
  r.slope = fit.slope;
  r.r_squared = fit.r_squared;
  r.tolerance = tolerance;
  r.pass = std::abs(fit.slope + p) <= tolerance;
  r.add_param("n", traj.grid.n);
  r.add_param("mu", traj.states.empty() ? 0.0 : traj.states.front().mu);
  r.add_param("t_begin", t_begin);
  r.add_param("t_end", t_end);
  r.add_param("expected_slope", -p);
  r.add_param("h", traj.grid.h);
  return r;
}

}  // namespace wglab
