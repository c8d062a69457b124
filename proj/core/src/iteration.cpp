#include "wglab/iteration.hpp"

#include <algorithm>
#include <cmath>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"

namespace wglab {

void IterationConfig::validate() const {
  if (k_max < 3) throw ValidationError("k_max must be >= 3");
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("contraction target rho must lie in (0, 1)");
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(h > 0.0)) throw ValidationError("h must be positive");
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be >= 0");
  if (!(m >= 0.0)) throw ValidationError("mass m must be >= 0");
  if (!(output_interval > 0.0)) throw ValidationError("output_interval must be positive");
  q.validate();
  if (!q.is_semilinear()) throw ValidationError("the iteration handles semilinear forms only");
  budget.validate();
}

namespace {

struct Iterate {
  std::vector<double> phi, phit;
};

double weighted_norm(const RadialOperator& op, int J, std::span<const double> v) {
  const int nr = op.size();
  CompensatedSum s;
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < nr; ++i) {
      const double x = v[static_cast<std::size_t>(j) * nr + i];
      s.add(op.quadrature_weight(i) * x * x);
    }
  }
  return std::sqrt(s.value());
}

bool all_finite(const std::vector<Iterate>& it) {
  for (const auto& w : it) {
    for (double x : w.phi) {
      if (!std::isfinite(x)) return false;
    }
    for (double x : w.phit) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

}  // namespace

IterationResult picard_iterate(const IterationConfig& config, const CauchyData& data, const ModeBasis& basis) {
  config.validate();
  data.validate(basis);
  if (basis.bc() != config.bc) throw ValidationError("cross-section boundary condition differs from the config");
  if (config.epsilon > 0.0 && std::abs(config.epsilon - data.epsilon) > 1e-12 * config.epsilon) {
    throw ValidationError("config epsilon differs from the data epsilon");
  }
  if (config.q.n != data.grid.n || config.q.d != basis.dimension()) {
    throw ValidationError("quadratic form does not match the waveguide dimensions");
  }
  const auto& grid = data.grid;
  const double m = config.m;
  const int K = config.k_max;
  const int nr = grid.size();
  const int J = basis.size();
  const std::size_t total = static_cast<std::size_t>(J) * nr;

  IterationResult res;
  res.epsilon = data.epsilon;
  res.horizon = config.horizon;

  // Local solution and cutoff.
  ReductionResult red = reduce_to_zero_data(data, config.q, basis, m, config.dt, 0.0);
  res.reduction = red.residual;
  const Cutoff& eta = red.eta;

  {
    WaveguideTrajectory u0{grid, basis, m, red.local.dt, {}};
    for (const auto& s : red.local.states) {
      WaveguideField f = s;
      const double e = eta.value(s.t), e1 = eta.d1(s.t), e2 = eta.d2(s.t);
      for (std::size_t k = 0; k < total; ++k) {
        f.u[k] = e * s.u[k];
        f.ut[k] = e1 * s.u[k] + e * s.ut[k];
        f.utt[k] = e2 * s.u[k] + 2.0 * e1 * s.ut[k] + e * s.utt[k];
      }
      u0.states.push_back(std::move(f));
    }
    const auto prof = gamma_profile(u0, u0.states.back().t, config.budget);
    double sup = 0.0;
    for (double v : prof.energy) sup = std::max(sup, v);
    res.c0 = data.epsilon > 0.0 ? sup / data.epsilon : 0.0;
  }

  detail::ModeIntegrator integ(grid, basis, m);
  const bool active = !config.q.is_zero();
  detail::NonlinearEvaluator eval(config.q, basis, integ.op());

  const double t0 = data.t0;
  long steps = static_cast<long>(std::ceil(config.horizon / config.dt - 1e-9));
  if (steps % 2) ++steps;
  const double dt = config.horizon / static_cast<double>(steps);
  const long every = std::max(1L, std::lround(config.output_interval / dt));

  std::vector<Iterate> w(static_cast<std::size_t>(K), Iterate{std::vector<double>(total), std::vector<double>(total)});
  std::vector<Iterate> stage = w;
  std::vector<std::vector<double>> kp(4 * static_cast<std::size_t>(K)), kv(4 * static_cast<std::size_t>(K));
  for (auto& v : kp) v.resize(total);
  for (auto& v : kv) v.resize(total);

  std::vector<double> u0(total), u0t(total), base(total), base_w(total), uk(total), ukt(total), qh(total), qw(total),
      src(total);

  // Accelerations of all iterates at time tau from states y.
  auto accelerations = [&](double tau, const std::vector<Iterate>& y, std::vector<std::vector<double>>& out,
                           std::size_t slot) {
    cutoff_solution(red, tau, u0, u0t);
    const double e = eta.value(tau), e1 = eta.d1(tau), e2 = eta.d2(tau);
    for (std::size_t k = 0; k < total; ++k) base[k] = -e2 * u0[k] - 2.0 * e1 * u0t[k];
    integ.to_working(base, base_w);
    for (int k = 0; k < K; ++k) {
      std::fill(src.begin(), src.end(), 0.0);
      if (active && e < 1.0) {
        if (k == 0) {
          uk = u0;
          ukt = u0t;
        } else {
          integ.to_physical(y[static_cast<std::size_t>(k - 1)].phi, uk);
          integ.to_physical(y[static_cast<std::size_t>(k - 1)].phit, ukt);
          for (std::size_t p = 0; p < total; ++p) {
            uk[p] += u0[p];
            ukt[p] += u0t[p];
          }
        }
        eval.evaluate(uk, ukt, qh);
        for (std::size_t p = 0; p < total; ++p) qh[p] *= (1.0 - e);
        integ.to_working(qh, qw);
        src = qw;
      }
      const auto& yk = y[static_cast<std::size_t>(k)];
      detail::ModeSource s = [&](double, std::span<const double> phi, std::span<const double> phit,
                                 std::span<double> acc) {
        for (std::size_t p = 0; p < total; ++p) acc[p] += src[p] + base_w[p] - e2 * phi[p] - 2.0 * e1 * phit[p];
      };
      integ.acceleration(tau, yk.phi, yk.phit, out[slot * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)], s);
    }
  };

  std::vector<WaveguideTrajectory> traj(static_cast<std::size_t>(K), WaveguideTrajectory{grid, basis, m, dt, {}});
  std::vector<std::vector<double>> rec(static_cast<std::size_t>(K));
  for (auto& v : rec) v.resize(total);
  auto record = [&](double t) {
    accelerations(t, w, kv, 0);
    for (int k = 0; k < K; ++k) {
      WaveguideField f;
      f.modes = J;
      f.columns = nr;
      f.t = t;
      f.u.resize(total);
      f.ut.resize(total);
      f.utt.resize(total);
      integ.to_physical(w[static_cast<std::size_t>(k)].phi, f.u);
      integ.to_physical(w[static_cast<std::size_t>(k)].phit, f.ut);
      integ.to_physical(kv[static_cast<std::size_t>(k)], f.utt);
      traj[static_cast<std::size_t>(k)].states.push_back(std::move(f));
    }
  };

  record(t0);
  std::vector<double> half_wk;
  double failed_at = -1.0;
  const auto Ks = static_cast<std::size_t>(K);
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + static_cast<double>(s) * dt;
    const double cs[4] = {0.0, 0.5, 0.5, 1.0};
    for (int st = 0; st < 4; ++st) {
      if (st == 0) {
        accelerations(t, w, kv, 0);
        for (std::size_t k = 0; k < Ks; ++k) kp[k] = w[k].phit;
      } else {
        const double c = cs[st] * dt;
        for (std::size_t k = 0; k < Ks; ++k) {
          const auto& dp = kp[(st - 1) * Ks + k];
          const auto& dv = kv[(st - 1) * Ks + k];
          for (std::size_t p = 0; p < total; ++p) {
            stage[k].phi[p] = w[k].phi[p] + c * dp[p];
            stage[k].phit[p] = w[k].phit[p] + c * dv[p];
          }
        }
        accelerations(t + c, stage, kv, static_cast<std::size_t>(st));
        for (std::size_t k = 0; k < Ks; ++k) kp[st * Ks + k] = stage[k].phit;
      }
    }
    for (std::size_t k = 0; k < Ks; ++k) {
      for (std::size_t p = 0; p < total; ++p) {
        w[k].phi[p] += dt / 6.0 * (kp[k][p] + 2.0 * kp[Ks + k][p] + 2.0 * kp[2 * Ks + k][p] + kp[3 * Ks + k][p]);
        w[k].phit[p] += dt / 6.0 * (kv[k][p] + 2.0 * kv[Ks + k][p] + 2.0 * kv[2 * Ks + k][p] + kv[3 * Ks + k][p]);
      }
    }
    const bool last = s + 1 == steps;
    const double tn = last ? t0 + config.horizon : t + dt;
    if (((s + 1) % 16 == 0 || last) && !all_finite(w)) {
      failed_at = tn;
      break;
    }
    if (s + 1 == steps / 2) {
      half_wk.resize(total);
      integ.to_physical(w.back().phi, half_wk);
    }
    if ((s + 1) % every == 0 || last) record(tn);
  }

  if (failed_at >= 0.0) {
    res.diverged = true;
    res.divergence = "iterates became non-finite at t = " + std::to_string(failed_at);
  }

  // Norms per iterate.
  const double T = traj.front().states.back().t;
  WaveguideTrajectory zero = traj.front();
  for (auto& f : zero.states) {
    std::fill(f.u.begin(), f.u.end(), 0.0);
    std::fill(f.ut.begin(), f.ut.end(), 0.0);
    std::fill(f.utt.begin(), f.utt.end(), 0.0);
  }
  const double bound = 4.0 * res.c0 * data.epsilon;
  res.bounded = true;
  int rising = 0;
  for (int k = 1; k <= K; ++k) {
    const auto& prev = k == 1 ? zero : traj[static_cast<std::size_t>(k - 2)];
    const auto [mk, ak] = iteration_norms(traj[static_cast<std::size_t>(k - 1)], prev, T, config.budget);
    IterationRow row{k, mk, ak, std::nullopt};
    if (k >= 2) {
      const double a_prev = res.rows.back().a_k;
      const double r = a_prev > 0.0 ? ak / a_prev : (ak == 0.0 ? 0.0 : INFINITY);
      row.ratio = r;
      res.max_ratio = std::max(res.max_ratio, std::isfinite(r) ? r : INFINITY);
      rising = ak > a_prev ? rising + 1 : 0;
      if (rising >= 3 && !res.diverged) {
        res.diverged = true;
        res.divergence = "A_k increased for 3 consecutive iterations at k = " + std::to_string(k);
      }
    }
    if (!std::isfinite(mk) || !std::isfinite(ak)) {
      if (!res.diverged) {
        res.diverged = true;
        res.divergence = "non-finite norms at k = " + std::to_string(k);
      }
    }
    if (!(mk <= bound)) res.bounded = false;
    res.rows.push_back(row);
  }
  res.contraction = !res.diverged && res.max_ratio <= config.rho;

  if (config.compare_direct && !res.diverged && !half_wk.empty()) {
    NonlinearOptions o;
    o.dt = dt;
    o.t_final = t0 + 0.5 * config.horizon;
    NonlinearResult direct = solve_nonlinear(data, config.q, basis, m, o);
    if (!direct.blowup) {
      const auto& ud = direct.trajectory.states.back().u;
      std::vector<double> v0(total), v0t(total), diff(total);
      cutoff_solution(red, o.t_final, v0, v0t);
      for (std::size_t p = 0; p < total; ++p) diff[p] = ud[p] - (v0[p] + half_wk[p]);
      const double den = weighted_norm(integ.op(), J, ud);
      res.direct_mismatch = den > 0.0 ? weighted_norm(integ.op(), J, diff) / den : weighted_norm(integ.op(), J, diff);
    } else {
      res.direct_mismatch = INFINITY;
    }
  }

  EstimateReport& rep = res.report;
  rep.name = "picard";
  rep.set_sides(res.max_ratio, config.rho);
  rep.tolerance = config.rho;
  rep.add_param("epsilon", data.epsilon);
  rep.add_param("horizon", config.horizon);
  rep.add_param("k_max", K);
  rep.add_param("c0", res.c0);
  rep.add_param("bound_4c0eps", bound);
  if (res.direct_mismatch) rep.add_param("direct_mismatch", *res.direct_mismatch);
  rep.pass = res.contraction && res.bounded && (!res.direct_mismatch || *res.direct_mismatch < 1e-3);
  rep.note = res.diverged ? res.divergence : "commutator term treated implicitly";
  return res;
}

std::vector<SweepRow> contraction_sweep(const std::vector<double>& eps_list, const IterationConfig& base,
                                        double c_hat, double fraction, double horizon_cap, const ModeBasis& basis,
                                        const DataFactory& factory) {
  if (eps_list.size() < 3) throw ValidationError("contraction sweep needs at least 3 epsilon values");
  if (!(fraction > 0.0) || !(horizon_cap > 0.0)) throw ValidationError("fraction and horizon cap must be positive");
  if (!factory) throw ValidationError("contraction sweep needs a data factory");
  base.validate();
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw ValidationError("epsilon values must be positive");
    IterationConfig cfg = base;
    cfg.epsilon = eps;
    const double law = fraction * std::exp(std::min(c_hat / eps, 700.0));
    cfg.horizon = std::min(law, horizon_cap);
    cfg.compare_direct = false;
    const RadialGrid grid = RadialGrid::for_horizon(cfg.q.n, 1.0, cfg.horizon, cfg.h);
    const CauchyData data = factory(eps, grid);
    SweepRow row;
    row.epsilon = eps;
    row.horizon = cfg.horizon;
    try {
      const auto r = picard_iterate(cfg, data, basis);
      row.max_ratio = r.max_ratio;
      row.contraction = r.contraction;
      row.diverged = r.diverged;
      row.divergence = r.divergence;
    } catch (const InstabilityError& e) {
      row.diverged = true;
      row.divergence = e.what();
      row.max_ratio = INFINITY;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wglab
