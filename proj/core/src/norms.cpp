#include "wglab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"

namespace wglab {

void GammaBudget::validate() const {
  if (tx < 0 || rotations < 0 || y < 0 || total < 0) throw ValidationError("gamma budget entries must be >= 0");
  if (total > 2) throw ValidationError("gamma budget total order must be <= 2");
  if (tx > 1) throw ValidationError("gamma budget supports at most one d_{t,x} factor");
}

std::vector<std::array<int, 3>> GammaBudget::classes() const {
  validate();
  std::vector<std::array<int, 3>> out;
  for (int order = 0; order <= total; ++order) {
    for (int a = 0; a <= 1; ++a) {
      for (int b = 0; b <= 1; ++b) {
        const int c = order - a - b;
        if (c < 0 || a + b > tx || c > y) continue;
        out.push_back({a, b, c});
      }
    }
  }
  return out;
}

namespace {

// u_r, u_rr and u_r / r of a physical radial profile.
struct RadialJet {
  std::vector<double> ur, urr, ur_r;
};

void radial_jet(const RadialOperator& op, std::span<const double> u, RadialJet& jet) {
  const int nr = op.size();
  const double h = op.grid().h;
  jet.ur.resize(static_cast<std::size_t>(nr));
  jet.urr.resize(static_cast<std::size_t>(nr));
  jet.ur_r.resize(static_cast<std::size_t>(nr));
  op.gradient(u, jet.ur);
  jet.urr[0] = 2.0 * (u[1] - u[0]) / (h * h);
  for (int i = 1; i + 1 < nr; ++i) jet.urr[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
  jet.urr[nr - 1] = 0.0;
  jet.ur_r[0] = jet.urr[0];
  for (int i = 1; i < nr; ++i) jet.ur_r[i] = jet.ur[i] / op.grid().r(i);
}

double sq(double x) { return x * x; }

}  // namespace

double energy(const KGState& state, const RadialGrid& grid) {
  RadialOperator op(grid);
  if (static_cast<int>(state.u.size()) != op.size() || state.ut.size() != state.u.size()) {
    throw ValidationError("state does not match the grid");
  }
  std::vector<double> ur(state.u.size());
  op.gradient(state.u, ur);
  CompensatedSum s;
  for (int i = 0; i < op.size(); ++i) {
    s.add(op.quadrature_weight(i) * (sq(state.ut[i]) + sq(ur[i]) + sq(state.mu * state.u[i])));
  }
  return s.value();
}

namespace {

void check_field(const WaveguideField& f, const RadialGrid& grid, const ModeBasis& basis) {
  const std::size_t want = static_cast<std::size_t>(basis.size()) * grid.size();
  if (f.modes != basis.size() || f.columns != grid.size() || f.u.size() != want || f.ut.size() != want) {
    throw ValidationError("field layout does not match grid and basis");
  }
}

}  // namespace

double energy(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis, double m) {
  check_field(field, grid, basis);
  RadialOperator op(grid);
  const int nr = op.size();
  std::vector<double> ur(static_cast<std::size_t>(nr));
  CompensatedSum s;
  for (int j = 0; j < basis.size(); ++j) {
    std::span<const double> u(field.u.data() + static_cast<std::size_t>(j) * nr, static_cast<std::size_t>(nr));
    std::span<const double> ut(field.ut.data() + static_cast<std::size_t>(j) * nr, static_cast<std::size_t>(nr));
    op.gradient(u, ur);
    const double mu2 = m * m + sq(basis.lambda(j));
    for (int i = 0; i < nr; ++i) s.add(op.quadrature_weight(i) * (sq(ut[i]) + sq(ur[i]) + mu2 * sq(u[i])));
  }
  return s.value();
}

double energy_physical(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis, double m) {
  check_field(field, grid, basis);
  RadialOperator op(grid);
  const int nr = op.size();
  const int P = basis.points();
  const std::vector<double> u = field.physical(basis);
  const std::vector<double> ut = field.physical_ut(basis);
  std::vector<std::vector<double>> uy(static_cast<std::size_t>(basis.dimension()),
                                      std::vector<double>(u.size()));
  for (int a = 0; a < basis.dimension(); ++a) basis.synthesize_gradient(field.u, uy[static_cast<std::size_t>(a)], nr, a);
  std::vector<double> ur(static_cast<std::size_t>(nr));
  const auto w = basis.weights();
  CompensatedSum s;
  for (int q = 0; q < P; ++q) {
    const std::size_t off = static_cast<std::size_t>(q) * nr;
    op.gradient(std::span<const double>(u.data() + off, static_cast<std::size_t>(nr)), ur);
    for (int i = 0; i < nr; ++i) {
      double e = sq(ut[off + i]) + sq(ur[i]) + sq(m * u[off + i]);
      for (const auto& g : uy) e += sq(g[off + i]);
      s.add(w[q] * op.quadrature_weight(i) * e);
    }
  }
  return s.value();
}

EstimateReport poincare_check(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis) {
  check_field(field, grid, basis);
  const double l1 = basis.lambda(0);
  if (!(l1 > 0.0)) throw ValidationError("Poincare bound needs a positive first eigenvalue (Dirichlet)");
  RadialOperator op(grid);
  const int nr = op.size();
  const std::vector<double> u = field.physical(basis);
  std::vector<double> g(u.size());
  const auto w = basis.weights();
  CompensatedSum lhs, rhs;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const int q = static_cast<int>(k / static_cast<std::size_t>(nr));
    const int i = static_cast<int>(k % static_cast<std::size_t>(nr));
    lhs.add(w[q] * op.quadrature_weight(i) * sq(u[k]));
  }
  for (int a = 0; a < basis.dimension(); ++a) {
    basis.synthesize_gradient(field.u, g, nr, a);
    for (std::size_t k = 0; k < u.size(); ++k) {
      const int q = static_cast<int>(k / static_cast<std::size_t>(nr));
      const int i = static_cast<int>(k % static_cast<std::size_t>(nr));
      rhs.add(w[q] * op.quadrature_weight(i) * sq(g[k]));
    }
  }
  EstimateReport rep;
  rep.name = "poincare";
  rep.set_sides(std::sqrt(lhs.value()), std::sqrt(rhs.value()) / l1);
  rep.add_param("lambda_1", l1);
  rep.tolerance = 1e-10;
  rep.pass = !rep.degenerate && rep.lhs <= rep.rhs * (1.0 + rep.tolerance);
  return rep;
}

// ---------------------------------------------------------------------------

std::string to_string(KssVariant v) {
  switch (v) {
    case KssVariant::LogWeighted: return "log";
    case KssVariant::SigmaWeighted: return "sigma";
    case KssVariant::Waveguide: return "waveguide";
    case KssVariant::WaveguideSigma: return "waveguide-sigma";
  }
  return "?";
}

KssVariant parse_kss_variant(const std::string& text) {
  for (auto v : {KssVariant::LogWeighted, KssVariant::SigmaWeighted, KssVariant::Waveguide, KssVariant::WaveguideSigma}) {
    if (to_string(v) == text) return v;
  }
  throw ValidationError("unknown KSS variant '" + text + "'");
}

EstimateReport kss_ratio(const KGTrajectory& traj, const KssSource& source, KssVariant variant, double sigma,
                         double T) {
  if (variant != KssVariant::LogWeighted && variant != KssVariant::SigmaWeighted) {
    throw ValidationError("radial trajectories support the log and sigma variants only");
  }
  if (variant == KssVariant::SigmaWeighted && !(sigma > 0.0)) throw ValidationError("sigma must be positive");
  if (traj.states.size() < 2) throw ValidationError("KSS needs at least two snapshots");
  const double t0 = traj.states.front().t;
  if (!(T > t0) || T > traj.states.back().t + 1e-9) throw ValidationError("T outside the trajectory");
  RadialOperator op(traj.grid);
  const int nr = op.size();
  const double s = variant == KssVariant::SigmaWeighted ? sigma : 0.0;

  std::vector<double> wgt(static_cast<std::size_t>(nr)), wlow(wgt.size());
  for (int i = 0; i < nr; ++i) {
    const double jx = japanese(traj.grid.r(i));
    wgt[i] = op.quadrature_weight(i) * std::pow(jx, -1.0 - s);
    wlow[i] = wgt[i] / jx;
  }
  std::vector<double> ts, lhs_t, rhs_t;
  std::vector<double> ur(static_cast<std::size_t>(nr)), F(static_cast<std::size_t>(nr));
  for (const auto& st : traj.states) {
    if (st.t > T + 1e-9) break;
    op.gradient(st.u, ur);
    const double mu = st.mu;
    CompensatedSum acc;
    for (int i = 0; i < nr; ++i) {
      acc.add(wgt[i] * sq(ur[i]) + wlow[i] / (1.0 + mu) * (sq(mu * st.u[i]) + sq(st.ut[i])));
    }
    ts.push_back(st.t);
    lhs_t.push_back(acc.value());
    double fn = 0.0;
    if (source.forcing) {
      std::fill(F.begin(), F.end(), 0.0);
      source.forcing(st.t, F);
      CompensatedSum fs;
      for (int i = 0; i < nr; ++i) fs.add(op.quadrature_weight(i) * sq(F[i]));
      fn = std::sqrt(fs.value());
    }
    rhs_t.push_back(fn);
  }
  if (ts.size() < 2) throw ValidationError("KSS needs at least two snapshots before T");
  double impulse = 0.0;
  if (!source.impulse.empty()) {
    if (static_cast<int>(source.impulse.size()) != nr) throw ValidationError("impulse does not match the grid");
    CompensatedSum is;
    for (int i = 0; i < nr; ++i) is.add(op.quadrature_weight(i) * sq(source.impulse[i]));
    impulse = std::sqrt(is.value());
  }
  const double lhs = std::sqrt(trapezoid(ts, lhs_t));
  double rhs = impulse + trapezoid(ts, rhs_t);
  const double logf = std::sqrt(std::log(2.0 + (T - t0)));
  if (variant == KssVariant::LogWeighted) rhs *= logf;

  EstimateReport rep;
  rep.name = "kss-" + to_string(variant);
  rep.set_sides(lhs, rhs);
  rep.add_param("mu", traj.states.front().mu);
  rep.add_param("T", T - t0);
  rep.add_param("sigma", s);
  rep.add_param("log_factor", logf);
  rep.pass = !rep.degenerate;
  if (lhs == 0.0 && rhs == 0.0) rep.degenerate = true;
  if (rep.degenerate) rep.pass = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Gamma functionals

namespace {

struct ProfileSettings {
  double weight_exponent = 1.0;  // spatial weight <x>^{-exponent} inside the squared norm
  bool log_factor = true;
  double log_origin = 0.0;       // log(2 + t - log_origin)
  bool free_equation = false;    // fill missing u_tt from the free equation
};

GammaProfile build_profile(const WaveguideTrajectory& traj, double T, const GammaBudget& budget,
                           const ProfileSettings& ps) {
  const auto classes = budget.classes();
  const auto& basis = traj.basis;
  RadialOperator op(traj.grid);
  const int nr = op.size();
  const int J = basis.size();
  const int n = traj.grid.n;
  const auto& st = traj.states;
  if (st.empty()) throw ValidationError("empty trajectory");
  for (const auto& f : st) check_field(f, traj.grid, basis);

  bool need_tt = false;
  for (const auto& c : classes) need_tt = need_tt || c[0] == 1;

  std::vector<double> wspace(static_cast<std::size_t>(nr));
  for (int i = 0; i < nr; ++i) {
    wspace[i] = op.quadrature_weight(i) * std::pow(japanese(traj.grid.r(i)), -ps.weight_exponent);
  }

  // u_tt for snapshot s, mode j into out.
  std::vector<double> lap(static_cast<std::size_t>(nr));
  RadialJet jet, jett;
  auto utt_of = [&](std::size_t s, int j, std::span<double> out) {
    const std::size_t off = static_cast<std::size_t>(j) * nr;
    if (!st[s].utt.empty()) {
      std::copy_n(st[s].utt.begin() + static_cast<std::ptrdiff_t>(off), nr, out.begin());
      return;
    }
    if (ps.free_equation) {
      std::span<const double> u(st[s].u.data() + off, static_cast<std::size_t>(nr));
      radial_jet(op, u, jet);
      const double mu2 = traj.m * traj.m + sq(basis.lambda(j));
      for (int i = 0; i < nr; ++i) out[i] = jet.urr[i] + (n - 1) * jet.ur_r[i] - mu2 * u[i];
      out[nr - 1] = 0.0;
      return;
    }
    if (st.size() < 2) throw ValidationError("time derivatives need two snapshots or stored accelerations");
    const std::size_t a = s == 0 ? 0 : s - 1;
    const std::size_t b = s + 1 < st.size() ? s + 1 : s;
    const double dt = st[b].t - st[a].t;
    for (int i = 0; i < nr; ++i) out[i] = (st[b].ut[off + i] - st[a].ut[off + i]) / dt;
  };

  GammaProfile prof;
  std::vector<double> cumulative(classes.size(), 0.0), prev_rate(classes.size(), 0.0);
  std::vector<double> utt(static_cast<std::size_t>(nr)), uttr(static_cast<std::size_t>(nr));
  for (std::size_t s = 0; s < st.size(); ++s) {
    if (st[s].t > T + 1e-9) break;
    std::vector<CompensatedSum> en(classes.size()), rate(classes.size());
    for (int j = 0; j < J; ++j) {
      const std::size_t off = static_cast<std::size_t>(j) * nr;
      std::span<const double> u(st[s].u.data() + off, static_cast<std::size_t>(nr));
      std::span<const double> ut(st[s].ut.data() + off, static_cast<std::size_t>(nr));
      radial_jet(op, u, jet);
      radial_jet(op, ut, jett);
      if (need_tt) {
        utt_of(s, j, utt);
        op.gradient(utt, uttr);
      }
      const double lam2 = sq(basis.lambda(j));
      for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto [a, b, cy] = classes[c];
        const double ly = std::pow(lam2, cy);
        if (ly == 0.0) continue;
        CompensatedSum e, r;
        for (int i = 0; i < nr; ++i) {
          double ee, rr;
          if (a == 1) {
            ee = sq(utt[i]) + sq(jett.ur[i]);
            rr = sq(jett.ur[i]);
          } else if (b == 1) {
            const double hess = sq(jet.urr[i]) + (n - 1) * sq(jet.ur_r[i]);
            ee = sq(jett.ur[i]) + hess;
            rr = hess;
          } else {
            ee = sq(ut[i]) + sq(jet.ur[i]);
            rr = sq(jet.ur[i]);
          }
          e.add(op.quadrature_weight(i) * ee);
          r.add(wspace[i] * rr);
        }
        en[c].add(ly * e.value());
        rate[c].add(ly * r.value());
      }
    }
    double etot = 0.0, stot = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const double rc = rate[c].value();
      if (s > 0) cumulative[c] += 0.5 * (st[s].t - st[s - 1].t) * (rc + prev_rate[c]);
      prev_rate[c] = rc;
      etot += en[c].value();
      stot += cumulative[c];
    }
    const double t = st[s].t;
    const double lf = ps.log_factor ? 1.0 / std::sqrt(std::log(2.0 + t - ps.log_origin)) : 1.0;
    prof.t.push_back(t);
    prof.energy.push_back(std::sqrt(etot));
    prof.spacetime.push_back(std::sqrt(stot));
    prof.total.push_back(std::sqrt(etot) + lf * std::sqrt(stot));
  }
  return prof;
}

ProfileSettings iteration_settings(int n) {
  ProfileSettings ps;
  if (n == 3) {
    ps.weight_exponent = 1.0;
    ps.log_factor = true;
  } else {
    ps.weight_exponent = 0.5 * (n - 1);
    ps.log_factor = false;
  }
  return ps;
}

}  // namespace

GammaProfile gamma_profile(const WaveguideTrajectory& traj, double T, const GammaBudget& budget) {
  return build_profile(traj, T, budget, iteration_settings(traj.grid.n));
}

double gamma_norm(const WaveguideTrajectory& traj, double T, const GammaBudget& budget) {
  const auto prof = gamma_profile(traj, T, budget);
  double best = 0.0;
  for (double v : prof.total) best = std::max(best, v);
  return best;
}

EstimateReport kss_ratio(const WaveguideTrajectory& traj, KssVariant variant, double sigma, double T,
                         const GammaBudget& budget) {
  if (variant != KssVariant::Waveguide && variant != KssVariant::WaveguideSigma) {
    throw ValidationError("waveguide trajectories support the waveguide variants only");
  }
  if (variant == KssVariant::WaveguideSigma && !(sigma > 0.0)) throw ValidationError("sigma must be positive");
  if (traj.states.size() < 2) throw ValidationError("KSS needs at least two snapshots");
  const double t0 = traj.states.front().t;
  if (!(T > t0) || T > traj.states.back().t + 1e-9) throw ValidationError("T outside the trajectory");
  ProfileSettings ps;
  ps.free_equation = true;
  ps.log_origin = t0;
  if (variant == KssVariant::Waveguide) {
    ps.weight_exponent = 1.0;
    ps.log_factor = true;
  } else {
    ps.weight_exponent = 1.0 + 2.0 * sigma;
    ps.log_factor = false;
  }
  const auto prof = build_profile(traj, T, budget, ps);
  EstimateReport rep;
  rep.name = "kss-" + to_string(variant);
  rep.set_sides(prof.total.back(), prof.energy.front());
  rep.add_param("T", prof.t.back() - t0);
  rep.add_param("sigma", variant == KssVariant::WaveguideSigma ? sigma : 0.0);
  rep.add_param("budget_total", budget.total);
  rep.note = "homogeneous form: RHS is the Gamma-truncated energy of the initial state";
  rep.pass = !rep.degenerate && !(rep.lhs == 0.0 && rep.rhs == 0.0);
  return rep;
}

WaveguideTrajectory difference(const WaveguideTrajectory& a, const WaveguideTrajectory& b) {
  if (!(a.grid == b.grid) || a.basis.size() != b.basis.size() || a.states.size() != b.states.size()) {
    throw ValidationError("trajectories do not share grid, basis and output times");
  }
  WaveguideTrajectory out{a.grid, a.basis, a.m, a.dt, {}};
  out.states.reserve(a.states.size());
  for (std::size_t s = 0; s < a.states.size(); ++s) {
    const auto& x = a.states[s];
    const auto& y = b.states[s];
    if (std::abs(x.t - y.t) > 1e-9 || x.u.size() != y.u.size()) {
      throw ValidationError("trajectories do not share output times");
    }
    WaveguideField f;
    f.modes = x.modes;
    f.columns = x.columns;
    f.t = x.t;
    f.u.resize(x.u.size());
    f.ut.resize(x.u.size());
    for (std::size_t k = 0; k < x.u.size(); ++k) {
      f.u[k] = x.u[k] - y.u[k];
      f.ut[k] = x.ut[k] - y.ut[k];
    }
    if (!x.utt.empty() && !y.utt.empty()) {
      f.utt.resize(x.u.size());
      for (std::size_t k = 0; k < x.u.size(); ++k) f.utt[k] = x.utt[k] - y.utt[k];
    }
    out.states.push_back(std::move(f));
  }
  return out;
}

std::pair<double, double> iteration_norms(const WaveguideTrajectory& wk, const WaveguideTrajectory& wk_prev,
                                          double T, const GammaBudget& budget) {
  const auto diff = difference(wk, wk_prev);
  return {gamma_norm(wk, T, budget), gamma_norm(diff, T, budget)};
}

// ---------------------------------------------------------------------------
// Energy inequality

namespace {

template <typename F>
double fd1(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}
template <typename F>
double fd2(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

std::string point_text(double t, double r, std::span<const double> y) {
  std::ostringstream os;
  os << "t=" << t << " r=" << r << " y=(";
  for (std::size_t a = 0; a < y.size(); ++a) os << (a ? "," : "") << y[a];
  os << ")";
  return os.str();
}

}  // namespace

EstimateReport verify_energy_inequality(const CoefficientField& gamma, const ManufacturedField& w, double m,
                                        BoundaryCondition bc, const RadialGrid& grid, const ModeBasis& basis,
                                        const EnergyInequalityOptions& opts) {
  grid.validate();
  if (!w.w) throw ValidationError("manufactured field is empty");
  const int d = basis.dimension();
  if (gamma.eval && gamma.d != d) throw ValidationError("coefficient field and cross-section disagree on d");
  if (!(opts.dt_sample > 0.0) || !(opts.t_final > opts.t_start)) throw ValidationError("bad sampling interval");
  const int D = 2 + d;
  const int n = grid.n;
  RadialOperator op(grid);
  const int nr = op.size();
  const int P = basis.points();
  const auto wq = basis.weights();
  const double hd = 1e-3;
  const double hg = 1e-4;

  std::vector<std::vector<double>> ypts(static_cast<std::size_t>(P), std::vector<double>(static_cast<std::size_t>(d)));
  for (int q = 0; q < P; ++q) {
    for (int a = 0; a < d; ++a) ypts[q][a] = basis.coordinates(a)[q];
  }
  auto W = [&](double t, double r, const std::vector<double>& y) { return w.w(t, std::abs(r), y); };
  auto shifted = [](std::vector<double> y, int a, double v) {
    y[static_cast<std::size_t>(a)] = v;
    return y;
  };
  std::vector<double> gbuf(static_cast<std::size_t>(D * D)), gp(gbuf.size()), gm(gbuf.size());
  auto G = [&](double t, double r, const std::vector<double>& y, std::vector<double>& out) {
    if (gamma.eval) {
      gamma.eval(t, r, y, out);
    } else {
      std::fill(out.begin(), out.end(), 0.0);
    }
  };

  const long samples = static_cast<long>(std::ceil((opts.t_final - opts.t_start) / opts.dt_sample - 1e-9));
  const double dts = (opts.t_final - opts.t_start) / static_cast<double>(samples);
  std::vector<double> ts, lhs, fnorm, gsum;
  const auto bpts = basis.boundary_points();

  for (long s = 0; s <= samples; ++s) {
    const double t = opts.t_start + static_cast<double>(s) * dts;
    CompensatedSum grad2, w2, f2;
    std::vector<double> dsup(static_cast<std::size_t>(D * D * D), 0.0);
    for (int q = 0; q < P; ++q) {
      const auto& y = ypts[q];
      for (int i = 0; i < nr; ++i) {
        const double r = grid.r(i);
        const double val = W(t, r, y);
        // First and second derivatives in reduced coordinates.
        std::vector<double> d1v(static_cast<std::size_t>(D)), d2v(static_cast<std::size_t>(D * D));
        auto along = [&](int c, double x) -> double {
          if (c == 0) return W(x, r, y);
          if (c == 1) return W(t, x, y);
          return W(t, r, shifted(y, c - 2, x));
        };
        auto coord = [&](int c) { return c == 0 ? t : (c == 1 ? r : y[static_cast<std::size_t>(c - 2)]); };
        for (int c = 0; c < D; ++c) {
          d1v[c] = fd1([&](double x) { return along(c, x); }, coord(c), hd);
          d2v[c * D + c] = fd2([&](double x) { return along(c, x); }, coord(c), hd);
        }
        for (int c = 0; c < D; ++c) {
          for (int e = c + 1; e < D; ++e) {
            auto inner = [&](double xc) {
              return fd1(
                  [&](double xe) {
                    double tt = t, rr = r;
                    std::vector<double> yy = y;
                    auto set = [&](int k, double v) {
                      if (k == 0) tt = v;
                      else if (k == 1) rr = v;
                      else yy[static_cast<std::size_t>(k - 2)] = v;
                    };
                    set(c, xc);
                    set(e, xe);
                    return W(tt, rr, yy);
                  },
                  coord(e), hd);
            };
            d2v[c * D + e] = d2v[e * D + c] = fd1(inner, coord(c), hd);
          }
        }
        const double lap_x = r > 1e-12 ? d2v[1 * D + 1] + (n - 1) / r * d1v[1] : n * d2v[1 * D + 1];
        double lap_y = 0.0;
        for (int a = 0; a < d; ++a) lap_y += d2v[(2 + a) * D + 2 + a];
        G(t, r, y, gbuf);
        double gsmall = 0.0;
        double F = d2v[0] - lap_x - lap_y + m * m * val;
        for (int j = 0; j < D; ++j) {
          for (int k = 0; k < D; ++k) {
            F += gbuf[j * D + k] * d2v[j * D + k];
            gsmall += std::abs(gbuf[j * D + k]);
          }
        }
        if (gsmall > 0.5 + 1e-12) {
          throw ValidationError("coefficient smallness sum |gamma| <= 1/2 violated at " + point_text(t, r, y));
        }
        const double wt = op.quadrature_weight(i) * wq[q];
        double g2 = 0.0;
        for (int c = 0; c < D; ++c) g2 += sq(d1v[c]);
        grad2.add(wt * g2);
        w2.add(wt * sq(val));
        f2.add(wt * sq(F));
        if (gamma.eval) {
          // Derivatives of gamma: centered, forward at the origin.
          for (int c = 0; c < D; ++c) {
            std::vector<double> yp = y, ym = y;
            double tp = t, tm = t, rp = r, rm = r;
            double width = 2.0 * hg;
            if (c == 0) {
              tp += hg;
              tm -= hg;
            } else if (c == 1) {
              rp += hg;
              rm = r - hg < 0.0 ? r : r - hg;
              width = rp - rm;
            } else {
              yp[static_cast<std::size_t>(c - 2)] += hg;
              ym[static_cast<std::size_t>(c - 2)] -= hg;
            }
            G(tp, rp, yp, gp);
            G(tm, rm, ym, gm);
            for (int jk = 0; jk < D * D; ++jk) {
              auto& slot = dsup[static_cast<std::size_t>(c * D * D + jk)];
              slot = std::max(slot, std::abs(gp[jk] - gm[jk]) / width);
            }
          }
        }
      }
    }
    if (gamma.eval && bc == BoundaryCondition::Neumann) {
      for (const auto& bp : bpts) {
        const auto& y = ypts[static_cast<std::size_t>(bp.index)];
        std::vector<double> theta(static_cast<std::size_t>(D), 0.0);
        for (int a = 0; a < d; ++a) theta[static_cast<std::size_t>(2 + a)] = bp.normal[static_cast<std::size_t>(a)];
        for (int i = 0; i < nr; ++i) {
          const double r = grid.r(i);
          G(t, r, y, gbuf);
          for (int c = 0; c < D; ++c) {
            // Tangent unit vectors: every axis except the normal one.
            if (theta[static_cast<std::size_t>(c)] != 0.0) continue;
            double sum = 0.0;
            for (int k = 0; k < D; ++k) sum += gbuf[c * D + k] * theta[static_cast<std::size_t>(k)];
            if (std::abs(sum) > 1e-12) {
              std::ostringstream wit;
              wit << point_text(t, r, y) << " theta=(";
              for (int k = 0; k < D; ++k) wit << (k ? "," : "") << theta[static_cast<std::size_t>(k)];
              wit << ") xi=e_" << c << " sum=" << sum;
              throw ConditionViolation("coefficients violate the Neumann boundary condition", wit.str());
            }
          }
        }
      }
    }
    double gs = 0.0;
    for (double v : dsup) gs += v;
    ts.push_back(t);
    lhs.push_back(std::sqrt(grad2.value()) + m * std::sqrt(w2.value()));
    fnorm.push_back(std::sqrt(f2.value()));
    gsum.push_back(gs);
  }

  EstimateReport rep;
  rep.name = "energy-inequality";
  double worst = -1.0;
  double int_f = 0.0, int_g = 0.0;
  bool degenerate = false;
  for (std::size_t s = 0; s < ts.size(); ++s) {
    if (s > 0) {
      const double h = ts[s] - ts[s - 1];
      int_f += 0.5 * h * (fnorm[s] + fnorm[s - 1]);
      int_g += 0.5 * h * (gsum[s] + gsum[s - 1]);
    }
    const double rhs = 2.0 * std::exp(2.0 * int_g) * (lhs.front() + int_f);
    if (rhs <= 0.0) {
      if (lhs[s] > 0.0) degenerate = true;
      continue;
    }
    const double ratio = lhs[s] / rhs;
    if (ratio > worst) {
      worst = ratio;
      rep.set_sides(lhs[s], rhs);
      rep.params.clear();
      rep.add_param("t", ts[s]);
    }
  }
  if (worst < 0.0) rep.set_sides(0.0, 0.0);
  rep.add_param("m", m);
  rep.add_param("forcing_l1", int_f);
  rep.add_param("gamma_l1", int_g);
  rep.tolerance = 1.0;
  rep.degenerate = rep.degenerate || degenerate;
  rep.pass = !rep.degenerate && worst >= 0.0 && worst <= 1.0;
  rep.note = "initial energy added to the forcing term";
  return rep;
}

}  // namespace wglab
