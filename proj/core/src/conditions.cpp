#include <algorithm>
#include <cmath>
#include <sstream>

#include "wglab/errors.hpp"
#include "wglab/waveguide.hpp"

namespace wglab {

namespace {

std::string vec_text(const std::vector<double>& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
  os << ")";
  return os.str();
}

// Orthonormal basis of theta^perp in R^D, built from the unit vectors.
std::vector<std::vector<double>> perp_basis(const std::vector<double>& theta) {
  const std::size_t D = theta.size();
  std::vector<std::vector<double>> out;
  for (std::size_t a = 0; a < D && out.size() + 1 < D; ++a) {
    std::vector<double> v(D, 0.0);
    v[a] = 1.0;
    auto project_out = [&](const std::vector<double>& b) {
      double dot = 0.0;
      for (std::size_t k = 0; k < D; ++k) dot += v[k] * b[k];
      for (std::size_t k = 0; k < D; ++k) v[k] -= dot * b[k];
    };
    project_out(theta);
    for (const auto& b : out) project_out(b);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (double& x : v) x /= norm;
    // Clean tiny round-off so witnesses print as unit vectors.
    for (double& x : v) {
      if (std::abs(x) < 1e-15) x = 0.0;
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

ConditionReport check_neumann_condition(const QuadraticForm& q, BoundaryCondition bc, const ModeBasis& basis) {
  q.validate();
  ConditionReport rep;
  if (bc == BoundaryCondition::Dirichlet) return rep;
  if (q.d != basis.dimension()) throw ValidationError("quadratic form and cross-section disagree on d");
  const int D = q.dim();
  auto sym3 = [&](int j, int k, int l) { return 0.5 * (q.a(j, k, l) + q.a(k, j, l)); };
  auto sym2 = [&](int j, int k) { return 0.5 * (q.b(j, k) + q.b(k, j)); };
  const double tol = 1e-12;

  for (const auto& bp : basis.boundary_points()) {
    std::vector<double> theta(static_cast<std::size_t>(D), 0.0);
    for (int a = 0; a < q.d; ++a) theta[static_cast<std::size_t>(1 + q.n + a)] = bp.normal[static_cast<std::size_t>(a)];
    const auto perp = perp_basis(theta);
    std::vector<double> y;
    for (int a = 0; a < basis.dimension(); ++a) y.push_back(basis.coordinates(a)[bp.index]);
    for (const auto& xi : perp) {
      for (const auto& eta : perp) {
        double s1 = 0.0;
        for (int j = 0; j < D; ++j) {
          for (int k = 0; k < D; ++k) {
            for (int l = 0; l < D; ++l) s1 += sym3(j, k, l) * xi[l] * eta[j] * theta[k];
          }
        }
        if (std::abs(s1) > rep.worst) rep.worst = std::abs(s1);
        if (std::abs(s1) > tol && rep.pass) {
          rep.pass = false;
          rep.witness = "first sum at y=" + vec_text(y) + " theta=" + vec_text(theta) + " xi=" + vec_text(xi) +
                        " eta=" + vec_text(eta) + " value=" + std::to_string(s1);
        }
      }
      double s2 = 0.0;
      for (int j = 0; j < D; ++j) {
        for (int k = 0; k < D; ++k) s2 += sym2(j, k) * xi[j] * theta[k];
      }
      if (std::abs(s2) > rep.worst) rep.worst = std::abs(s2);
      if (std::abs(s2) > tol && rep.pass) {
        rep.pass = false;
        rep.witness = "second sum at y=" + vec_text(y) + " theta=" + vec_text(theta) + " xi=" + vec_text(xi) +
                      " value=" + std::to_string(s2);
      }
    }
  }
  return rep;
}

bool CompatibilityReport::all_pass() const {
  return std::all_of(pass.begin(), pass.end(), [](bool b) { return b; });
}

namespace {

// Fourth-order centered differences of a scalar function of one variable.
template <typename F>
double d1(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}
template <typename F>
double d2(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

struct Jet {
  double u = 0.0;
  std::vector<double> du;   // d_0 .. d_{D-1}
  std::vector<double> ddu;  // D x D
};

}  // namespace

CompatibilityReport check_compatibility(const CauchyData& data, BoundaryCondition bc, double m,
                                        const QuadraticForm& q, int order, const ModeBasis& basis,
                                        double tolerance) {
  if (order < 0 || order > 2) throw ValidationError("compatibility order must be 0, 1 or 2");
  if (!data.profile.f) throw ValidationError("compatibility check needs the analytic data profile");
  q.validate();
  const int n = data.grid.n;
  const int dd = basis.dimension();
  if (q.n != n || q.d != dd) throw ValidationError("quadratic form does not match the waveguide dimensions");
  const int D = q.dim();
  const double eps = data.epsilon;
  const double hd = 1e-3;

  // Profiles as functions of (r, y) with even extension in r.
  auto F = [&](double r, const std::vector<double>& y) { return eps * data.profile.f(std::abs(r), y); };
  auto G = [&](double r, const std::vector<double>& y) {
    return data.profile.g ? eps * data.profile.g(std::abs(r), y) : 0.0;
  };
  auto shift = [](std::vector<double> y, int a, double s) {
    y[static_cast<std::size_t>(a)] += s;
    return y;
  };
  auto lap_x = [&](auto&& fn, double r, const std::vector<double>& y) {
    auto fr = [&](double s) { return fn(s, y); };
    const double frr = d2(fr, r, hd);
    if (r < 1e-12) return n * frr;
    return frr + (n - 1) / r * d1(fr, r, hd);
  };
  auto lap_y = [&](auto&& fn, double r, const std::vector<double>& y) {
    double s = 0.0;
    for (int a = 0; a < dd; ++a) s += d2([&](double v) { return fn(r, shift(y, a, v - y[a])); }, y[a], hd);
    return s;
  };
  // Q at t = 0 from the data jet at x = (r, 0, ..., 0). The u_tt slot uses the
  // linear part of the equation.
  auto q_value = [&](double r, const std::vector<double>& y) {
    if (q.is_zero()) return 0.0;
    Jet jt;
    jt.du.assign(static_cast<std::size_t>(D), 0.0);
    jt.ddu.assign(static_cast<std::size_t>(D * D), 0.0);
    jt.u = F(r, y);
    auto fr = [&](double s) { return F(s, y); };
    auto gr = [&](double s) { return G(s, y); };
    const double f_r = d1(fr, r, hd), f_rr = d2(fr, r, hd);
    jt.du[0] = G(r, y);
    jt.du[1] = f_r;
    auto at = [&](int j, int k) -> double& { return jt.ddu[static_cast<std::size_t>(j * D + k)]; };
    at(0, 0) = lap_x(F, r, y) + lap_y(F, r, y) - m * m * jt.u;
    at(0, 1) = at(1, 0) = d1(gr, r, hd);
    at(1, 1) = f_rr;
    for (int i = 2; i <= n; ++i) at(i, i) = r > 1e-12 ? f_r / r : f_rr;
    for (int a = 0; a < dd; ++a) {
      const int ya = 1 + n + a;
      auto fy = [&](double v) { return F(r, shift(y, a, v - y[a])); };
      auto gy = [&](double v) { return G(r, shift(y, a, v - y[a])); };
      jt.du[static_cast<std::size_t>(ya)] = d1(fy, y[a], hd);
      at(ya, ya) = d2(fy, y[a], hd);
      at(0, ya) = at(ya, 0) = d1(gy, y[a], hd);
      at(1, ya) = at(ya, 1) = d1([&](double s) { return d1([&](double v) { return F(s, shift(y, a, v - y[a])); }, y[a], hd); }, r, hd);
      for (int b = a + 1; b < dd; ++b) {
        const int yb = 1 + n + b;
        at(ya, yb) = at(yb, ya) =
            d1([&](double v) { return d1([&](double w) { return F(r, shift(shift(y, a, v - y[a]), b, w - y[b])); }, y[b], hd); },
               y[a], hd);
      }
    }
    double val = 0.0;
    for (int j = 0; j < D; ++j) {
      for (int k = 0; k < D; ++k) {
        const double h2 = at(j, k);
        for (int l = 0; l < D; ++l) val += q.a(j, k, l) * jt.du[static_cast<std::size_t>(l)] * h2;
        val += q.b(j, k) * jt.u * h2;
      }
    }
    std::vector<double> slot(static_cast<std::size_t>(D + 1));
    slot[0] = jt.u;
    for (int a = 0; a < D; ++a) slot[static_cast<std::size_t>(1 + a)] = jt.du[static_cast<std::size_t>(a)];
    for (int a = 0; a <= D; ++a) {
      for (int b = 0; b <= D; ++b) val += q.r(a, b) * slot[static_cast<std::size_t>(a)] * slot[static_cast<std::size_t>(b)];
    }
    return val;
  };
  auto psi = [&](int k, double r, const std::vector<double>& y) {
    if (k == 0) return F(r, y);
    if (k == 1) return G(r, y);
    return lap_x(F, r, y) + lap_y(F, r, y) - m * m * F(r, y) + q_value(r, y);
  };

  CompatibilityReport rep;
  rep.order = order;
  rep.tolerance = tolerance;
  double scale = 0.0;
  for (double v : data.f) scale = std::max(scale, std::abs(v));
  for (double v : data.g) scale = std::max(scale, std::abs(v));
  rep.residual.assign(static_cast<std::size_t>(order + 1), 0.0);

  const double hn = 1e-2;  // outer step for normal derivatives of psi
  for (const auto& bp : basis.boundary_points()) {
    std::vector<double> y;
    for (int a = 0; a < dd; ++a) y.push_back(basis.coordinates(a)[bp.index]);
    for (int i = 0; i < data.grid.size(); ++i) {
      const double r = data.grid.r(i);
      if (r > data.support + 2.0 * data.grid.h) break;
      for (int k = 0; k <= order; ++k) {
        double v;
        if (bc == BoundaryCondition::Dirichlet) {
          v = psi(k, r, y);
        } else {
          v = 0.0;
          for (int a = 0; a < dd; ++a) {
            const double na = bp.normal[static_cast<std::size_t>(a)];
            if (na == 0.0) continue;
            const double step = k == 2 ? hn : hd;
            v += na * d1([&](double s) { return psi(k, r, shift(y, a, s - y[a])); }, y[a], step);
          }
        }
        rep.residual[static_cast<std::size_t>(k)] = std::max(rep.residual[static_cast<std::size_t>(k)], std::abs(v));
      }
    }
  }
  for (int k = 0; k <= order; ++k) {
    rep.pass.push_back(rep.residual[static_cast<std::size_t>(k)] <= tolerance * std::max(scale, 1e-300) ||
                       rep.residual[static_cast<std::size_t>(k)] == 0.0);
  }
  return rep;
}

}  // namespace wglab
