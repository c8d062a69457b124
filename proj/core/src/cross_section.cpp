#include "wglab/cross_section.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"

namespace wglab {

std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann";
}

BoundaryCondition parse_boundary_condition(const std::string& text) {
  if (text == "dirichlet" || text == "Dirichlet" || text == "D") return BoundaryCondition::Dirichlet;
  if (text == "neumann" || text == "Neumann" || text == "N") return BoundaryCondition::Neumann;
  throw ValidationError("unknown boundary condition '" + text + "'");
}

std::array<double, 2> CrossSectionSpec::lengths() const {
  if (const auto* r = std::get_if<Rectangle>(&shape)) return {r->length_x, r->length_y};
  return {std::get<Interval>(shape).length, 0.0};
}

double CrossSectionSpec::measure() const {
  const auto l = lengths();
  return dimension() == 2 ? l[0] * l[1] : l[0];
}

void CrossSectionSpec::validate() const {
  const auto l = lengths();
  for (int a = 0; a < dimension(); ++a) {
    if (!(l[a] > 0.0) || !std::isfinite(l[a])) {
      throw ValidationError("cross-section lengths must be positive and finite");
    }
  }
  if (resolution < 8) throw ValidationError("cross-section resolution must be at least 8");
}

namespace {

// One axis worth of modes: lambda per mode, values and derivatives on the grid.
struct Axis {
  std::vector<double> lambda;
  std::vector<int> label;
  std::vector<double> values;  // K x N
  std::vector<double> grads;   // K x N
  int points = 0;
};

std::vector<double> trapezoid_weights(int n, double length) {
  const double h = length / (n - 1);
  std::vector<double> w(static_cast<std::size_t>(n), h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

Axis closed_form_axis(BoundaryCondition bc, int n, double length, int k) {
  Axis ax;
  ax.points = n;
  const double h = length / (n - 1);
  const double amp = std::sqrt(2.0 / length);
  for (int m = 0; m < k; ++m) {
    const int a = bc == BoundaryCondition::Dirichlet ? m + 1 : m;
    const double kappa = a * std::numbers::pi / length;
    ax.lambda.push_back(kappa);
    ax.label.push_back(a);
    for (int q = 0; q < n; ++q) {
      const double y = q * h;
      double v, g;
      if (bc == BoundaryCondition::Dirichlet) {
        v = amp * std::sin(kappa * y);
        g = amp * kappa * std::cos(kappa * y);
      } else if (a == 0) {
        v = 1.0 / std::sqrt(length);
        g = 0.0;
      } else {
        v = amp * std::cos(kappa * y);
        g = -amp * kappa * std::sin(kappa * y);
      }
      ax.values.push_back(v);
      ax.grads.push_back(g);
    }
  }
  return ax;
}

// Second-order differences; one-sided three-point rule at the ends.
void difference(std::span<const double> v, double h, std::span<double> out) {
  const std::size_t n = v.size();
  for (std::size_t q = 1; q + 1 < n; ++q) out[q] = (v[q + 1] - v[q - 1]) / (2.0 * h);
  out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
}

Axis finite_difference_axis(BoundaryCondition bc, int n, double length, int k) {
  Axis ax;
  ax.points = n;
  const int m_int = n - 1;
  const double h = length / m_int;
  const auto w = trapezoid_weights(n, length);

  Eigen::VectorXd diag, sub;
  if (bc == BoundaryCondition::Dirichlet) {
    // Unknowns at interior points only; weights are all h there.
    const int size = m_int - 1;
    diag = Eigen::VectorXd::Constant(size, 2.0 / (h * h));
    sub = Eigen::VectorXd::Constant(size - 1, -1.0 / (h * h));
  } else {
    // Reflection at both ends, symmetrized by the trapezoid weights:
    // S = W A has rows (u0 - u1)/h and (-u_{q-1} + 2u_q - u_{q+1})/h.
    const int size = n;
    diag.resize(size);
    sub.resize(size - 1);
    for (int q = 0; q < size; ++q) {
      const double s_qq = (q == 0 || q == size - 1) ? 1.0 / h : 2.0 / h;
      diag[q] = s_qq / w[static_cast<std::size_t>(q)];
    }
    for (int q = 0; q + 1 < size; ++q) {
      sub[q] = -1.0 / h / std::sqrt(w[static_cast<std::size_t>(q)] * w[static_cast<std::size_t>(q + 1)]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error("tridiagonal eigensolve failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const Eigen::MatrixXd& vec = solver.eigenvectors();

  std::vector<double> v(static_cast<std::size_t>(n)), g(static_cast<std::size_t>(n));
  for (int m = 0; m < k; ++m) {
    if (bc == BoundaryCondition::Dirichlet) {
      std::fill(v.begin(), v.end(), 0.0);
      for (int q = 1; q < m_int; ++q) v[static_cast<std::size_t>(q)] = vec(q - 1, m) / std::sqrt(h);
      if (v[1] < 0.0) {
        for (auto& x : v) x = -x;
      }
      ax.lambda.push_back(std::sqrt(std::max(ev[m], 0.0)));
      ax.label.push_back(m + 1);
    } else if (m == 0) {
      // The zero mode is exact by construction; the computed one is discarded.
      std::fill(v.begin(), v.end(), 1.0 / std::sqrt(length));
      ax.lambda.push_back(0.0);
      ax.label.push_back(0);
    } else {
      for (int q = 0; q < n; ++q) {
        v[static_cast<std::size_t>(q)] = vec(q, m) / std::sqrt(w[static_cast<std::size_t>(q)]);
      }
      if (v[0] < 0.0) {
        for (auto& x : v) x = -x;
      }
      ax.lambda.push_back(std::sqrt(std::max(ev[m], 0.0)));
      ax.label.push_back(m);
    }
    if (bc == BoundaryCondition::Neumann && m == 0) {
      std::fill(g.begin(), g.end(), 0.0);
    } else {
      difference(v, h, g);
    }
    ax.values.insert(ax.values.end(), v.begin(), v.end());
    ax.grads.insert(ax.grads.end(), g.begin(), g.end());
  }
  return ax;
}

Axis make_axis(BasisBackend backend, BoundaryCondition bc, int n, double length, int k) {
  return backend == BasisBackend::ClosedForm ? closed_form_axis(bc, n, length, k)
                                             : finite_difference_axis(bc, n, length, k);
}

}  // namespace

ModeBasis build_mode_basis(const CrossSectionSpec& spec, int j_max, BasisBackend backend) {
  spec.validate();
  if (j_max < 1) throw ValidationError("j_max must be positive");
  if (j_max > spec.resolution / 2) {
    throw ResolutionError("j_max " + std::to_string(j_max) + " exceeds resolution/2 = " +
                          std::to_string(spec.resolution / 2));
  }
  ModeBasis b;
  b.spec_ = spec;
  b.backend_ = backend;
  const int n = spec.resolution;
  const auto len = spec.lengths();

  if (spec.dimension() == 1) {
    Axis ax = make_axis(backend, spec.bc, n, len[0], j_max);
    b.lambdas_ = ax.lambda;
    b.values_ = ax.values;
    b.gradients_ = ax.grads;
    b.weights_ = trapezoid_weights(n, len[0]);
    const double h = len[0] / (n - 1);
    for (int q = 0; q < n; ++q) b.coords_.push_back(q * h);
    for (int a : ax.label) b.labels_.emplace_back(a, 0);
    b.axis_points_ = {n, 1};
    return b;
  }

  Axis ax = make_axis(backend, spec.bc, n, len[0], j_max);
  Axis ay = make_axis(backend, spec.bc, n, len[1], j_max);
  struct Cand {
    double lam2;
    int a, b, ia, ib;
  };
  std::vector<Cand> cands;
  for (int ia = 0; ia < j_max; ++ia) {
    for (int ib = 0; ib < j_max; ++ib) {
      const double l2 = ax.lambda[ia] * ax.lambda[ia] + ay.lambda[ib] * ay.lambda[ib];
      cands.push_back({l2, ax.label[ia], ay.label[ib], ia, ib});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& p, const Cand& q) {
    if (p.lam2 != q.lam2) return p.lam2 < q.lam2;
    if (p.a != q.a) return p.a < q.a;
    return p.b < q.b;
  });
  const int npts = n * n;
  const auto wx = trapezoid_weights(n, len[0]);
  const auto wy = trapezoid_weights(n, len[1]);
  b.weights_.resize(static_cast<std::size_t>(npts));
  b.coords_.resize(static_cast<std::size_t>(2 * npts));
  const double hx = len[0] / (n - 1), hy = len[1] / (n - 1);
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      const int q = ix * n + iy;
      b.weights_[static_cast<std::size_t>(q)] = wx[ix] * wy[iy];
      b.coords_[static_cast<std::size_t>(q)] = ix * hx;
      b.coords_[static_cast<std::size_t>(npts + q)] = iy * hy;
    }
  }
  b.values_.resize(static_cast<std::size_t>(j_max * npts));
  b.gradients_.resize(static_cast<std::size_t>(2 * j_max * npts));
  for (int j = 0; j < j_max; ++j) {
    const Cand& c = cands[static_cast<std::size_t>(j)];
    b.lambdas_.push_back(std::sqrt(c.lam2));
    b.labels_.emplace_back(c.a, c.b);
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        const int q = ix * n + iy;
        const double vx = ax.values[static_cast<std::size_t>(c.ia * n + ix)];
        const double vy = ay.values[static_cast<std::size_t>(c.ib * n + iy)];
        const double gx = ax.grads[static_cast<std::size_t>(c.ia * n + ix)];
        const double gy = ay.grads[static_cast<std::size_t>(c.ib * n + iy)];
        b.values_[static_cast<std::size_t>(j * npts + q)] = vx * vy;
        b.gradients_[static_cast<std::size_t>(j * npts + q)] = gx * vy;
        b.gradients_[static_cast<std::size_t>((j_max + j) * npts + q)] = vx * gy;
      }
    }
  }
  b.axis_points_ = {n, n};
  return b;
}

std::span<const double> ModeBasis::mode(int j) const {
  if (j < 0 || j >= size()) throw ValidationError("mode index out of range");
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(j * points()),
                                                  static_cast<std::size_t>(points()));
}

std::span<const double> ModeBasis::mode_gradient(int j, int axis) const {
  if (j < 0 || j >= size()) throw ValidationError("mode index out of range");
  if (axis < 0 || axis >= dimension()) throw ValidationError("axis out of range");
  return std::span<const double>(gradients_)
      .subspan(static_cast<std::size_t>((axis * size() + j) * points()), static_cast<std::size_t>(points()));
}

std::span<const double> ModeBasis::coordinates(int axis) const {
  if (axis < 0 || axis >= dimension()) throw ValidationError("axis out of range");
  return std::span<const double>(coords_).subspan(static_cast<std::size_t>(axis * points()),
                                                  static_cast<std::size_t>(points()));
}

std::vector<BoundaryPoint> ModeBasis::boundary_points() const {
  std::vector<BoundaryPoint> out;
  if (dimension() == 1) {
    out.push_back({0, {-1.0, 0.0}});
    out.push_back({points() - 1, {1.0, 0.0}});
    return out;
  }
  const int n = axis_points_[0];
  for (int k = 0; k < n; ++k) {
    out.push_back({0 * n + k, {-1.0, 0.0}});
    out.push_back({(n - 1) * n + k, {1.0, 0.0}});
    out.push_back({k * n + 0, {0.0, -1.0}});
    out.push_back({k * n + (n - 1), {0.0, 1.0}});
  }
  return out;
}

std::vector<double> ModeBasis::project(std::span<const double> field) const {
  if (static_cast<int>(field.size()) != points()) {
    throw ValidationError("project: field has " + std::to_string(field.size()) + " values, grid has " +
                          std::to_string(points()));
  }
  std::vector<double> c(static_cast<std::size_t>(size()));
  for (int j = 0; j < size(); ++j) c[static_cast<std::size_t>(j)] = inner(field, mode(j));
  return c;
}

std::vector<double> ModeBasis::reconstruct(std::span<const double> coeffs) const {
  if (static_cast<int>(coeffs.size()) != size()) throw ValidationError("reconstruct: wrong coefficient count");
  std::vector<double> f(static_cast<std::size_t>(points()), 0.0);
  for (int j = 0; j < size(); ++j) {
    const auto e = mode(j);
    for (int q = 0; q < points(); ++q) f[static_cast<std::size_t>(q)] += coeffs[static_cast<std::size_t>(j)] * e[q];
  }
  return f;
}

double ModeBasis::inner(std::span<const double> f, std::span<const double> g) const {
  if (static_cast<int>(f.size()) != points() || static_cast<int>(g.size()) != points()) {
    throw ValidationError("inner: grid mismatch");
  }
  CompensatedSum s;
  for (int q = 0; q < points(); ++q) s.add(weights_[static_cast<std::size_t>(q)] * f[q] * g[q]);
  return s.value();
}

void ModeBasis::analyze(std::span<const double> physical, std::span<double> modes, int columns) const {
  const std::size_t c = static_cast<std::size_t>(columns);
  if (physical.size() != c * static_cast<std::size_t>(points()) || modes.size() != c * static_cast<std::size_t>(size())) {
    throw ValidationError("analyze: layout mismatch");
  }
  std::fill(modes.begin(), modes.end(), 0.0);
  for (int j = 0; j < size(); ++j) {
    const auto e = mode(j);
    double* out = modes.data() + static_cast<std::size_t>(j) * c;
    for (int q = 0; q < points(); ++q) {
      const double coef = weights_[static_cast<std::size_t>(q)] * e[q];
      const double* in = physical.data() + static_cast<std::size_t>(q) * c;
      for (std::size_t i = 0; i < c; ++i) out[i] += coef * in[i];
    }
  }
}

namespace {
void synth(std::span<const double> table, int nmodes, int npts, std::span<const double> modes,
           std::span<double> physical, int columns) {
  const std::size_t c = static_cast<std::size_t>(columns);
  if (modes.size() != c * static_cast<std::size_t>(nmodes) || physical.size() != c * static_cast<std::size_t>(npts)) {
    throw ValidationError("synthesize: layout mismatch");
  }
  std::fill(physical.begin(), physical.end(), 0.0);
  for (int q = 0; q < npts; ++q) {
    double* out = physical.data() + static_cast<std::size_t>(q) * c;
    for (int j = 0; j < nmodes; ++j) {
      const double coef = table[static_cast<std::size_t>(j * npts + q)];
      const double* in = modes.data() + static_cast<std::size_t>(j) * c;
      for (std::size_t i = 0; i < c; ++i) out[i] += coef * in[i];
    }
  }
}
}  // namespace

void ModeBasis::synthesize(std::span<const double> modes, std::span<double> physical, int columns) const {
  synth(values_, size(), points(), modes, physical, columns);
}

void ModeBasis::synthesize_gradient(std::span<const double> modes, std::span<double> physical, int columns,
                                    int axis) const {
  if (axis < 0 || axis >= dimension()) throw ValidationError("axis out of range");
  synth(std::span<const double>(gradients_).subspan(static_cast<std::size_t>(axis * size() * points()),
                                                    static_cast<std::size_t>(size() * points())),
        size(), points(), modes, physical, columns);
}

double ModeBasis::gram_deviation() const {
  double dev = 0.0;
  for (int a = 0; a < size(); ++a) {
    for (int b = a; b < size(); ++b) {
      const double g = inner(mode(a), mode(b));
      dev = std::max(dev, std::abs(g - (a == b ? 1.0 : 0.0)));
    }
  }
  return dev;
}

double ModeBasis::eigen_residual(int j) const {
  const auto e = mode(j);
  const double l2 = lambda(j) * lambda(j);
  const auto len = spec_.lengths();
  double worst = 0.0;
  if (dimension() == 1) {
    const int n = points();
    const double h = len[0] / (n - 1);
    for (int q = 1; q + 1 < n; ++q) {
      const double lap = (e[q - 1] - 2.0 * e[q] + e[q + 1]) / (h * h);
      worst = std::max(worst, std::abs(lap + l2 * e[q]));
    }
    return worst;
  }
  const int n = axis_points_[0];
  const double hx = len[0] / (n - 1), hy = len[1] / (n - 1);
  for (int ix = 1; ix + 1 < n; ++ix) {
    for (int iy = 1; iy + 1 < n; ++iy) {
      const int q = ix * n + iy;
      const double lap = (e[q - n] - 2.0 * e[q] + e[q + n]) / (hx * hx) + (e[q - 1] - 2.0 * e[q] + e[q + 1]) / (hy * hy);
      worst = std::max(worst, std::abs(lap + l2 * e[q]));
    }
  }
  return worst;
}

double weyl_constant(const CrossSectionSpec& spec) {
  const auto len = spec.lengths();
  if (spec.dimension() == 1) return std::numbers::pi / len[0];
  // N(lambda) ~ |Omega| lambda^2 / (4 pi)
  return std::sqrt(4.0 * std::numbers::pi / (len[0] * len[1]));
}

EstimateReport weyl_check(const ModeBasis& basis, int d, double lo, double hi) {
  if (d != basis.dimension()) throw ValidationError("weyl_check: dimension does not match the basis");
  if (basis.size() < 20) throw ValidationError("weyl_check: needs at least 20 modes");
  double mn = INFINITY, mx = 0.0;
  for (int j = 10; j <= basis.size(); ++j) {
    const double v = basis.lambda(j - 1) * std::pow(static_cast<double>(j), -1.0 / d);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  const double c = weyl_constant(basis.spec());
  EstimateReport r;
  r.name = "weyl";
  r.set_sides(mx, mn);
  r.add_param("d", d);
  r.add_param("j_max", basis.size());
  r.add_param("min_ratio", mn);
  r.add_param("max_ratio", mx);
  r.add_param("weyl_constant", c);
  r.tolerance = hi;
  r.pass = mn >= lo * c && mx <= hi * c;
  return r;
}

}  // namespace wglab
