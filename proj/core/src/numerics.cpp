#include "wglab/numerics.hpp"

#include <numbers>

#include "wglab/errors.hpp"

namespace wglab {

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("trapezoid: size mismatch");
  CompensatedSum s;
  for (std::size_t i = 1; i < x.size(); ++i) {
    s.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
  }
  return s.value();
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("fit_line: need at least two paired samples");
  }
  const double n = static_cast<double>(x.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  if (sxx.value() <= 0.0) throw ValidationError("fit_line: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum res;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    res.add(e * e);
  }
  fit.r_squared = syy.value() > 0.0 ? 1.0 - res.value() / syy.value() : 1.0;
  return fit;
}

double sphere_area(int n) {
  if (n < 1) throw ValidationError("sphere_area: dimension must be positive");
  // 2 pi^{n/2} / Gamma(n/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double polynomial_bump(double r, double radius, int power) {
  const double s = r / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::pow(1.0 - s * s, power);
}

namespace {
double psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double psi_d1(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }
double psi_d2(double s) {
  return s > 0.0 ? std::exp(-1.0 / s) * (1.0 - 2.0 * s) / (s * s * s * s) : 0.0;
}
}  // namespace

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = psi(s), b = psi(1.0 - s);
  return a / (a + b);
}

double smooth_step_d1(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = psi(s), b = psi(1.0 - s);
  const double da = psi_d1(s), db = -psi_d1(1.0 - s);
  const double d = a + b;
  return (da * d - a * (da + db)) / (d * d);
}

double smooth_step_d2(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = psi(s), b = psi(1.0 - s);
  const double da = psi_d1(s), db = -psi_d1(1.0 - s);
  const double dda = psi_d2(s), ddb = psi_d2(1.0 - s);
  const double d = a + b, dd = da + db, ddd = dda + ddb;
  // (a/d)'' = a''/d - 2a'd'/d^2 - a d''/d^2 + 2a d'^2/d^3
  return dda / d - 2.0 * da * dd / (d * d) - a * ddd / (d * d) + 2.0 * a * dd * dd / (d * d * d);
}

}  // namespace wglab
