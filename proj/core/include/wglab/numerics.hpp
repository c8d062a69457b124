#pragma once

#include <cmath>
#include <span>

namespace wglab {

/// Neumaier-compensated accumulator. Summation order is the call order, so
/// results are reproducible bit for bit.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Trapezoid rule on possibly non-uniform abscissae.
double trapezoid(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Needs two distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Surface area of the unit sphere in R^n.
double sphere_area(int n);

/// <x> = sqrt(1 + |x|^2).
inline double japanese(double r) { return std::sqrt(1.0 + r * r); }

/// (1 - (r/B)^2)^P on r < B, zero outside. C^{P-1} at r = B.
double polynomial_bump(double r, double radius, int power);

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s);
double smooth_step_d1(double s);
double smooth_step_d2(double s);

}  // namespace wglab
