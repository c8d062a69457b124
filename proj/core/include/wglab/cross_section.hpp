#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wglab/report.hpp"

namespace wglab {

enum class BoundaryCondition { Dirichlet, Neumann };

std::string to_string(BoundaryCondition bc);
BoundaryCondition parse_boundary_condition(const std::string& text);

struct Interval {
  double length = 3.141592653589793;
};

struct Rectangle {
  double length_x = 3.141592653589793;
  double length_y = 3.141592653589793;
};

/// Cross-section Omega with its boundary condition. `resolution` counts grid
/// points per axis, endpoints included.
struct CrossSectionSpec {
  std::variant<Interval, Rectangle> shape = Interval{};
  BoundaryCondition bc = BoundaryCondition::Neumann;
  int resolution = 32;

  int dimension() const { return std::holds_alternative<Rectangle>(shape) ? 2 : 1; }
  std::array<double, 2> lengths() const;
  double measure() const;
  void validate() const;
};

enum class BasisBackend { ClosedForm, FiniteDifference };

/// A y-grid point on the boundary of Omega with its outward unit normal.
struct BoundaryPoint {
  int index = 0;
  std::array<double, 2> normal{};
};

/// Eigenvalues lambda_j (square roots of the Laplacian eigenvalues, ascending)
/// and eigenfunctions sampled on the y-grid, orthonormal under the trapezoid
/// weights. Mode indices are 0-based here; mode 0 is lambda_1 in the usual
/// numbering. Immutable after construction.
class ModeBasis {
 public:
  int size() const { return static_cast<int>(lambdas_.size()); }
  int points() const { return static_cast<int>(weights_.size()); }
  int dimension() const { return spec_.dimension(); }
  BoundaryCondition bc() const { return spec_.bc; }
  BasisBackend backend() const { return backend_; }
  const CrossSectionSpec& spec() const { return spec_; }

  std::span<const double> lambdas() const { return lambdas_; }
  double lambda(int j) const { return lambdas_.at(static_cast<std::size_t>(j)); }
  std::span<const double> mode(int j) const;
  /// d e_j / d y_axis on the grid.
  std::span<const double> mode_gradient(int j, int axis) const;
  std::span<const double> weights() const { return weights_; }
  /// y_axis coordinate of every grid point.
  std::span<const double> coordinates(int axis) const;
  /// Separation indices (a, b) of mode j; b = 0 on an interval.
  std::pair<int, int> labels(int j) const { return labels_.at(static_cast<std::size_t>(j)); }
  std::vector<BoundaryPoint> boundary_points() const;

  /// c_j = sum_q w_q f_q e_j(y_q).
  std::vector<double> project(std::span<const double> field) const;
  std::vector<double> reconstruct(std::span<const double> coeffs) const;
  /// Quadrature inner product on Omega.
  double inner(std::span<const double> f, std::span<const double> g) const;

  /// Batched transforms over `columns` radial points. Layouts are row major:
  /// modes[j * columns + i], physical[q * columns + i].
  void analyze(std::span<const double> physical, std::span<double> modes, int columns) const;
  void synthesize(std::span<const double> modes, std::span<double> physical, int columns) const;
  /// Same as synthesize but with the axis derivative of each eigenfunction.
  void synthesize_gradient(std::span<const double> modes, std::span<double> physical, int columns,
                           int axis) const;

  /// max |G - I| over the Gram matrix.
  double gram_deviation() const;
  /// max over interior points of |Delta_h e_j + lambda_j^2 e_j| (second-order stencil).
  double eigen_residual(int j) const;

 private:
  friend ModeBasis build_mode_basis(const CrossSectionSpec&, int, BasisBackend);

  CrossSectionSpec spec_;
  BasisBackend backend_ = BasisBackend::ClosedForm;
  std::vector<double> lambdas_;
  std::vector<double> values_;     // J x Q
  std::vector<double> gradients_;  // dimension x J x Q
  std::vector<double> weights_;    // Q
  std::vector<double> coords_;     // dimension x Q
  std::vector<std::pair<int, int>> labels_;
  std::array<int, 2> axis_points_{};
};

/// Builds the first `j_max` modes. Requires j_max <= resolution / 2, which also
/// leaves room for 3/2-rule dealiasing of quadratic products on the grid.
ModeBasis build_mode_basis(const CrossSectionSpec& spec, int j_max,
                           BasisBackend backend = BasisBackend::ClosedForm);

/// Asymptotic Weyl constant c with lambda_j ~ c * j^{1/d}.
double weyl_constant(const CrossSectionSpec& spec);

/// min / max of lambda_j j^{-1/d} over 10 <= j <= J (1-based). Passes when both
/// lie in [lo, hi] * weyl_constant. Needs J >= 20.
EstimateReport weyl_check(const ModeBasis& basis, int d, double lo = 0.5, double hi = 1.5);

}  // namespace wglab
