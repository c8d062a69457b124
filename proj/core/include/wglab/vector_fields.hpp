#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wglab/report.hpp"

namespace wglab {

enum class FieldKind { Time, Space, Rotation, Boost, CrossSection, Scaling };

/// One of the commuting vector fields. Indices are 1-based:
/// Space(i) = d/dx_i, Rotation(j, k) = x_j d_k - x_k d_j with j < k,
/// Boost(j) = x_j d_t + t d_j, CrossSection(l) = d/dy_l,
/// Scaling = t d_t + r d_r.
struct VectorFieldId {
  FieldKind kind = FieldKind::Time;
  int i = 0;
  int j = 0;

  static VectorFieldId time() { return {FieldKind::Time, 0, 0}; }
  static VectorFieldId space(int i) { return {FieldKind::Space, i, 0}; }
  static VectorFieldId rotation(int j, int k) { return {FieldKind::Rotation, j, k}; }
  static VectorFieldId boost(int j) { return {FieldKind::Boost, 0, j}; }
  static VectorFieldId cross_section(int l) { return {FieldKind::CrossSection, l, 0}; }
  static VectorFieldId scaling() { return {FieldKind::Scaling, 0, 0}; }

  std::string name() const;
  void validate(int n, int d, bool has_time) const;
};

/// Every field of the family for (n, d), scaling excluded.
std::vector<VectorFieldId> commuting_fields(int n, int d);

/// Values of a function on a uniform lattice over (t, x_1..x_n, y_1..y_d),
/// the time axis being optional. Row major with the last axis fastest.
class SpacetimeSample {
 public:
  using Function = std::function<double(std::span<const double> coords)>;

  SpacetimeSample(bool has_time, int n, int d, double spacing, std::vector<int> extent, std::vector<double> lower);

  /// Lattice centred at the origin with `half` points on each side of zero
  /// along every axis.
  static SpacetimeSample centred(bool has_time, int n, int d, double spacing, int half, const Function& f);

  bool has_time() const { return has_time_; }
  int n() const { return n_; }
  int d() const { return d_; }
  int axes() const { return static_cast<int>(extent_.size()); }
  double spacing() const { return h_; }
  int extent(int axis) const { return extent_[static_cast<std::size_t>(axis)]; }
  double lower(int axis) const { return lower_[static_cast<std::size_t>(axis)]; }
  std::size_t total() const { return values_.size(); }
  std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

  int time_axis() const { return has_time_ ? 0 : -1; }
  int x_axis(int i) const { return (has_time_ ? 1 : 0) + i - 1; }
  int y_axis(int l) const { return (has_time_ ? 1 : 0) + n_ + l - 1; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  /// Coordinates of the point with linear index k.
  void coordinates(std::size_t k, std::span<double> out) const;

  /// Same lattice with `width` points removed from both ends of every axis.
  SpacetimeSample cropped(int width) const;
  SpacetimeSample operator+(const SpacetimeSample& o) const;
  SpacetimeSample operator-(const SpacetimeSample& o) const;
  SpacetimeSample operator*(double c) const;
  double max_abs() const;

 private:
  bool has_time_;
  int n_, d_;
  double h_;
  std::vector<int> extent_;
  std::vector<double> lower_;
  std::vector<std::size_t> stride_;
  std::vector<double> values_;
};

/// Centered-difference application of the field. The result lives on the
/// lattice cropped by one point per side. Exact for polynomials of degree <= 2.
SpacetimeSample apply_field(const VectorFieldId& id, const SpacetimeSample& s);

/// (d_t^2 - Delta_x - Delta_y + mu^2) with three-point second differences,
/// on the lattice cropped by one.
SpacetimeSample apply_klein_gordon(const SpacetimeSample& s, double mu);

/// max |[box + mu^2, Gamma] s - expected| with [A, B] = AB - BA. Expected is
/// zero except for scaling, where it is 2 (d_t^2 - Delta_x) s. Evaluated on the lattice
/// cropped by two.
double commutator_residual(const VectorFieldId& id, double mu, const SpacetimeSample& s);

/// Same commutator measured against zero for every field.
double naive_commutator_residual(const VectorFieldId& id, double mu, const SpacetimeSample& s);

/// Residual tolerance C h^2 max|s|. The constant was set from a refinement
/// study on Gaussians (see tests/test_vector_fields.cpp).
double stencil_tolerance(const SpacetimeSample& s);
inline constexpr double kStencilConstant = 20.0;

/// R sup_{R-1<=|x|<=R} |h| against sum over |alpha| <= 2 of
/// ||Z^alpha h||_{L^2(R-2<=|x|<=R+1)}, Z in {d_x, Omega_jk}. Needs a purely
/// spatial n = 3 lattice covering |x| <= R + 1 after cropping by two.
EstimateReport klainerman_sobolev_ratio(const SpacetimeSample& h, double R);

}  // namespace wglab
