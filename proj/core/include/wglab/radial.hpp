#pragma once

#include <functional>
#include <span>
#include <vector>

#include "wglab/report.hpp"

namespace wglab {

/// Uniform grid r_i = i h, i = 0..N, on [0, r_max] in ambient dimension n.
struct RadialGrid {
  int n = 3;
  double r_max = 0.0;
  double h = 0.05;

  /// Smallest grid with r_max >= support + horizon + 2, so the outer wall is
  /// never reached by the solution.
  static RadialGrid for_horizon(int n, double support, double horizon, double h);

  int size() const;
  double r(int i) const { return i * h; }
  void validate() const;
  bool operator==(const RadialGrid& o) const { return n == o.n && size() == o.size() && h == o.h; }
};

/// Radial field (u, u_t) with mass mu at time t. Values live on the grid.
struct KGState {
  std::vector<double> u;
  std::vector<double> ut;
  double mu = 0.0;
  double t = 0.0;
};

/// Discrete radial Laplacian in a working variable phi.
///
/// n = 3 uses phi = r u, which turns the radial Laplacian into d^2/dr^2 with
/// phi(0) = 0. n >= 4 keeps phi = u and uses a finite-volume stencil whose
/// origin row is the limit n u_rr. The outer point is held at zero.
class RadialOperator {
 public:
  explicit RadialOperator(const RadialGrid& grid);

  const RadialGrid& grid() const { return grid_; }
  int size() const { return size_; }
  int first_free() const { return grid_.n == 3 ? 1 : 0; }
  int last_free() const { return size_ - 2; }

  /// out = L phi on free rows, zero on pinned rows.
  void apply(std::span<const double> phi, std::span<double> out) const;
  void to_working(std::span<const double> u, std::span<double> phi) const;
  void to_physical(std::span<const double> phi, std::span<double> u) const;

  /// Cell volume attached to row i (without the sphere area).
  double volume(int i) const { return volume_[static_cast<std::size_t>(i)]; }
  /// sum V_i a_i b_i
  double inner(std::span<const double> a, std::span<const double> b) const;
  /// <phi, -L phi> as a sum over cell faces.
  double stiffness(std::span<const double> phi) const;

  /// Centered d/dr of a physical field; zero at the origin, one-sided at the wall.
  void gradient(std::span<const double> u, std::span<double> ur) const;
  /// Radial quadrature weight of point i for physical integrands:
  /// integral of f over R^n ~ sum_i weight(i) f(r_i). Includes the sphere area.
  double quadrature_weight(int i) const { return quad_[static_cast<std::size_t>(i)]; }

 private:
  RadialGrid grid_;
  int size_ = 0;
  std::vector<double> volume_;
  std::vector<double> face_;  // face_[i] = A_{i+1/2}
  std::vector<double> quad_;
};

enum class Stepper { Auto, Leapfrog, RungeKutta4 };

/// Physical forcing F(t, r_i) written into `out`.
using RadialForcing = std::function<void(double t, std::span<double> out)>;

struct EvolveOptions {
  double dt = 0.0;
  double t_final = 0.0;
  /// Spacing of stored snapshots; 0 keeps only the first and last state.
  double output_interval = 0.0;
  Stepper stepper = Stepper::Auto;
  RadialForcing forcing;
};

struct KGTrajectory {
  RadialGrid grid;
  double dt = 0.0;
  std::vector<KGState> states;
};

/// Integrates (d_t^2 - Delta + mu^2) u = F from state.t to t_final.
/// Auto picks velocity Verlet (leapfrog) without forcing and RK4 with it.
/// The step is shrunk so that it divides the interval evenly.
KGTrajectory evolve_kg(const RadialGrid& grid, const KGState& initial, const EvolveOptions& opts);

/// Quantity conserved exactly by the leapfrog stepper with step dt, in
/// physical units (sphere area included). Reduces to the energy as dt -> 0.
double leapfrog_invariant(const RadialGrid& grid, const KGState& state, double dt);

/// Decay exponent of Props 2.3-2.5: 3/2 for n = 3, 2 for n = 4, 1 + n/4 beyond.
double decay_exponent(int n);

/// Fits log sup|u| against log t over [t_begin, t_end] and records the sup of
/// t^p sup|u| over the same window (p = decay_exponent). Pass means the slope
/// is within `tolerance` of -p. `data_scale` normalizes the weighted sup.
EstimateReport measure_decay(const KGTrajectory& traj, double t_begin, double t_end, double tolerance,
                             double data_scale = 1.0);

}  // namespace wglab
