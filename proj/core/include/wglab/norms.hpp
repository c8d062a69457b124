#pragma once

#include <array>
#include <functional>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "wglab/cross_section.hpp"
#include "wglab/radial.hpp"
#include "wglab/report.hpp"
#include "wglab/waveguide.hpp"

namespace wglab {

/// Caps on the vector-field words Gamma^alpha used in norm sums. Words are
/// grouped into classes (a, b, c) = (#d_t, #d_x, #d_y); rotations vanish on
/// radial fields and only widen the enumeration. Classes are combined as an
/// l^2 sum of their L^2 norms.
struct GammaBudget {
  int tx = 1;
  int rotations = 2;
  int y = 2;
  int total = 2;

  void validate() const;
  /// Admissible (a, b, c) classes in a fixed order.
  std::vector<std::array<int, 3>> classes() const;
};

// ---------------------------------------------------------------------------
// Energies

/// integral of u_t^2 + u_r^2 + mu^2 u^2 over R^n.
double energy(const KGState& state, const RadialGrid& grid);

/// Mode-space energy: sum_j integral of u_t^2 + u_r^2 + (m^2 + lambda_j^2) u^2.
double energy(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis, double m);

/// The same quantity by quadrature on the physical (r, y) grid.
double energy_physical(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis, double m);

/// ||w||_2 against ||grad_y w||_2 / lambda_1 (Dirichlet Poincare bound).
EstimateReport poincare_check(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis);

// ---------------------------------------------------------------------------
// Weighted space-time estimates

enum class KssVariant { LogWeighted, SigmaWeighted, Waveguide, WaveguideSigma };

std::string to_string(KssVariant v);
KssVariant parse_kss_variant(const std::string& text);

/// Right side of a radial KSS run: a velocity impulse at the initial time
/// (which counts as ||g||_2) plus a forcing integrated in time.
struct KssSource {
  std::vector<double> impulse;
  RadialForcing forcing;
};

/// Radial variants. LHS is the weighted space-time norm over [t_start, T];
/// RHS is the forcing norm, times sqrt(log(2 + T)) for the log variant.
EstimateReport kss_ratio(const KGTrajectory& traj, const KssSource& source, KssVariant variant, double sigma,
                         double T);

/// Waveguide variants in homogeneous form: the trajectory solves the free
/// equation from its first state, and the RHS is the Gamma-truncated energy
/// norm of that state. The lower-order source terms vanish in this form.
EstimateReport kss_ratio(const WaveguideTrajectory& traj, KssVariant variant, double sigma, double T,
                         const GammaBudget& budget = {});

// ---------------------------------------------------------------------------
// Variable-coefficient energy inequality

/// gamma^{jk}(t, r, y) in reduced coordinates (t, r, y_1..y_d), written
/// row-major into `out` of size (2 + d)^2.
struct CoefficientField {
  int d = 1;
  std::function<void(double t, double r, std::span<const double> y, std::span<double> out)> eval;
};

struct ManufacturedField {
  std::function<double(double t, double r, std::span<const double> y)> w;
};

struct EnergyInequalityOptions {
  double t_start = 0.0;
  double t_final = 1.0;
  double dt_sample = 0.05;
};

/// Computes F = (box + m^2) w + gamma^{jk} d_j d_k w by differencing w and
/// checks ||grad w(t)|| + m ||w(t)|| <= 2 exp(int 2 sum ||d gamma||_inf)
/// (E(t_start) + int ||F||) at every sample time. The ratio reported is the
/// worst one. Smallness sum |gamma^{jk}| <= 1/2 is a ValidationError; under
/// Neumann conditions gamma must annihilate (tangent, normal) pairs on the
/// sampled boundary or a ConditionViolation carries the witness.
EstimateReport verify_energy_inequality(const CoefficientField& gamma, const ManufacturedField& w, double m,
                                        BoundaryCondition bc, const RadialGrid& grid, const ModeBasis& basis,
                                        const EnergyInequalityOptions& opts);

// ---------------------------------------------------------------------------
// Iteration norms

/// Pieces of the iteration functional at each stored time.
struct GammaProfile {
  std::vector<double> t;
  std::vector<double> energy;     // l^2 over classes of ||Gamma^alpha grad_{t,x} w(t)||
  std::vector<double> spacetime;  // l^2 over classes of ||<x>^{-s} Gamma^alpha grad_x w||_{L^2[t_0, t]}
  std::vector<double> total;      // energy + log factor * spacetime
};

GammaProfile gamma_profile(const WaveguideTrajectory& traj, double T, const GammaBudget& budget);

/// sup over t <= T of the Gamma functional of the trajectory.
double gamma_norm(const WaveguideTrajectory& traj, double T, const GammaBudget& budget);

/// (M_k, A_k): the functional of w_k and of w_k - w_{k-1}. Trajectories must
/// share grid, basis size and output times.
std::pair<double, double> iteration_norms(const WaveguideTrajectory& wk, const WaveguideTrajectory& wk_prev,
                                          double T, const GammaBudget& budget);

/// Pointwise difference a - b of two trajectories with matching layout.
WaveguideTrajectory difference(const WaveguideTrajectory& a, const WaveguideTrajectory& b);

}  // namespace wglab
