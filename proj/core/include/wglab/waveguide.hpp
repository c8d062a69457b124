#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wglab/cross_section.hpp"
#include "wglab/radial.hpp"
#include "wglab/report.hpp"

namespace wglab {

/// Analytic data profile on R^n x Omega as functions of (r, y). Profiles are
/// evaluated slightly outside Omega by the compatibility checker, so they
/// should be smooth extensions.
struct DataProfile {
  using Function = std::function<double(double r, std::span<const double> y)>;
  Function f;
  Function g;
};

/// Cauchy data sampled on the (r, y) tensor grid, layout [q * Nr + i].
/// The stored fields already include the factor epsilon.
struct CauchyData {
  RadialGrid grid;
  int points = 0;
  std::vector<double> f;
  std::vector<double> g;
  double support = 1.0;
  double epsilon = 1.0;
  double t0 = 0.0;
  DataProfile profile;

  /// Checks f = g = 0 beyond the support radius and band limitation in y.
  void validate(const ModeBasis& basis) const;
};

/// epsilon * profile sampled on the grid, posed at time t0.
CauchyData sample_data(const DataProfile& profile, const RadialGrid& grid, const ModeBasis& basis, double support,
                       double epsilon, double t0 = 0.0);

/// Quadratic form of the nonlinearity. Coordinates are x_0 = t, x_1..x_n,
/// x_{n+1}..x_{n+d} = y. Q = sum A^{jk}_l d_l u d_j d_k u + u A^{jk} d_j d_k u
/// + R(u, u'), with R a symmetric form over (u, d_0 u, ..., d_{n+d} u).
struct QuadraticForm {
  int n = 3;
  int d = 1;
  std::vector<double> quasi_l;     // A^{jk}_l at [(j * D + k) * D + l]
  std::vector<double> quasi;       // A^{jk} at [j * D + k]
  std::vector<double> semilinear;  // R at [a * (D + 1) + b], slot 0 is u
  std::string label = "custom";

  static QuadraticForm zero(int n, int d);
  /// Q = |grad_x u|^2, i.e. (d_r u)^2 for radial fields.
  static QuadraticForm gradsq(int n, int d);

  int dim() const { return 1 + n + d; }
  double& a(int j, int k, int l) { return quasi_l[static_cast<std::size_t>((j * dim() + k) * dim() + l)]; }
  double a(int j, int k, int l) const { return quasi_l[static_cast<std::size_t>((j * dim() + k) * dim() + l)]; }
  double& b(int j, int k) { return quasi[static_cast<std::size_t>(j * dim() + k)]; }
  double b(int j, int k) const { return quasi[static_cast<std::size_t>(j * dim() + k)]; }
  /// Symmetric entry of R; slot 0 is u, slot 1 + i is d_i u.
  void set_semilinear(int p, int q, double v);
  double r(int p, int q) const { return semilinear[static_cast<std::size_t>(p * (dim() + 1) + q)]; }

  bool is_semilinear() const;
  bool is_zero() const;
  void validate() const;
};

/// Snapshot of a waveguide solution in mode space: u_hat[j * Nr + i] holds
/// the coefficient of e_j at r_i. utt is filled only by dense recordings.
struct WaveguideField {
  int modes = 0;
  int columns = 0;
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> ut;
  std::vector<double> utt;

  /// Physical values on the tensor grid, layout [q * Nr + i].
  std::vector<double> physical(const ModeBasis& basis) const;
  std::vector<double> physical_ut(const ModeBasis& basis) const;
};

struct WaveguideTrajectory {
  RadialGrid grid;
  ModeBasis basis;
  double m = 0.0;
  double dt = 0.0;
  std::vector<WaveguideField> states;

  /// mu_j = sqrt(m^2 + lambda_j^2).
  double mode_mass(int j) const;
};

enum class BlowupTrigger { Threshold, NonFinite };

struct BlowupEvent {
  double time = 0.0;
  BlowupTrigger trigger = BlowupTrigger::Threshold;
  double last_sup = 0.0;
};

std::string to_string(BlowupTrigger t);

// ---------------------------------------------------------------------------
// Algebraic checks

struct ConditionReport {
  bool pass = true;
  double worst = 0.0;
  std::string witness;
};

/// Evaluates both sums of the nonlinear Neumann condition on every sampled
/// boundary point with xi, eta running over a basis of theta^perp. The sums
/// are bilinear, so a basis suffices. Coefficients are symmetrized in (j, k).
/// Dirichlet passes trivially.
ConditionReport check_neumann_condition(const QuadraticForm& q, BoundaryCondition bc, const ModeBasis& basis);

struct CompatibilityReport {
  int order = 0;
  std::vector<double> residual;  // max boundary residual per order 0..order
  std::vector<bool> pass;
  double tolerance = 0.0;
  bool all_pass() const;
};

/// Boundary residuals of psi_0 = f, psi_1 = g, psi_2 = Delta f + Delta_Omega f
/// - m^2 f + Q (Dirichlet) or of their normal derivatives (Neumann). Needs
/// data.profile; derivatives come from fourth-order differences of it.
CompatibilityReport check_compatibility(const CauchyData& data, BoundaryCondition bc, double m,
                                        const QuadraticForm& q, int order, const ModeBasis& basis,
                                        double tolerance = 1e-6);

// ---------------------------------------------------------------------------
// Solvers

struct LinearOptions {
  double dt = 0.0;
  double t_final = 0.0;
  double output_interval = 0.0;
};

/// Projects the data, evolves every mode with the radial solver at mass
/// mu_j and keeps the mode coefficients. Modes run concurrently.
WaveguideTrajectory solve_linear_modewise(const CauchyData& data, double m, const ModeBasis& basis,
                                          const LinearOptions& opts);

/// Independent oracle: second-order finite differences on the full (r, y)
/// grid of an interval section with `y_points` points, leapfrog in time.
/// Returns physical snapshots [q * Nr + i] at the output times.
struct GridSnapshot {
  double t = 0.0;
  std::vector<double> u;
};
std::vector<GridSnapshot> solve_full_grid(const DataProfile& profile, double epsilon, const RadialGrid& grid,
                                          const CrossSectionSpec& section, int y_points, double m,
                                          const LinearOptions& opts, double t0 = 0.0);

struct NonlinearOptions {
  double dt = 0.0;
  double t_final = 0.0;
  double output_interval = 0.0;
  /// Blowup when sup|grad u| > factor * (initial sup|grad u|) / epsilon.
  double threshold_factor = 1000.0;
  /// Overrides the factor rule when positive.
  double absolute_threshold = 0.0;
  /// Store every step with accelerations (needed for Hermite interpolation).
  bool dense = false;
  int bisection_steps = 10;
};

struct NonlinearResult {
  WaveguideTrajectory trajectory;
  std::optional<BlowupEvent> blowup;
  double threshold = 0.0;
};

/// Semilinear evolution (d_t^2 - Delta + m^2) u = Q(u, u'), pseudospectral in
/// y and RK4 in time. Quasilinear forms are rejected.
NonlinearResult solve_nonlinear(const CauchyData& data, const QuadraticForm& q, const ModeBasis& basis, double m,
                                const NonlinearOptions& opts);

/// sup over the tensor grid of sqrt(u_t^2 + u_r^2 + |grad_y u|^2).
double sup_gradient(const WaveguideField& field, const RadialGrid& grid, const ModeBasis& basis);

// ---------------------------------------------------------------------------
// Lifespan sweeps

struct LifespanOptions {
  NonlinearOptions solver;
  double horizon = 100.0;  // time after t0
  bool refine = true;      // rerun at h/2, dt/2
};

struct LifespanRow {
  double epsilon = 0.0;
  double t_star = 0.0;  // time since the data were posed; horizon when censored
  bool censored = true;
  double t_star_refined = 0.0;
  bool refined_censored = true;
  double relative_change = 0.0;
  BlowupTrigger trigger = BlowupTrigger::Threshold;
};

struct LifespanResult {
  std::vector<LifespanRow> rows;
  EstimateReport fit;  // slope = c_hat of log T* = c/eps + b
  int blowups = 0;
  double max_relative_change = 0.0;
};

/// Builds data for one epsilon on a given grid.
using DataFactory = std::function<CauchyData(double epsilon, const RadialGrid& grid)>;

/// Runs solve_nonlinear per epsilon (concurrently), fits log T* against 1/eps
/// over uncensored rows. Fewer than 3 uncensored rows leave the fit degenerate
/// and failing; `require_fit` turns that into an error.
LifespanResult lifespan_sweep(const std::vector<double>& eps_list, const QuadraticForm& q, const ModeBasis& basis,
                              double m, double h, const DataFactory& factory, const LifespanOptions& opts,
                              bool require_fit = true);

// ---------------------------------------------------------------------------
// Reduction to zero data

/// eta = 1 for t <= 2B + 1/2, 0 for t >= 2B + 1, smooth in between.
struct Cutoff {
  double support = 1.0;  // B
  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  double start() const { return 2.0 * support + 0.5; }
  double stop() const { return 2.0 * support + 1.0; }
};

struct ReductionResult {
  Cutoff eta;
  /// u_loc every step on [2B, 2B + 1] (dense, with accelerations).
  WaveguideTrajectory local;
  EstimateReport residual;
};

/// Solves on [2B, 2B + 1] from data posed at 2B, builds u0 = eta u_loc, then
/// continues the full solution to 2B + 1 + extra and checks that w = u - u0
/// satisfies (box + m^2) w = (1 - eta) Q(u) - [box, eta] u with second
/// differences in time. Residual is an L^2 norm; pass means < 10 h^2.
ReductionResult reduce_to_zero_data(const CauchyData& data, const QuadraticForm& q, const ModeBasis& basis,
                                    double m, double dt, double extra = 0.5);

/// u0 = eta u_loc at time t from a dense local history, mode space, with
/// u0_t. Zero past 2B + 1. Cubic Hermite between stored steps.
void cutoff_solution(const ReductionResult& red, double t, std::span<double> u0, std::span<double> u0t);

// ---------------------------------------------------------------------------
// Internal building blocks shared with the iteration module.

namespace detail {

/// Cubic Hermite interpolation of a dense trajectory at time t (mode space).
/// Writes u and u_t. Outside the recorded range the end states are used.
void hermite_sample(const WaveguideTrajectory& dense, double t, std::span<double> u, std::span<double> ut);

/// Source term callback for the mode integrator: adds to `acc` (working
/// variable, mode space) given the current working state.
using ModeSource = std::function<void(double t, std::span<const double> phi, std::span<const double> phit,
                                      std::span<double> acc)>;

/// Radial Laplacian + mass ladder integrator in mode space, RK4.
class ModeIntegrator {
 public:
  ModeIntegrator(const RadialGrid& grid, const ModeBasis& basis, double m);

  const RadialOperator& op() const { return op_; }
  const ModeBasis& basis() const { return basis_; }
  int modes() const { return basis_.size(); }
  int columns() const { return op_.size(); }

  /// acc = L phi - mu_j^2 phi + sources.
  void acceleration(double t, std::span<const double> phi, std::span<const double> phit, std::span<double> acc,
                    const ModeSource& source) const;
  void rk4_step(double t, double dt, std::span<double> phi, std::span<double> phit, const ModeSource& source);

  /// Working <-> physical mode arrays.
  void to_working(std::span<const double> u, std::span<double> phi) const;
  void to_physical(std::span<const double> phi, std::span<double> u) const;
  /// Radial derivative of physical mode arrays.
  void radial_gradient(std::span<const double> u, std::span<double> ur) const;

 private:
  RadialOperator op_;
  const ModeBasis& basis_;
  std::vector<double> mu2_;
  mutable std::vector<double> lap_;
  std::vector<double> k1p_, k1v_, k2p_, k2v_, k3p_, k3v_, k4p_, k4v_, tp_, tv_;
};

/// Evaluates a semilinear Q pointwise on the y-grid and projects it back:
/// out[j * Nr + i] = E_j Q(u, u')(r_i) in physical (not working) units.
class NonlinearEvaluator {
 public:
  NonlinearEvaluator(const QuadraticForm& q, const ModeBasis& basis, const RadialOperator& op);
  /// u, ut: physical mode arrays.
  void evaluate(std::span<const double> u, std::span<const double> ut, std::span<double> out);
  bool needs_time_derivative() const { return uses_t_; }

 private:
  const QuadraticForm& q_;
  const ModeBasis& basis_;
  const RadialOperator& op_;
  double cx_ = 0.0;
  bool uses_u_ = false, uses_t_ = false, uses_y_ = false;
  std::vector<double> ur_modes_, uu_, ut_, ur_, qv_;
  std::vector<std::vector<double>> uy_;
};

}  // namespace detail

}  // namespace wglab
