#pragma once

#include <optional>
#include <vector>

#include "wglab/cross_section.hpp"
#include "wglab/norms.hpp"
#include "wglab/report.hpp"
#include "wglab/waveguide.hpp"

namespace wglab {

struct IterationConfig {
  int k_max = 5;
  double epsilon = 0.0;
  double horizon = 10.0;  // time after the data were posed
  BoundaryCondition bc = BoundaryCondition::Neumann;
  QuadraticForm q = QuadraticForm::gradsq(3, 1);
  double rho = 0.5;
  double m = 0.0;
  double h = 0.025;  // radial spacing used by sweeps
  double dt = 0.0125;
  double output_interval = 0.25;
  GammaBudget budget;
  /// Also run solve_nonlinear and compare with u0 + w_K at the half horizon.
  bool compare_direct = true;

  void validate() const;
};

struct IterationRow {
  int k = 0;
  double m_k = 0.0;
  double a_k = 0.0;
  std::optional<double> ratio;  // A_k / A_{k-1}, k >= 2
};

struct IterationResult {
  double epsilon = 0.0;
  double horizon = 0.0;
  std::vector<IterationRow> rows;
  double c0 = 0.0;       // sup of the Gamma energy of u0, divided by epsilon
  double max_ratio = 0.0;
  bool contraction = false;
  bool bounded = false;  // every M_k <= 4 C0 eps
  bool diverged = false;
  std::string divergence;
  std::optional<double> direct_mismatch;
  EstimateReport reduction;
  EstimateReport report;
};

/// Picard scheme for the zero-data problem. All iterates w_1..w_K are
/// advanced together with RK4: the stage values of w_{k-1} feed the source
/// of w_k, so each w_k is the RK4 solution of its linear problem. The
/// commutator -eta'' w_k - 2 eta' d_t w_k is kept on the left (implicit).
IterationResult picard_iterate(const IterationConfig& config, const CauchyData& data, const ModeBasis& basis);

struct SweepRow {
  double epsilon = 0.0;
  double horizon = 0.0;
  double max_ratio = 0.0;
  bool contraction = false;
  bool diverged = false;
  std::string divergence;
};

/// Runs picard_iterate per epsilon with horizon min(fraction exp(c_hat/eps),
/// horizon_cap).
std::vector<SweepRow> contraction_sweep(const std::vector<double>& eps_list, const IterationConfig& base,
                                        double c_hat, double fraction, double horizon_cap, const ModeBasis& basis,
                                        const DataFactory& factory);

}  // namespace wglab
