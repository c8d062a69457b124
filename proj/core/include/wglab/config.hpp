#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wglab/cross_section.hpp"
#include "wglab/norms.hpp"

namespace wglab {

/// Flat key = value experiment configuration. Every key has a default that
/// depends on the experiment, so a file may hold just `experiment = decay`.
struct ExperimentConfig {
  std::string experiment;
  std::string output_dir = "out";

  int n = 3;
  double m = 0.0;
  BoundaryCondition bc = BoundaryCondition::Neumann;
  std::string section = "interval";  // interval | rectangle
  double length = 3.141592653589793;
  double length_y = 3.141592653589793;
  int resolution = 32;
  std::string backend = "closed";  // closed | fd
  int j_max = 8;
  double support = 1.0;  // B

  std::vector<double> epsilons;
  std::vector<double> mus;
  std::vector<double> horizons;
  std::vector<double> radii;
  double horizon = 10.0;
  double fit_begin = 10.0;
  double fit_end = 160.0;
  double h = 0.05;
  double dt = 0.025;
  double output_interval = 0.5;
  double sigma = 0.5;
  double amplitude = 1.0;
  int y_points = 129;
  int k_max = 5;
  double rho = 0.5;
  GammaBudget budget;
  std::uint64_t seed = 1;

  /// Section spec assembled from the flat fields.
  CrossSectionSpec cross_section() const;
  void validate() const;
};

/// Defaults for a catalog experiment; unknown ids throw ConfigurationError.
ExperimentConfig default_config(const std::string& experiment);

/// Parses `key = value` lines; `#` starts a comment. The `experiment` key
/// selects the defaults and may appear anywhere.
ExperimentConfig parse_config(const std::string& text);

/// Applies one override; unknown keys and malformed values throw
/// ConfigurationError naming the key.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Every key in a fixed order, one per line.
std::string serialize_config(const ExperimentConfig& cfg);

/// Keys accepted by set_config_value, in serialization order.
const std::vector<std::string>& config_keys();

}  // namespace wglab
