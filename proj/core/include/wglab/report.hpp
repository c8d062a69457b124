#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wglab {

/// Outcome of one inequality or fit under test. `ratio` is lhs/rhs when
/// rhs > 0; a zero rhs with nonzero lhs sets `degenerate`.
struct EstimateReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::vector<std::pair<std::string, double>> params;
  std::optional<double> slope;
  std::optional<double> r_squared;
  double tolerance = 0.0;
  bool pass = false;
  bool degenerate = false;
  std::string note;

  /// Sets lhs, rhs and derives ratio / degenerate.
  void set_sides(double l, double r);
  void add_param(std::string key, double value) { params.emplace_back(std::move(key), value); }
  std::optional<double> param(const std::string& key) const;
};

}  // namespace wglab
