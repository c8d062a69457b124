#include "wglab/report.hpp"

namespace wglab {

void EstimateReport::set_sides(double l, double r) {
  lhs = l;
  rhs = r;
  degenerate = false;
  if (r > 0.0) {
    ratio = l / r;
  } else {
    ratio = 0.0;
    degenerate = true;  // 0/0 and x/0 alike: nothing to compare against
  }
}

std::optional<double> EstimateReport::param(const std::string& key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return std::nullopt;
}

}  // namespace wglab
