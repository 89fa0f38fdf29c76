#pragma once

#include <string>
#include <vector>

#include "gpsm/cohort.hpp"
#include "gpsm/matching.hpp"

namespace gpsm {

struct AttEstimate {
  int reference = 0;  // t
  int comparison = 0; // k != t
  double estimate = 0.0;
  double std_error = 0.0;
  bool significant_05 = false;
};

// Weighted outcome-mean differences (reference minus comparison) with a
// psi-weighted two-sample standard error using Kish effective sizes.
std::vector<AttEstimate> estimate_att(const Cohort& eligible, const MatchedSet& ms);

void write_estimates(const std::vector<AttEstimate>& est, const std::string& path);

}  // namespace gpsm
