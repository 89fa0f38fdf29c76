#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gpsm/cohort.hpp"
#include "gpsm/matching.hpp"

namespace gpsm {

struct BalanceReport {
  // sb[p] holds SB_pjk for pairs (j,k), j<k, in lexicographic order.
  std::vector<Eigen::VectorXd> sb;
  std::vector<std::pair<int, int>> pairs;  // 1-based treatment pairs, j<k
  Eigen::VectorXd max2sb;                  // per covariate
  double maxmax2sb = 0.0;
  double meanmax2sb = 0.0;
  double prop_matched = 0.0;
  Eigen::VectorXd denominators;  // delta_pt per covariate
};

// Weighted covariate means X̄_pw; P x Z.
Eigen::MatrixXd weighted_means(const Cohort& c, const MatchedSet& ms);

// `full` is the untrimmed cohort (denominators delta_pt come from its
// reference group); `eligible` is the trimmed cohort the MatchedSet
// indexes into. `eligible_ref_count` is the number of eligible units with
// W = t, the Prop.Matched denominator.
BalanceReport balance_report(const Cohort& full, const Cohort& eligible, const MatchedSet& ms,
                             int reference_treatment, int eligible_ref_count);

void write_balance(const BalanceReport& r, const std::string& path);

}  // namespace gpsm
