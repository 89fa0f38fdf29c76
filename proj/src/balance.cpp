#include "gpsm/balance.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gpsm {

Eigen::MatrixXd weighted_means(const Cohort& c, const MatchedSet& ms) {
  const int p = c.p();
  const int z = c.num_groups;
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(p, z);
  for (int w = 0; w < z; ++w)
    if (ms.n_wm[w] == 0) throw std::runtime_error("empty matched group " + std::to_string(w + 1));
  for (int i = 0; i < c.n(); ++i) {
    if (ms.psi[i] == 0) continue;
    means.col(c.treatments[i] - 1) += ms.psi[i] * c.covariates.row(i).transpose();
  }
  for (int w = 0; w < z; ++w) means.col(w) /= ms.n_wm[w];
  return means;
}

BalanceReport balance_report(const Cohort& full, const Cohort& eligible, const MatchedSet& ms,
                             int reference_treatment, int eligible_ref_count) {
  const int p = eligible.p();
  const int z = eligible.num_groups;
  const int t = reference_treatment;

  // delta_pt: sd of X_p in the full (pre-trim) sample among units with W=t.
  auto ref_rows = full.group_indices(t);
  Eigen::VectorXd delta(p);
  for (int j = 0; j < p; ++j) {
    double mean = 0.0;
    for (int i : ref_rows) mean += full.covariates(i, j);
    mean /= static_cast<double>(ref_rows.size());
    double ss = 0.0;
    for (int i : ref_rows) {
      double d = full.covariates(i, j) - mean;
      ss += d * d;
    }
    delta(j) = std::sqrt(ss / (static_cast<double>(ref_rows.size()) - 1.0));
    if (delta(j) <= 0.0)
      throw std::runtime_error("covariate " + std::to_string(j + 1) +
                               " is constant in the reference group");
  }

  Eigen::MatrixXd means = weighted_means(eligible, ms);

  BalanceReport r;
  r.denominators = delta;
  for (int j = 1; j <= z; ++j)
    for (int k = j + 1; k <= z; ++k) r.pairs.emplace_back(j, k);

  r.sb.resize(p);
  r.max2sb = Eigen::VectorXd::Zero(p);
  for (int cov = 0; cov < p; ++cov) {
    Eigen::VectorXd row(r.pairs.size());
    for (size_t q = 0; q < r.pairs.size(); ++q) {
      auto [j, k] = r.pairs[q];
      row(static_cast<int>(q)) = (means(cov, j - 1) - means(cov, k - 1)) / delta(cov);
    }
    r.max2sb(cov) = row.cwiseAbs().maxCoeff();
    r.sb[cov] = std::move(row);
  }
  r.maxmax2sb = r.max2sb.maxCoeff();
  r.meanmax2sb = r.max2sb.mean();
  if (eligible_ref_count <= 0) throw std::runtime_error("eligible reference count must be positive");
  r.prop_matched = static_cast<double>(ms.retained_refs.size()) / eligible_ref_count;
  return r;
}

void write_balance(const BalanceReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "covariate,pair,sb\n";
  for (size_t cov = 0; cov < r.sb.size(); ++cov)
    for (size_t q = 0; q < r.pairs.size(); ++q)
      out << "x" << (cov + 1) << "," << r.pairs[q].first << "-" << r.pairs[q].second << ","
          << r.sb[cov](static_cast<int>(q)) << "\n";
  out << "covariate,max2sb\n";
  for (int cov = 0; cov < r.max2sb.size(); ++cov)
    out << "x" << (cov + 1) << "," << r.max2sb(cov) << "\n";
  out << "maxmax2sb," << r.maxmax2sb << "\n";
  out << "meanmax2sb," << r.meanmax2sb << "\n";
  out << "prop_matched," << r.prop_matched << "\n";
}

}  // namespace gpsm
