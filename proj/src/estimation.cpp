#include "gpsm/estimation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gpsm {

namespace {

struct GroupStats {
  double mean = 0.0;
  double variance = 0.0;  // psi-weighted
  double n_eff = 0.0;     // Kish: (sum psi)^2 / sum psi^2
};

GroupStats group_stats(const Cohort& c, const MatchedSet& ms, int w) {
  double sum_w = 0.0, sum_w2 = 0.0, sum_wy = 0.0;
  for (int i = 0; i < c.n(); ++i) {
    if (c.treatments[i] != w || ms.psi[i] == 0) continue;
    double psi = ms.psi[i];
    sum_w += psi;
    sum_w2 += psi * psi;
    sum_wy += psi * (*c.outcomes)(i);
  }
  if (sum_w == 0.0) throw std::runtime_error("empty matched group " + std::to_string(w));
  GroupStats s;
  s.mean = sum_wy / sum_w;
  double ss = 0.0;
  for (int i = 0; i < c.n(); ++i) {
    if (c.treatments[i] != w || ms.psi[i] == 0) continue;
    double d = (*c.outcomes)(i) - s.mean;
    ss += ms.psi[i] * d * d;
  }
  s.variance = ss / sum_w;
  s.n_eff = sum_w * sum_w / sum_w2;
  return s;
}

}  // namespace

std::vector<AttEstimate> estimate_att(const Cohort& eligible, const MatchedSet& ms) {
  if (!eligible.outcomes) throw std::runtime_error("estimate_att: cohort has no outcomes");
  if (ms.empty()) throw std::runtime_error("estimate_att: empty matched set");

  const int t = ms.reference_treatment;
  GroupStats ref = group_stats(eligible, ms, t);

  std::vector<AttEstimate> out;
  for (int k = 1; k <= eligible.num_groups; ++k) {
    if (k == t) continue;
    GroupStats cmp = group_stats(eligible, ms, k);
    AttEstimate e;
    e.reference = t;
    e.comparison = k;
    e.estimate = ref.mean - cmp.mean;
    e.std_error = std::sqrt(ref.variance / ref.n_eff + cmp.variance / cmp.n_eff);
    e.significant_05 = std::abs(e.estimate) > 1.96 * e.std_error;
    out.push_back(e);
  }
  return out;
}

void write_estimates(const std::vector<AttEstimate>& est, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "pair,estimate,std_error,significant\n";
  for (const auto& e : est)
    out << e.reference << "-" << e.comparison << "," << e.estimate << "," << e.std_error << ","
        << (e.significant_05 ? 1 : 0) << "\n";
}

}  // namespace gpsm
