#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gpsm/cohort.hpp"
#include "gpsm/distance.hpp"
#include "gpsm/gps.hpp"

namespace gpsm {

enum class ClusterMethod { None, KMeans, Fuzzy };
enum class DistanceFamily { LinearGps, MahalanobisPair, MahalanobisGps, MahalanobisCovariates };

struct AlgorithmSpec {
  std::string label;
  DistanceFamily distance = DistanceFamily::LinearGps;
  bool caliper = true;
  ClusterMethod clustering = ClusterMethod::KMeans;
  int ratio = 1;
  bool replacement = true;
};

// The twelve algorithm labels: VM, VM2, VMnc, VMnr, VMF, KM, KMnc, FM,
// FMnc, GPS, GPSnc, COVnc.
AlgorithmSpec algorithm_from_label(const std::string& label);
const std::vector<std::string>& all_algorithm_labels();

struct MatchLink {
  int ref_unit;
  int matched_unit;
  double distance;
};

struct PairMatching {
  std::vector<MatchLink> links;
  std::vector<int> matched_refs;  // refs with a full complement of `ratio` links
};

struct MatchedSet {
  int reference_treatment = 0;
  std::vector<int> retained_refs;  // indices into the eligible cohort
  std::vector<int> psi;            // multiplicity weight per unit (length n)
  std::vector<int> n_wm;           // per-group matched counts, length Z
  std::vector<MatchLink> links;    // retained links across all pairs
  std::vector<std::string> warnings;

  bool empty() const { return retained_refs.empty(); }
};

// 0.5 * sd of a logit-GPS column over all eligible units by default.
double caliper_width(const Eigen::VectorXd& values, double epsilon);

// Nearest-neighbor matching over a precomputed distance matrix
// (refs.size() x cands.size()); inadmissible pairs carry +infinity.
// With replacement each ref independently takes its `ratio` closest
// admissible candidates; without replacement pairs are accepted globally
// in (distance, ref index, cand index) order while both ends are free.
PairMatching nn_match(const std::vector<int>& refs, const std::vector<int>& cands,
                      const Eigen::MatrixXd& dist, int ratio, bool replacement);

struct MatchOptions {
  int clusters = 5;        // K
  double fuzzy_m = 2.0;    // fuzzy exponent
  double epsilon = 0.5;    // caliper scale
  std::uint64_t seed = 1;
};

MatchedSet run_algorithm(const Cohort& eligible, const GpsMatrix& gps, const AlgorithmSpec& spec,
                         int reference_treatment, const MatchOptions& opts = {});

// Unit weights psi = 1 for every eligible unit: the pre-matched cohort.
MatchedSet prematched_set(const Cohort& eligible, int reference_treatment);

void export_matched(const MatchedSet& ms, const Cohort& eligible, const AlgorithmSpec& spec,
                    const MatchOptions& opts, const std::string& csv_path,
                    const std::string& manifest_path);

// Rebuild a MatchedSet from an exported id,treatment,psi file against the
// cohort it was exported from.
MatchedSet import_matched(const std::string& csv_path, const Cohort& eligible,
                          int reference_treatment);

}  // namespace gpsm
