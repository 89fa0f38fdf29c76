#include "gpsm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "gpsm/clustering.hpp"
#include "gpsm/rng.hpp"

namespace gpsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<AlgorithmSpec> kAlgorithms = {
    {"VM", DistanceFamily::LinearGps, true, ClusterMethod::KMeans, 1, true},
    {"VM2", DistanceFamily::LinearGps, true, ClusterMethod::KMeans, 2, true},
    {"VMnc", DistanceFamily::LinearGps, false, ClusterMethod::KMeans, 1, true},
    {"VMnr", DistanceFamily::LinearGps, true, ClusterMethod::KMeans, 1, false},
    {"VMF", DistanceFamily::LinearGps, true, ClusterMethod::Fuzzy, 1, true},
    {"KM", DistanceFamily::MahalanobisPair, true, ClusterMethod::KMeans, 1, true},
    {"KMnc", DistanceFamily::MahalanobisPair, false, ClusterMethod::KMeans, 1, true},
    {"FM", DistanceFamily::MahalanobisPair, true, ClusterMethod::Fuzzy, 1, true},
    {"FMnc", DistanceFamily::MahalanobisPair, false, ClusterMethod::Fuzzy, 1, true},
    {"GPS", DistanceFamily::MahalanobisGps, true, ClusterMethod::None, 1, true},
    {"GPSnc", DistanceFamily::MahalanobisGps, false, ClusterMethod::None, 1, true},
    {"COVnc", DistanceFamily::MahalanobisCovariates, false, ClusterMethod::None, 1, true},
};

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& data, const std::vector<int>& cols) {
  Eigen::MatrixXd out(data.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) out.col(static_cast<int>(j)) = data.col(cols[j]);
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& data, const std::vector<int>& rows) {
  Eigen::MatrixXd out(rows.size(), data.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = data.row(rows[i]);
  return out;
}

}  // namespace

AlgorithmSpec algorithm_from_label(const std::string& label) {
  for (const auto& a : kAlgorithms)
    if (a.label == label) return a;
  throw std::invalid_argument("unknown matching algorithm '" + label + "'");
}

const std::vector<std::string>& all_algorithm_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const auto& a : kAlgorithms) out.push_back(a.label);
    return out;
  }();
  return labels;
}

double caliper_width(const Eigen::VectorXd& values, double epsilon) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw std::invalid_argument("caliper_width: need at least 2 values");
  double mean = values.mean();
  double ss = (values.array() - mean).square().sum();
  return epsilon * std::sqrt(ss / (n - 1));
}

PairMatching nn_match(const std::vector<int>& refs, const std::vector<int>& cands,
                      const Eigen::MatrixXd& dist, int ratio, bool replacement) {
  const int nr = static_cast<int>(refs.size());
  const int nc = static_cast<int>(cands.size());
  if (dist.rows() != nr || dist.cols() != nc)
    throw std::invalid_argument("nn_match: distance matrix shape mismatch");
  PairMatching out;

  if (replacement) {
    for (int i = 0; i < nr; ++i) {
      std::vector<int> order;
      for (int j = 0; j < nc; ++j)
        if (std::isfinite(dist(i, j))) order.push_back(j);
      if (static_cast<int>(order.size()) < ratio) continue;
      std::partial_sort(order.begin(), order.begin() + ratio, order.end(),
                        [&](int a, int b) {
                          if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
                          return cands[a] < cands[b];  // tie: smaller candidate index
                        });
      for (int k = 0; k < ratio; ++k)
        out.links.push_back({refs[i], cands[order[k]], dist(i, order[k])});
      out.matched_refs.push_back(refs[i]);
    }
    return out;
  }

  // Global greedy: admissible pairs in (distance, ref index, cand index)
  // order, accepted while the candidate is unused and the ref still needs
  // matches. Refs that end with fewer than `ratio` links are dropped.
  struct Pair {
    double d;
    int ri, ci;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j)
      if (std::isfinite(dist(i, j))) pairs.push_back({dist(i, j), i, j});
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (refs[a.ri] != refs[b.ri]) return refs[a.ri] < refs[b.ri];
    return cands[a.ci] < cands[b.ci];
  });

  std::vector<bool> cand_used(nc, false);
  std::vector<int> ref_count(nr, 0);
  std::vector<std::vector<MatchLink>> ref_links(nr);
  for (const auto& p : pairs) {
    if (cand_used[p.ci] || ref_count[p.ri] >= ratio) continue;
    cand_used[p.ci] = true;
    ref_count[p.ri]++;
    ref_links[p.ri].push_back({refs[p.ri], cands[p.ci], p.d});
  }
  for (int i = 0; i < nr; ++i) {
    if (ref_count[i] != ratio) continue;
    out.matched_refs.push_back(refs[i]);
    for (const auto& l : ref_links[i]) out.links.push_back(l);
  }
  return out;
}

MatchedSet run_algorithm(const Cohort& eligible, const GpsMatrix& gps, const AlgorithmSpec& spec,
                         int reference_treatment, const MatchOptions& opts) {
  const int n = eligible.n();
  const int z = eligible.num_groups;
  const int t = reference_treatment;
  if (t < 1 || t > z) throw std::invalid_argument("reference treatment out of range");

  const Eigen::MatrixXd logits = logit_gps(gps);
  const std::vector<int> refs = eligible.group_indices(t);

  MatchedSet ms;
  ms.reference_treatment = t;
  ms.psi.assign(n, 0);
  ms.n_wm.assign(z, 0);

  std::vector<std::vector<MatchLink>> pair_links;   // per opposite group
  std::vector<std::vector<int>> pair_matched_refs;  // per opposite group

  for (int tp = 1; tp <= z; ++tp) {
    if (tp == t) continue;
    const std::vector<int> cands = eligible.group_indices(tp);

    // Feature matrix and metric for this algorithm family.
    Eigen::MatrixXd features;
    DistanceSpec dspec;
    switch (spec.distance) {
      case DistanceFamily::LinearGps:
        features = logits.col(t - 1);
        dspec.metric = Metric::LinearGps;
        dspec.columns = {0};
        break;
      case DistanceFamily::MahalanobisPair:
        features = select_columns(logits, {t - 1, tp - 1});
        dspec.metric = Metric::Mahalanobis;
        dspec.columns = {0, 1};
        break;
      case DistanceFamily::MahalanobisGps:
        features = logits;
        dspec.metric = Metric::Mahalanobis;
        dspec.columns.resize(z);
        for (int j = 0; j < z; ++j) dspec.columns[j] = j;
        break;
      case DistanceFamily::MahalanobisCovariates:
        features = eligible.covariates;
        dspec.metric = Metric::Mahalanobis;
        dspec.columns.resize(eligible.p());
        for (int j = 0; j < eligible.p(); ++j) dspec.columns[j] = j;
        break;
    }

    // Caliper widths per matched-upon column, from all eligible units.
    std::vector<double> widths;
    if (spec.caliper) {
      widths.resize(features.cols());
      for (int j = 0; j < features.cols(); ++j)
        widths[j] = caliper_width(features.col(j), opts.epsilon);
    }

    // Cluster membership sets on the remaining logit components.
    std::vector<std::vector<bool>> in_set;  // [cluster][unit]
    if (spec.clustering != ClusterMethod::None) {
      std::vector<int> cluster_cols;
      for (int w = 1; w <= z; ++w)
        if (w != t && w != tp) cluster_cols.push_back(w - 1);
      Eigen::MatrixXd cluster_data = select_columns(logits, cluster_cols);
      int k = std::min(opts.clusters, n);
      std::uint64_t cseed = Rng::derive(opts.seed, 0x636c7573ull, static_cast<std::uint64_t>(tp));
      ClusterSets sets;
      if (spec.clustering == ClusterMethod::KMeans) {
        sets = to_sets(kmeans(cluster_data, k, cseed), k);
      } else {
        sets = threshold_assign(fuzzy_cmeans(cluster_data, k, opts.fuzzy_m, cseed));
      }
      in_set.assign(sets.members.size(), std::vector<bool>(n, false));
      for (size_t c = 0; c < sets.members.size(); ++c)
        for (int i : sets.members[c]) in_set[c][i] = true;
    }

    // Mahalanobis covariance pooled over both groups of the pair.
    std::optional<CovarianceEstimate> cov;
    if (dspec.metric == Metric::Mahalanobis) {
      std::vector<int> pooled = refs;
      pooled.insert(pooled.end(), cands.begin(), cands.end());
      cov = estimate_covariance(take_rows(features, pooled));
    }

    Eigen::MatrixXd dist =
        pairwise_distances(take_rows(features, refs), take_rows(features, cands), dspec, cov);

    // Mark inadmissible pairs: caliper violations (componentwise) and
    // pairs that share no cluster.
    const int nr = static_cast<int>(refs.size());
    const int nc = static_cast<int>(cands.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < nc; ++j) {
        bool ok = true;
        if (spec.caliper) {
          for (int col = 0; col < features.cols() && ok; ++col)
            if (std::abs(features(refs[i], col) - features(cands[j], col)) > widths[col])
              ok = false;
        }
        if (ok && !in_set.empty()) {
          bool shared = false;
          for (size_t c = 0; c < in_set.size() && !shared; ++c)
            shared = in_set[c][refs[i]] && in_set[c][cands[j]];
          ok = shared;
        }
        if (!ok) dist(i, j) = kInf;
      }
    }

    PairMatching pm = nn_match(refs, cands, dist, spec.ratio, spec.replacement);
    pair_links.push_back(std::move(pm.links));
    pair_matched_refs.push_back(std::move(pm.matched_refs));
  }

  // Final cohort: refs matched across every opposite group.
  std::vector<bool> retained(n, false);
  {
    std::vector<int> hits(n, 0);
    for (const auto& mr : pair_matched_refs)
      for (int r : mr) hits[r]++;
    for (int r : refs)
      if (hits[r] == z - 1) {
        retained[r] = true;
        ms.retained_refs.push_back(r);
      }
  }
  if (ms.retained_refs.empty()) {
    ms.warnings.push_back("no reference units matched across all treatment groups");
    return ms;
  }

  for (int r : ms.retained_refs) ms.psi[r] = 1;
  for (const auto& links : pair_links)
    for (const auto& l : links)
      if (retained[l.ref_unit]) {
        ms.psi[l.matched_unit]++;
        ms.links.push_back(l);
      }
  for (int i = 0; i < n; ++i) ms.n_wm[eligible.treatments[i] - 1] += ms.psi[i];
  return ms;
}

MatchedSet prematched_set(const Cohort& eligible, int reference_treatment) {
  MatchedSet ms;
  ms.reference_treatment = reference_treatment;
  ms.psi.assign(eligible.n(), 1);
  ms.n_wm.assign(eligible.num_groups, 0);
  for (int i = 0; i < eligible.n(); ++i) {
    ms.n_wm[eligible.treatments[i] - 1]++;
    if (eligible.treatments[i] == reference_treatment) ms.retained_refs.push_back(i);
  }
  return ms;
}

void export_matched(const MatchedSet& ms, const Cohort& eligible, const AlgorithmSpec& spec,
                    const MatchOptions& opts, const std::string& csv_path,
                    const std::string& manifest_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write file '" + csv_path + "'");
  out << "id,treatment,psi\n";
  for (int i = 0; i < eligible.n(); ++i)
    if (ms.psi[i] > 0)
      out << eligible.unit_ids[i] << "," << eligible.treatments[i] << "," << ms.psi[i] << "\n";

  std::ofstream man(manifest_path);
  if (!man) throw std::runtime_error("cannot write file '" + manifest_path + "'");
  man << "algorithm=" << spec.label << "\n"
      << "reference=" << ms.reference_treatment << "\n"
      << "seed=" << opts.seed << "\n"
      << "clusters=" << opts.clusters << "\n"
      << "fuzzy_m=" << opts.fuzzy_m << "\n"
      << "epsilon=" << opts.epsilon << "\n"
      << "retained_refs=" << ms.retained_refs.size() << "\n";
}

MatchedSet import_matched(const std::string& csv_path, const Cohort& eligible,
                          int reference_treatment) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open file '" + csv_path + "'");
  std::map<std::string, int> index;
  for (int i = 0; i < eligible.n(); ++i) index[eligible.unit_ids[i]] = i;

  MatchedSet ms;
  ms.reference_treatment = reference_treatment;
  ms.psi.assign(eligible.n(), 0);
  ms.n_wm.assign(eligible.num_groups, 0);

  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("malformed matched-set row: " + line);
    std::string id = line.substr(0, c1);
    int psi = std::stoi(line.substr(c2 + 1));
    auto it = index.find(id);
    if (it == index.end()) throw std::runtime_error("unknown unit id '" + id + "' in matched set");
    ms.psi[it->second] = psi;
  }
  for (int i = 0; i < eligible.n(); ++i) {
    ms.n_wm[eligible.treatments[i] - 1] += ms.psi[i];
    if (ms.psi[i] > 0 && eligible.treatments[i] == reference_treatment)
      ms.retained_refs.push_back(i);
  }
  return ms;
}

}  // namespace gpsm
