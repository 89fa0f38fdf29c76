#include "gpsm/clustering.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gpsm/rng.hpp"

namespace gpsm {

namespace {

double sq_dist(const Eigen::MatrixXd& data, int i, const Eigen::MatrixXd& centers, int k) {
  return (data.row(i) - centers.row(k)).squaredNorm();
}

// k-means++ seeding; ties and the weighted draw are deterministic per rng.
Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const int n = static_cast<int>(data.rows());
  Eigen::MatrixXd centers(k, data.cols());
  int first = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
  centers.row(0) = data.row(first);
  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i) d2(i) = sq_dist(data, i, centers, 0);
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    int pick = 0;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
    } else {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = data.row(pick);
    for (int i = 0; i < n; ++i) d2(i) = std::min(d2(i), sq_dist(data, i, centers, c));
  }
  return centers;
}

struct LloydResult {
  std::vector<int> assignment;  // 0-based
  Eigen::MatrixXd centers;
  double inertia;
  std::vector<double> trace;
};

LloydResult lloyd(const Eigen::MatrixXd& data, int k, Rng& rng, int max_iterations) {
  const int n = static_cast<int>(data.rows());
  Eigen::MatrixXd centers = kmeanspp_init(data, k, rng);
  std::vector<int> assign(n, -1);
  LloydResult res;

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : inertia) reduction(|| : changed)
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(data, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(data, i, centers, c);
        if (d < best_d) {  // ties keep the lower cluster index
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
      inertia += best_d;
    }

    // Empty clusters are reseeded to the point farthest from its center.
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) counts[assign[i]]++;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;
        double d = sq_dist(data, i, centers, assign[i]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      counts[assign[far]]--;
      assign[far] = c;
      counts[c] = 1;
      changed = true;
    }

    res.trace.push_back(inertia);
    if (!changed && iter > 0) break;

    centers.setZero();
    for (int i = 0; i < n; ++i) centers.row(assign[i]) += data.row(i);
    for (int c = 0; c < k; ++c) centers.row(c) /= counts[c];
  }

  // Final inertia against the final centers.
  double inertia = 0.0;
  for (int i = 0; i < n; ++i) inertia += sq_dist(data, i, centers, assign[i]);
  res.assignment = std::move(assign);
  res.centers = std::move(centers);
  res.inertia = inertia;
  return res;
}

}  // namespace

HardClustering kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts,
                      int max_iterations) {
  const int n = static_cast<int>(data.rows());
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: require 1 <= K <= n");

  LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(Rng::derive(seed, 0x6b6d65616e73ull, static_cast<std::uint64_t>(r)));
    LloydResult res = lloyd(data, k, rng, max_iterations);
    if (res.inertia < best.inertia) best = std::move(res);  // tie keeps lower restart index
  }

  HardClustering out;
  out.assignment.resize(n);
  for (int i = 0; i < n; ++i) out.assignment[i] = best.assignment[i] + 1;
  out.centers = std::move(best.centers);
  out.inertia = best.inertia;
  out.inertia_trace = std::move(best.trace);
  return out;
}

FuzzyClustering fuzzy_cmeans(const Eigen::MatrixXd& data, int k, double m, std::uint64_t seed,
                             int max_iterations, double tol) {
  const int n = static_cast<int>(data.rows());
  if (k < 1 || k > n) throw std::invalid_argument("fuzzy_cmeans: require 1 <= K <= n");
  if (m <= 1.0) throw std::invalid_argument("fuzzy_cmeans: require m > 1");

  Rng rng(Rng::derive(seed, 0x66636d65616e73ull));
  Eigen::MatrixXd centers = kmeanspp_init(data, k, rng);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, k);
  const double expo = 2.0 / (m - 1.0);

  auto update_memberships = [&]() {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      // A point coincident with a center gets full membership there.
      int coincident = -1;
      Eigen::VectorXd d2(k);
      for (int c = 0; c < k; ++c) {
        d2(c) = sq_dist(data, i, centers, c);
        if (d2(c) == 0.0 && coincident < 0) coincident = c;
      }
      if (coincident >= 0) {
        u.row(i).setZero();
        u(i, coincident) = 1.0;
        continue;
      }
      for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += std::pow(d2(c) / d2(j), expo * 0.5);
        u(i, c) = 1.0 / s;
      }
    }
  };

  auto objective = [&]() {
    double obj = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : obj)
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        obj += std::pow(u(i, c), m) * sq_dist(data, i, centers, c);
    return obj;
  };

  update_memberships();
  FuzzyClustering out;
  out.m = m;
  out.objective_trace.push_back(objective());

  for (int iter = 0; iter < max_iterations; ++iter) {
    // Centers: weighted means with weights u^m.
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(data.cols());
      double den = 0.0;
      for (int i = 0; i < n; ++i) {
        double w = std::pow(u(i, c), m);
        num += w * data.row(i);
        den += w;
      }
      if (den > 0.0) centers.row(c) = num / den;
    }

    Eigen::MatrixXd u_prev = u;
    update_memberships();
    out.objective_trace.push_back(objective());
    if ((u - u_prev).cwiseAbs().maxCoeff() < tol) break;
  }

  out.membership = std::move(u);
  out.centers = std::move(centers);
  out.objective = out.objective_trace.back();
  return out;
}

ClusterSets threshold_assign(const FuzzyClustering& f) {
  const int n = static_cast<int>(f.membership.rows());
  const int k = static_cast<int>(f.membership.cols());
  const double threshold = 1.0 / k;
  ClusterSets sets;
  sets.members.resize(k);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c)
      if (f.membership(i, c) >= threshold) sets.members[c].push_back(i);
  return sets;
}

ClusterSets to_sets(const HardClustering& h, int k) {
  ClusterSets sets;
  sets.members.resize(k);
  for (size_t i = 0; i < h.assignment.size(); ++i)
    sets.members[h.assignment[i] - 1].push_back(static_cast<int>(i));
  return sets;
}

}  // namespace gpsm
