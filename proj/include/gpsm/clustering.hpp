#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gpsm {

struct HardClustering {
  std::vector<int> assignment;  // 1..K
  Eigen::MatrixXd centers;      // K x d
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // per Lloyd iteration of the winning restart
};

struct FuzzyClustering {
  Eigen::MatrixXd membership;  // n x K, rows sum to 1
  Eigen::MatrixXd centers;     // K x d
  double objective = 0.0;      // J_m
  double m = 2.0;
  std::vector<double> objective_trace;
};

// For hard clusterings the sets partition the units; for fuzzy ones a unit
// belongs to every cluster with membership >= 1/K (possibly several).
struct ClusterSets {
  std::vector<std::vector<int>> members;  // per cluster, unit indices
};

// Lloyd's algorithm, k-means++ seeding, 10 restarts, best inertia kept.
HardClustering kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                      int restarts = 10, int max_iterations = 300);

FuzzyClustering fuzzy_cmeans(const Eigen::MatrixXd& data, int k, double m, std::uint64_t seed,
                             int max_iterations = 300, double tol = 1e-6);

ClusterSets threshold_assign(const FuzzyClustering& f);
ClusterSets to_sets(const HardClustering& h, int k);

}  // namespace gpsm
