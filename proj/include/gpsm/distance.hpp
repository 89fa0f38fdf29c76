#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace gpsm {

enum class Metric { LinearGps, Euclidean, Mahalanobis };

struct DistanceSpec {
  Metric metric = Metric::Euclidean;
  std::vector<int> columns;  // feature columns the metric applies to
};

struct CovarianceEstimate {
  Eigen::MatrixXd matrix;   // sample covariance, denominator n-1
  Eigen::MatrixXd inverse;  // pseudo-inverse from the retained spectrum
  int rank = 0;
  double eigen_floor = 0.0;  // smallest retained eigenvalue
};

// Eigenvalues below 1e-10 * lambda_max are discarded before inversion.
CovarianceEstimate estimate_covariance(const Eigen::MatrixXd& data);

// a x b distance matrix between reference and candidate rows. Rows are
// computed in parallel; see pairwise_distances_serial for the reference
// implementation tests compare against. Mahalanobis without a supplied
// covariance estimates it on the union of ref and cand rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& cand,
                                   const DistanceSpec& spec,
                                   const std::optional<CovarianceEstimate>& cov = std::nullopt);

Eigen::MatrixXd pairwise_distances_serial(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& cand,
                                          const DistanceSpec& spec,
                                          const std::optional<CovarianceEstimate>& cov = std::nullopt);

}  // namespace gpsm
