#include "gpsm/distance.hpp"

#include <cmath>
#include <stdexcept>

namespace gpsm {

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& data, const std::vector<int>& cols) {
  Eigen::MatrixXd out(data.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) out.col(static_cast<int>(j)) = data.col(cols[j]);
  return out;
}

template <bool Parallel>
Eigen::MatrixXd compute(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& cand,
                        const DistanceSpec& spec, const std::optional<CovarianceEstimate>& cov) {
  if (spec.columns.empty()) throw std::invalid_argument("DistanceSpec: columns must be nonempty");
  if (spec.metric == Metric::LinearGps && spec.columns.size() != 1)
    throw std::invalid_argument("LinearGps distance requires exactly one column");
  for (int c : spec.columns)
    if (c < 0 || c >= ref.cols() || c >= cand.cols())
      throw std::invalid_argument("DistanceSpec column out of range");

  Eigen::MatrixXd a = select_columns(ref, spec.columns);
  Eigen::MatrixXd b = select_columns(cand, spec.columns);
  const int na = static_cast<int>(a.rows());
  const int nb = static_cast<int>(b.rows());
  Eigen::MatrixXd d(na, nb);

  if (spec.metric == Metric::LinearGps) {
#pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < nb; ++j) d(i, j) = std::abs(a(i, 0) - b(j, 0));
    return d;
  }

  if (spec.metric == Metric::Euclidean) {
#pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < nb; ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
    return d;
  }

  CovarianceEstimate est;
  if (cov) {
    est = *cov;
    if (est.inverse.rows() != a.cols())
      throw std::invalid_argument("covariance dimension does not match selected columns");
  } else {
    Eigen::MatrixXd pooled(na + nb, a.cols());
    pooled.topRows(na) = a;
    pooled.bottomRows(nb) = b;
    est = estimate_covariance(pooled);
  }
  const Eigen::MatrixXd& inv = est.inverse;
#pragma omp parallel for schedule(static) if (Parallel)
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      Eigen::VectorXd delta = (a.row(i) - b.row(j)).transpose();
      d(i, j) = std::sqrt(std::max(0.0, delta.dot(inv * delta)));
    }
  return d;
}

}  // namespace

CovarianceEstimate estimate_covariance(const Eigen::MatrixXd& data) {
  const int n = static_cast<int>(data.rows());
  if (n < 2) throw std::invalid_argument("estimate_covariance: need at least 2 rows");
  Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd sigma = centered.transpose() * centered / (n - 1);
  sigma = 0.5 * (sigma + sigma.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd& vals = eig.eigenvalues();
  double floor = 1e-10 * std::max(vals.maxCoeff(), 0.0);

  CovarianceEstimate est;
  est.matrix = sigma;
  est.inverse = Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
  est.eigen_floor = 0.0;
  for (int k = 0; k < vals.size(); ++k) {
    if (vals(k) <= floor) continue;
    est.inverse += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / vals(k);
    est.rank++;
    if (est.eigen_floor == 0.0 || vals(k) < est.eigen_floor) est.eigen_floor = vals(k);
  }
  return est;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& cand,
                                   const DistanceSpec& spec,
                                   const std::optional<CovarianceEstimate>& cov) {
  return compute<true>(ref, cand, spec, cov);
}

Eigen::MatrixXd pairwise_distances_serial(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& cand,
                                          const DistanceSpec& spec,
                                          const std::optional<CovarianceEstimate>& cov) {
  return compute<false>(ref, cand, spec, cov);
}

}  // namespace gpsm
