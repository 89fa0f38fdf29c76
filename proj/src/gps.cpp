#include "gpsm/gps.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace gpsm {

namespace {

constexpr double kProbClamp = 1e-12;

// Design matrix with leading intercept column.
Eigen::MatrixXd design_matrix(const Cohort& c) {
  Eigen::MatrixXd x(c.n(), c.p() + 1);
  x.col(0).setOnes();
  x.rightCols(c.p()) = c.covariates;
  return x;
}

// Row-wise softmax of [0 | X B^T]; numerically stabilized.
Eigen::MatrixXd softmax_probs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& beta) {
  const int n = static_cast<int>(x.rows());
  const int z = static_cast<int>(beta.rows()) + 1;
  Eigen::MatrixXd eta(n, z);
  eta.col(0).setZero();
  eta.rightCols(z - 1) = x * beta.transpose();
  Eigen::MatrixXd probs(n, z);
  for (int i = 0; i < n; ++i) {
    double mx = eta.row(i).maxCoeff();
    Eigen::ArrayXd e = (eta.row(i).array() - mx).exp();
    probs.row(i) = (e / e.sum()).matrix();
  }
  return probs;
}

double log_likelihood(const Eigen::MatrixXd& probs, const std::vector<int>& treatments) {
  double ll = 0.0;
  for (size_t i = 0; i < treatments.size(); ++i)
    ll += std::log(std::max(probs(static_cast<int>(i), treatments[i] - 1), 1e-300));
  return ll;
}

}  // namespace

GpsModel fit_gps(const Cohort& c, const FitOptions& opts) {
  const int n = c.n();
  const int z = c.num_groups;
  const int q = c.p() + 1;       // terms per category
  const int dim = (z - 1) * q;   // full parameter block

  GpsModel model;
  model.reference_category = 1;
  model.coefficients = Eigen::MatrixXd::Zero(z - 1, q);
  if (n <= z * q)
    model.warnings.push_back("sample size n <= Z*(P+1); estimates may be unstable");

  const Eigen::MatrixXd x = design_matrix(c);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, z - 1);  // indicators for categories 2..Z
  for (int i = 0; i < n; ++i)
    if (c.treatments[i] >= 2) y(i, c.treatments[i] - 2) = 1.0;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  auto unpack = [&](const Eigen::VectorXd& t) {
    Eigen::MatrixXd b(z - 1, q);
    for (int w = 0; w < z - 1; ++w) b.row(w) = t.segment(w * q, q).transpose();
    return b;
  };

  Eigen::MatrixXd probs = softmax_probs(x, unpack(theta));
  double ll = log_likelihood(probs, c.treatments);
  model.log_likelihood_trace.push_back(ll);

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    // Score g_w = X^T (y_w - p_w) for categories w = 2..Z.
    Eigen::VectorXd score(dim);
    for (int w = 0; w < z - 1; ++w)
      score.segment(w * q, q) = x.transpose() * (y.col(w) - probs.col(w + 1));

    if (score.cwiseAbs().maxCoeff() < opts.score_tol) {
      model.converged = true;
      model.iterations = iter - 1;
      break;
    }

    // Hessian blocks H_{wv} = -X^T diag(p_w (delta_wv - p_v)) X.
    Eigen::MatrixXd hess(dim, dim);
    for (int w = 0; w < z - 1; ++w) {
      for (int v = w; v < z - 1; ++v) {
        Eigen::ArrayXd wts = probs.col(w + 1).array() *
                             ((w == v ? 1.0 : 0.0) - probs.col(v + 1).array());
        Eigen::MatrixXd block = x.transpose() * wts.matrix().asDiagonal() * x;
        hess.block(w * q, v * q, q, q) = -block;
        if (v != w) hess.block(v * q, w * q, q, q) = -block;
      }
    }

    Eigen::MatrixXd neg_hess = -hess;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(score);
    if (step.size() == 0 || !step.allFinite()) {
      neg_hess.diagonal().array() += 1e-8 * (1.0 + neg_hess.diagonal().maxCoeff());
      step = neg_hess.ldlt().solve(score);
    }

    // Step-halving keeps the log-likelihood non-decreasing.
    double step_scale = 1.0;
    Eigen::VectorXd theta_new;
    Eigen::MatrixXd probs_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 30; ++h) {
      theta_new = theta + step_scale * step;
      probs_new = softmax_probs(x, unpack(theta_new));
      ll_new = log_likelihood(probs_new, c.treatments);
      if (ll_new >= ll) break;
      step_scale *= 0.5;
    }
    if (ll_new < ll) {  // no ascent direction left
      model.converged = true;
      model.iterations = iter - 1;
      break;
    }

    double rel_change = std::abs(ll_new - ll) / (std::abs(ll) + 1.0);
    theta = theta_new;
    probs = probs_new;
    ll = ll_new;
    model.log_likelihood_trace.push_back(ll);
    model.iterations = iter;
    if (rel_change < opts.loglik_rel_tol) {
      model.converged = true;
      break;
    }
  }

  model.coefficients = unpack(theta);
  if (!model.converged)
    throw std::runtime_error("fit_gps did not converge after " +
                             std::to_string(model.iterations) + " iterations");
  if (model.coefficients.cwiseAbs().maxCoeff() > 30.0)
    model.warnings.push_back("quasi-separation: coefficient magnitude exceeds 30");
  return model;
}

GpsMatrix predict_gps(const GpsModel& m, const Cohort& c) {
  if (m.coefficients.cols() != c.p() + 1)
    throw std::runtime_error("predict_gps: covariate dimension mismatch");
  Eigen::MatrixXd probs = softmax_probs(design_matrix(c), m.coefficients);
  // Clamp then renormalize so rows stay on the open simplex.
  probs = probs.cwiseMax(kProbClamp).cwiseMin(1.0 - kProbClamp);
  for (int i = 0; i < probs.rows(); ++i) probs.row(i) /= probs.row(i).sum();
  return GpsMatrix{std::move(probs)};
}

Eigen::MatrixXd logit_gps(const GpsMatrix& g) {
  return (g.probs.array() / (1.0 - g.probs.array())).log().matrix();
}

EligibilityMask common_support(const GpsMatrix& g, const Cohort& c) {
  const int n = c.n();
  const int z = c.num_groups;
  EligibilityMask mask;
  mask.bounds.resize(z);
  for (int w = 0; w < z; ++w) {
    double r_min = -std::numeric_limits<double>::infinity();
    double r_max = std::numeric_limits<double>::infinity();
    for (int grp = 1; grp <= z; ++grp) {
      double gmin = std::numeric_limits<double>::infinity();
      double gmax = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (c.treatments[i] != grp) continue;
        gmin = std::min(gmin, g.probs(i, w));
        gmax = std::max(gmax, g.probs(i, w));
      }
      r_min = std::max(r_min, gmin);
      r_max = std::min(r_max, gmax);
    }
    mask.bounds[w] = {r_min, r_max};
  }
  mask.eligible.assign(n, true);
  int n_eligible = 0;
  for (int i = 0; i < n; ++i) {
    for (int w = 0; w < z; ++w) {
      double p = g.probs(i, w);
      if (!(p > mask.bounds[w].first && p < mask.bounds[w].second)) {
        mask.eligible[i] = false;
        break;
      }
    }
    if (mask.eligible[i]) ++n_eligible;
  }
  if (n_eligible == 0) throw std::runtime_error("empty common support");
  return mask;
}

TrimResult trim_and_refit(const Cohort& c, const FitOptions& opts) {
  GpsModel first = fit_gps(c, opts);
  GpsMatrix probs = predict_gps(first, c);
  EligibilityMask mask = common_support(probs, c);

  std::vector<int> keep;
  for (int i = 0; i < c.n(); ++i)
    if (mask.eligible[i]) keep.push_back(i);
  Cohort survivors = c.subset(keep);
  auto sizes = survivors.group_sizes();
  for (int w = 0; w < survivors.num_groups; ++w)
    if (sizes[w] < 2)
      throw std::runtime_error("trimming left treatment group " + std::to_string(w + 1) +
                               " with fewer than 2 units");

  TrimResult out;
  out.model = fit_gps(survivors, opts);  // refit exactly once
  out.gps = predict_gps(out.model, survivors);
  out.eligible = std::move(survivors);
  out.mask = std::move(mask);
  return out;
}

void write_model(const GpsModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << "category,term,estimate\n";
  for (int w = 0; w < m.coefficients.rows(); ++w)
    for (int j = 0; j < m.coefficients.cols(); ++j)
      out << (w + 2) << "," << (j == 0 ? std::string("intercept") : "x" + std::to_string(j))
          << "," << m.coefficients(w, j) << "\n";
}

void write_eligibility(const Cohort& c, const EligibilityMask& mask, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << "id,eligible\n";
  for (int i = 0; i < c.n(); ++i) out << c.unit_ids[i] << "," << (mask.eligible[i] ? 1 : 0) << "\n";
}

}  // namespace gpsm
