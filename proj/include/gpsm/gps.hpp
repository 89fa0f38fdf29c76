#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gpsm/cohort.hpp"

namespace gpsm {

// Multinomial logit coefficients vs. the reference category (treatment 1).
// Row w-2 holds the log-odds of category w (w = 2..Z); intercept first.
struct GpsModel {
  Eigen::MatrixXd coefficients;  // (Z-1) x (P+1)
  int reference_category = 1;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
  std::vector<double> log_likelihood_trace;
};

struct GpsMatrix {
  Eigen::MatrixXd probs;  // n x Z, rows sum to 1, entries clamped into (0,1)
};

struct EligibilityMask {
  std::vector<bool> eligible;                   // length n
  std::vector<std::pair<double, double>> bounds;  // per treatment (r_min, r_max)
};

struct FitOptions {
  int max_iterations = 200;
  double score_tol = 1e-8;
  double loglik_rel_tol = 1e-12;
};

GpsModel fit_gps(const Cohort& c, const FitOptions& opts = {});
GpsMatrix predict_gps(const GpsModel& m, const Cohort& c);

Eigen::MatrixXd logit_gps(const GpsMatrix& g);
inline double logit(double p) { return std::log(p / (1.0 - p)); }

EligibilityMask common_support(const GpsMatrix& g, const Cohort& c);

struct TrimResult {
  Cohort eligible;     // survivors, original labels
  GpsModel model;      // refit on survivors
  GpsMatrix gps;       // predictions of the refit model on survivors
  EligibilityMask mask;  // mask on the input cohort
};

// Fit, trim to the rectangular common support, refit exactly once.
TrimResult trim_and_refit(const Cohort& c, const FitOptions& opts = {});

void write_model(const GpsModel& m, const std::string& path);
void write_eligibility(const Cohort& c, const EligibilityMask& mask, const std::string& path);

}  // namespace gpsm
