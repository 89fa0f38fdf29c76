#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gpsm/gps.hpp"
#include "gpsm/rng.hpp"
#include "gpsm/simgen.hpp"
#include "test_util.hpp"

using gpsm::Cohort;

namespace {

// Independent binary logistic regression (IRLS), used as an oracle for the
// Z=2 reduction of the multinomial fit.
Eigen::VectorXd binary_logit_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    Eigen::VectorXd g = x.transpose() * (y - p);
    Eigen::VectorXd step = h.ldlt().solve(g);
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-12) break;
  }
  return beta;
}

Cohort random_cohort(int n_per_group, int z, int p, std::uint64_t seed, double spread = 1.0) {
  gpsm::Rng rng(seed);
  std::vector<int> treatments;
  Eigen::MatrixXd x(n_per_group * z, p);
  int row = 0;
  for (int w = 1; w <= z; ++w)
    for (int i = 0; i < n_per_group; ++i) {
      treatments.push_back(w);
      for (int j = 0; j < p; ++j) x(row, j) = rng.normal() + spread * 0.3 * w;
      ++row;
    }
  return testutil::make_cohort(treatments, x);
}

}  // namespace

TEST_CASE("intercept-only fit recovers group proportions") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(8, 1);
  Cohort c = testutil::make_cohort({1, 1, 1, 2, 2, 2, 3, 3}, x);
  // All-zero covariates: only the intercept identifies the model, and
  // ridge-jittered Newton still reaches the MLE (group proportions).
  gpsm::GpsModel m = gpsm::fit_gps(c);
  gpsm::GpsMatrix g = gpsm::predict_gps(m, c);
  for (int i = 0; i < 8; ++i) {
    CHECK(g.probs(i, 0) == doctest::Approx(3.0 / 8.0).epsilon(1e-6));
    CHECK(g.probs(i, 1) == doctest::Approx(3.0 / 8.0).epsilon(1e-6));
    CHECK(g.probs(i, 2) == doctest::Approx(2.0 / 8.0).epsilon(1e-6));
  }
}

TEST_CASE("Z=2 multinomial fit matches an independent binary logit") {
  Cohort c = random_cohort(40, 2, 3, 7);
  gpsm::GpsModel m = gpsm::fit_gps(c);

  Eigen::MatrixXd design(c.n(), c.p() + 1);
  design.col(0).setOnes();
  design.rightCols(c.p()) = c.covariates;
  Eigen::VectorXd y(c.n());
  for (int i = 0; i < c.n(); ++i) y(i) = c.treatments[i] == 2 ? 1.0 : 0.0;
  Eigen::VectorXd oracle = binary_logit_irls(design, y);

  for (int j = 0; j < oracle.size(); ++j)
    CHECK(m.coefficients(0, j) == doctest::Approx(oracle(j)).epsilon(1e-6));
}

TEST_CASE("perfectly balanced covariate gives zero slopes") {
  // The same covariate values repeated in each of 3 equal groups.
  std::vector<int> treatments;
  Eigen::MatrixXd x(12, 1);
  int row = 0;
  for (int w = 1; w <= 3; ++w)
    for (double v : {-1.0, 0.0, 0.5, 1.5}) {
      treatments.push_back(w);
      x(row++, 0) = v;
    }
  gpsm::GpsModel m = gpsm::fit_gps(testutil::make_cohort(treatments, x));
  CHECK(std::abs(m.coefficients(0, 1)) < 1e-6);
  CHECK(std::abs(m.coefficients(1, 1)) < 1e-6);
}

TEST_CASE("predict_gps rows sum to one and respect clamping") {
  Cohort c = random_cohort(50, 3, 4, 11);
  gpsm::GpsModel m = gpsm::fit_gps(c);
  gpsm::GpsMatrix g = gpsm::predict_gps(m, c);
  for (int i = 0; i < c.n(); ++i) {
    CHECK(std::abs(g.probs.row(i).sum() - 1.0) < 1e-10);
    for (int w = 0; w < 3; ++w) {
      CHECK(g.probs(i, w) > 0.0);
      CHECK(g.probs(i, w) < 1.0);
    }
  }
}

TEST_CASE("all-zero coefficients predict uniform rows") {
  Cohort c = random_cohort(5, 3, 2, 3);
  gpsm::GpsModel m;
  m.coefficients = Eigen::MatrixXd::Zero(2, 3);
  gpsm::GpsMatrix g = gpsm::predict_gps(m, c);
  for (int i = 0; i < c.n(); ++i)
    for (int w = 0; w < 3; ++w) CHECK(g.probs(i, w) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("logit transform") {
  CHECK(gpsm::logit(0.5) == doctest::Approx(0.0));
  CHECK(gpsm::logit(0.7310585786300049) == doctest::Approx(1.0).epsilon(1e-9));

  // logit(sigmoid(x)) == x within 1e-9 where sigmoid is well conditioned
  // (beyond |x| ~ 18 the double representation of p near 1 caps the
  // attainable roundtrip accuracy regardless of implementation)
  gpsm::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double v = (rng.uniform() * 2.0 - 1.0) * 15.0;
    double p = 1.0 / (1.0 + std::exp(-v));
    CHECK(std::abs(gpsm::logit(p) - v) < 1e-9);
  }

  // the reverse direction is well conditioned over the whole clamp range
  for (int i = 0; i < 200; ++i) {
    double v = (rng.uniform() * 2.0 - 1.0) * 27.0;
    double p = 1.0 / (1.0 + std::exp(-v));
    double back = 1.0 / (1.0 + std::exp(-gpsm::logit(p)));
    CHECK(std::abs(back - p) < 1e-9);
  }

  // strict monotonicity on random probabilities
  for (int i = 0; i < 100; ++i) {
    double p1 = rng.uniform(), p2 = rng.uniform();
    if (p1 > p2) std::swap(p1, p2);
    if (p1 == p2) continue;
    CHECK(gpsm::logit(p1) < gpsm::logit(p2));
  }
}

TEST_CASE("fit_gps log-likelihood is non-decreasing across iterations") {
  Cohort c = random_cohort(60, 3, 5, 13);
  gpsm::GpsModel m = gpsm::fit_gps(c);
  for (size_t i = 1; i < m.log_likelihood_trace.size(); ++i)
    CHECK(m.log_likelihood_trace[i] >= m.log_likelihood_trace[i - 1]);
}

TEST_CASE("common_support hand-enumerated Z=2 example") {
  // Group 1 column-1 probs {0.1,0.27,0.3}, group 2 {0.25,0.28,0.6}:
  // bounds are (max of group minima, min of group maxima) = (0.25, 0.30).
  Eigen::MatrixXd probs(6, 2);
  probs << 0.10, 0.90, 0.27, 0.73, 0.30, 0.70, 0.25, 0.75, 0.28, 0.72, 0.60, 0.40;
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  Cohort c = testutil::make_cohort({1, 1, 1, 2, 2, 2}, x);
  gpsm::EligibilityMask mask = gpsm::common_support(gpsm::GpsMatrix{probs}, c);
  CHECK(mask.bounds[0].first == doctest::Approx(0.25));
  CHECK(mask.bounds[0].second == doctest::Approx(0.30));
  CHECK(mask.bounds[1].first == doctest::Approx(0.70));
  CHECK(mask.bounds[1].second == doctest::Approx(0.75));
  // the interval is strictly open: boundary attainers are excluded
  std::vector<bool> want = {false, true, false, false, true, false};
  for (int i = 0; i < 6; ++i) CHECK(mask.eligible[i] == want[i]);
}

TEST_CASE("identical GPS columns leave only boundary attainers ineligible") {
  gpsm::Rng rng(21);
  int n = 30;
  Eigen::MatrixXd probs(n, 2);
  Eigen::MatrixXd x(n, 1);
  std::vector<int> treatments;
  for (int i = 0; i < n; ++i) {
    double p = 0.2 + 0.6 * rng.uniform();
    int w = 1 + (i % 2);
    // both groups share the same marginal distribution of GPS values
    probs(i, 0) = p;
    probs(i, 1) = 1 - p;
    x(i, 0) = rng.normal();
    treatments.push_back(w);
  }
  Cohort c = testutil::make_cohort(treatments, x);
  gpsm::EligibilityMask mask = gpsm::common_support(gpsm::GpsMatrix{probs}, c);
  for (int i = 0; i < n; ++i) {
    bool interior = probs(i, 0) > mask.bounds[0].first && probs(i, 0) < mask.bounds[0].second &&
                    probs(i, 1) > mask.bounds[1].first && probs(i, 1) < mask.bounds[1].second;
    CHECK(mask.eligible[i] == interior);
  }
}

TEST_CASE("disjoint GPS ranges yield empty-support error") {
  Eigen::MatrixXd probs(4, 2);
  probs << 0.1, 0.9, 0.2, 0.8, 0.7, 0.3, 0.8, 0.2;
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Cohort c = testutil::make_cohort({1, 1, 2, 2}, x);
  CHECK_THROWS_WITH_AS(gpsm::common_support(gpsm::GpsMatrix{probs}, c),
                       doctest::Contains("empty common support"), std::runtime_error);
}

TEST_CASE("common_support is invariant to unit permutation") {
  Cohort c = random_cohort(25, 3, 2, 17);
  gpsm::GpsMatrix g = gpsm::predict_gps(gpsm::fit_gps(c), c);
  gpsm::EligibilityMask mask = gpsm::common_support(g, c);

  std::vector<int> perm(c.n());
  std::iota(perm.begin(), perm.end(), 0);
  gpsm::Rng rng(3);
  for (int i = c.n() - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);

  Cohort pc = c.subset(perm);
  Eigen::MatrixXd pprobs(c.n(), 3);
  for (int i = 0; i < c.n(); ++i) pprobs.row(i) = g.probs.row(perm[i]);
  gpsm::EligibilityMask pmask = gpsm::common_support(gpsm::GpsMatrix{pprobs}, pc);
  for (int i = 0; i < c.n(); ++i) CHECK(pmask.eligible[i] == mask.eligible[perm[i]]);
}

TEST_CASE("trim_and_refit performs exactly one refit and stays close on large samples") {
  gpsm::SimConfig cfg;
  cfg.n1 = 667;  // ~2000 units
  cfg.b = 0.25;
  Cohort c = gpsm::sample_cohort(cfg, 31);
  gpsm::TrimResult tr = gpsm::trim_and_refit(c);

  // Survivors = eligible units in input order.
  int n_eligible = 0;
  for (bool e : tr.mask.eligible) n_eligible += e;
  CHECK(tr.eligible.n() == n_eligible);
  CHECK(tr.eligible.n() < c.n());

  // Refit changes probabilities by < 0.05 in sup-norm on this sample.
  gpsm::GpsModel first = gpsm::fit_gps(c);
  gpsm::GpsMatrix before = gpsm::predict_gps(first, tr.eligible);
  CHECK((before.probs - tr.gps.probs).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("trim_and_refit errors when a group is emptied") {
  // Two units per group: every unit attains a group min or max, so the
  // strict interval empties the support.
  Eigen::MatrixXd x(4, 1);
  x << -1, 1, -1.1, 1.1;
  Cohort c = testutil::make_cohort({1, 1, 2, 2}, x);
  CHECK_THROWS(gpsm::trim_and_refit(c));
}
