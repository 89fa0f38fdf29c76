#include "gpsm/simgen.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gpsm/rng.hpp"

namespace gpsm {

std::vector<int> SimConfig::group_sizes() const {
  std::vector<int> sizes;
  int n2 = gamma * n1;
  int n3 = gamma * gamma * n1;
  if (z == 3) {
    sizes = {n1, n2, n3};
  } else if (z == 5) {
    sizes = {n1, n2, n3, n2, n3};
  } else if (z == 10) {
    sizes = {n1, n2, n3, n2, n3, n1, n2, n3, n2, n3};
  } else {
    throw std::invalid_argument("SimConfig: Z must be 3, 5, or 10");
  }
  return sizes;
}

ConfigGrid enumerate_grid(GridKind which) {
  const double inf = std::numeric_limits<double>::infinity();
  ConfigGrid grid;

  if (which == GridKind::Z35) {
    grid.exclusions = {"P=20 and n1=600", "P=20 and b=1"};
    for (int z : {3, 5})
      for (int n1 : {600, 1200})
        for (int gamma : {1, 2})
          for (double b : {0.0, 0.25, 0.5, 0.75, 1.0})
            for (double lambda : {0.0, 0.25})
              for (double s2 : {0.5, 1.0, 2.0})
                for (double s3 : {0.5, 1.0, 2.0})
                  for (double eta : {-3.5, 0.0, 3.5})
                    for (double df : {7.0, inf})
                      for (int p : {5, 10, 20}) {
                        if (p == 20 && n1 == 600) continue;
                        if (p == 20 && b == 1.0) continue;
                        grid.configs.push_back({z, n1, gamma, b, lambda, s2, s3, eta, df, p});
                      }
    return grid;
  }

  grid.exclusions = {"P=20 and b=1"};
  for (int gamma : {1, 2})
    for (double b : {0.0, 0.25, 0.5, 0.75, 1.0})
      for (double df : {7.0, inf})
        for (int p : {10, 20}) {
          if (p == 20 && b == 1.0) continue;
          grid.configs.push_back({10, 900, gamma, b, 0.0, 1.0, 1.0, 0.0, df, p});
        }
  return grid;
}

Cohort sample_cohort(const SimConfig& cfg, std::uint64_t seed) {
  const int p = cfg.p;
  const auto sizes = cfg.group_sizes();
  const int n = [&] {
    int total = 0;
    for (int s : sizes) total += s;
    return total;
  }();

  // delta derived from the slant eta; eta = 0 collapses to the normal.
  const double delta = cfg.eta / std::sqrt(1.0 + cfg.eta * cfg.eta);
  const double resid = std::sqrt(1.0 - delta * delta);
  const bool finite_df = std::isfinite(cfg.df);

  Cohort c;
  c.num_groups = cfg.z;
  c.covariates.resize(n, p);
  c.unit_ids.reserve(n);
  c.treatments.reserve(n);
  for (int w = 1; w <= cfg.z; ++w) c.label_map[std::to_string(w)] = w;

  int row = 0;
  for (int w = 1; w <= cfg.z; ++w) {
    // Scale matrix: diagonal by group pattern (1, s2^2, s3^2, s2^2, s3^2),
    // off-diagonals lambda; identity for Z=10.
    double diag = 1.0;
    if (cfg.z != 10) {
      const double pattern[5] = {1.0, cfg.sigma2_sq, cfg.sigma3_sq, cfg.sigma2_sq, cfg.sigma3_sq};
      diag = pattern[(w - 1) % 5];
    }
    const double lambda = (cfg.z == 10) ? 0.0 : cfg.lambda;
    const double sd = std::sqrt(diag);
    const double rho = lambda / diag;

    Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(p, p, rho);
    corr.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("scale matrix for treatment group " + std::to_string(w) +
                               " is not positive definite");
    Eigen::MatrixXd chol = llt.matrixL();

    Eigen::VectorXd mu(p);
    for (int j = 0; j < p; ++j) mu(j) = ((j % cfg.z) + 1 == w) ? cfg.b : 0.0;

    Rng rng(Rng::derive(seed, 0x73696d67656eull, static_cast<std::uint64_t>(w)));
    Eigen::VectorXd zvec(p);
    for (int u = 0; u < sizes[w - 1]; ++u) {
      double u0 = std::abs(rng.normal());
      for (int j = 0; j < p; ++j) zvec(j) = rng.normal();
      Eigen::VectorXd eps = chol * zvec;
      double scale = finite_df ? std::sqrt(rng.chi_squared(cfg.df) / cfg.df) : 1.0;
      for (int j = 0; j < p; ++j) {
        double s0 = delta * u0 + resid * eps(j);
        c.covariates(row, j) = mu(j) + sd * s0 / scale;
      }
      c.unit_ids.push_back("u" + std::to_string(row + 1));
      c.treatments.push_back(w);
      ++row;
    }
  }
  return c;
}

}  // namespace gpsm
