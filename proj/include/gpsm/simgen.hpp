#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gpsm/cohort.hpp"

namespace gpsm {

// One cell of the factorial simulation design.
struct SimConfig {
  int z = 3;
  int n1 = 600;
  int gamma = 1;
  double b = 0.0;
  double lambda = 0.0;
  double sigma2_sq = 1.0;
  double sigma3_sq = 1.0;
  double eta = 0.0;
  double df = std::numeric_limits<double>::infinity();
  int p = 5;

  std::vector<int> group_sizes() const;
};

enum class GridKind { Z35, Z10 };

struct ConfigGrid {
  std::vector<SimConfig> configs;
  std::vector<std::string> exclusions;  // one line per discarded cell class
};

// Full factorial cross product minus the excluded cells, in lexicographic
// order over the factor tuple.
ConfigGrid enumerate_grid(GridKind which);

// Multivariate skew-t covariates per treatment group; deterministic per
// (cfg, seed). eta = 0 reduces to (skew-)normal symmetry, df = inf to the
// skew-normal, and both together to the plain multivariate normal.
Cohort sample_cohort(const SimConfig& cfg, std::uint64_t seed);

}  // namespace gpsm
