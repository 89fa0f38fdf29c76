// Compares the OpenMP-parallel kernels against their serial reference
// implementations: wall time plus an exact-equality check.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gpsm/distance.hpp"
#include "gpsm/harness.hpp"
#include "gpsm/rng.hpp"

namespace {

double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void bench_distances(int n_ref, int n_cand, int dims) {
  gpsm::Rng rng(42);
  Eigen::MatrixXd ref(n_ref, dims), cand(n_cand, dims);
  for (int i = 0; i < n_ref; ++i)
    for (int j = 0; j < dims; ++j) ref(i, j) = rng.normal();
  for (int i = 0; i < n_cand; ++i)
    for (int j = 0; j < dims; ++j) cand(i, j) = rng.normal();

  gpsm::DistanceSpec spec;
  spec.metric = gpsm::Metric::Mahalanobis;
  for (int j = 0; j < dims; ++j) spec.columns.push_back(j);

  auto t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXd serial = gpsm::pairwise_distances_serial(ref, cand, spec);
  double t_serial = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXd parallel = gpsm::pairwise_distances(ref, cand, spec);
  double t_parallel = elapsed_ms(t0);

  bool identical = (serial - parallel).cwiseAbs().maxCoeff() == 0.0;
  std::printf("pairwise_distances %dx%dx%d: serial %.1f ms, parallel %.1f ms, speedup %.2fx, %s\n",
              n_ref, n_cand, dims, t_serial, t_parallel, t_serial / t_parallel,
              identical ? "bit-identical" : "MISMATCH");
}

void bench_simulation() {
  gpsm::RunManifest manifest;
  manifest.configs = {{3, 300, 1, 0.5, 0.0, 1.0, 1.0, 0.0,
                       std::numeric_limits<double>::infinity(), 5}};
  manifest.algorithms = {"VM", "GPSnc"};
  manifest.replications = 8;

  manifest.threads = 1;
  auto t0 = std::chrono::steady_clock::now();
  auto serial = gpsm::run_simulation(manifest);
  double t_serial = elapsed_ms(t0);

  manifest.threads = 0;
  t0 = std::chrono::steady_clock::now();
  auto parallel = gpsm::run_simulation(manifest);
  double t_parallel = elapsed_ms(t0);

  bool identical = serial.raw.size() == parallel.raw.size();
  for (size_t i = 0; identical && i < serial.raw.size(); ++i)
    identical = serial.raw[i].maxmax2sb == parallel.raw[i].maxmax2sb &&
                serial.raw[i].status == parallel.raw[i].status;
  std::printf("run_simulation (8 reps): 1 thread %.1f ms, all threads %.1f ms, speedup %.2fx, %s\n",
              t_serial, t_parallel, t_serial / t_parallel,
              identical ? "identical output" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled\n");
#endif
  bench_distances(2000, 3000, 10);
  bench_distances(500, 800, 30);
  bench_simulation();
  return 0;
}
