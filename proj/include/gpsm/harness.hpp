#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpsm/matching.hpp"
#include "gpsm/simgen.hpp"

namespace gpsm {

struct RunManifest {
  std::vector<SimConfig> configs;
  std::vector<std::string> algorithms;  // subset of the 12 labels
  int replications = 20;
  std::uint64_t seed = 1;
  int clusters = 5;
  double fuzzy_m = 2.0;
  double epsilon = 0.5;
  int reference = 1;  // 0 = largest treatment group
  int threads = 0;    // 0 = OpenMP default
  std::string out_dir = ".";
};

// Flat key=value file; single-config factor keys accept comma-separated
// level lists which are crossed, or grid=z35|z10 for the full design.
RunManifest load_manifest(const std::string& path);

struct RawRecord {
  SimConfig config;
  std::string algorithm;  // "none" is the pre-matched cohort
  int replication = 0;
  std::string status;     // "ok" or an error description
  double maxmax2sb = 0.0;
  double meanmax2sb = 0.0;
  double prop_matched = 0.0;
};

struct SummaryRow {
  int z = 0;
  int p = 0;
  double b = 0.0;
  std::string algorithm;
  double median_maxmax2sb = 0.0;
  double median_meanmax2sb = 0.0;
  double median_prop_matched = 0.0;
  int n_ok = 0;
};

struct SimulationResult {
  std::vector<RawRecord> raw;
  std::vector<SummaryRow> summary;
};

// (config x replication) jobs, each a pure function of its derived seed;
// output is identical regardless of thread count.
SimulationResult run_simulation(const RunManifest& manifest);

// Medians recomputed by grouping the raw records over (z, p, b, algorithm).
std::vector<SummaryRow> summarize(const std::vector<RawRecord>& raw);

void write_raw(const std::vector<RawRecord>& raw, const std::string& path);
void write_summary_table(const std::vector<SummaryRow>& rows, const std::string& path);

}  // namespace gpsm
