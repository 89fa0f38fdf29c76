#include "gpsm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gpsm/balance.hpp"
#include "gpsm/rng.hpp"

namespace gpsm {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_levels(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    if (item == "inf" || item == "Inf")
      out.push_back(std::numeric_limits<double>::infinity());
    else
      out.push_back(std::stod(item));
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int pick_reference(const Cohort& c, int reference) {
  if (reference > 0) return reference;
  auto sizes = c.group_sizes();
  int best = 1;
  for (int w = 2; w <= c.num_groups; ++w)
    if (sizes[w - 1] > sizes[best - 1]) best = w;
  return best;
}

std::string format_df(double df) {
  if (!std::isfinite(df)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", df);
  return buf;
}

}  // namespace

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");

  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("manifest line is not key=value: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  RunManifest m;
  if (kv.count("replications")) m.replications = std::stoi(kv["replications"]);
  if (m.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (kv.count("seed")) m.seed = std::stoull(kv["seed"]);
  if (kv.count("clusters")) m.clusters = std::stoi(kv["clusters"]);
  if (kv.count("fuzzy_m")) m.fuzzy_m = std::stod(kv["fuzzy_m"]);
  if (kv.count("epsilon")) m.epsilon = std::stod(kv["epsilon"]);
  if (kv.count("reference")) m.reference = std::stoi(kv["reference"]);
  if (kv.count("threads")) m.threads = std::stoi(kv["threads"]);
  if (kv.count("out")) m.out_dir = kv["out"];

  if (!kv.count("algorithms") || kv["algorithms"] == "all") {
    m.algorithms = all_algorithm_labels();
  } else {
    for (const auto& label : split(kv["algorithms"], ',')) {
      algorithm_from_label(label);  // validates
      m.algorithms.push_back(label);
    }
  }

  if (kv.count("grid")) {
    if (kv["grid"] == "z35")
      m.configs = enumerate_grid(GridKind::Z35).configs;
    else if (kv["grid"] == "z10")
      m.configs = enumerate_grid(GridKind::Z10).configs;
    else
      throw std::runtime_error("grid must be z35 or z10");
    return m;
  }

  // Single-config mode with comma-separated factor levels, crossed.
  auto levels = [&](const std::string& key, double dflt) {
    return kv.count(key) ? parse_levels(kv[key]) : std::vector<double>{dflt};
  };
  for (double z : levels("z", 3))
    for (double n1 : levels("n1", 600))
      for (double gamma : levels("gamma", 1))
        for (double b : levels("b", 0.0))
          for (double lambda : levels("lambda", 0.0))
            for (double s2 : levels("s2", 1.0))
              for (double s3 : levels("s3", 1.0))
                for (double eta : levels("eta", 0.0))
                  for (double df : levels("df", std::numeric_limits<double>::infinity()))
                    for (double p : levels("p", 5))
                      m.configs.push_back({static_cast<int>(z), static_cast<int>(n1),
                                           static_cast<int>(gamma), b, lambda, s2, s3, eta, df,
                                           static_cast<int>(p)});
  return m;
}

SimulationResult run_simulation(const RunManifest& manifest) {
  const int n_configs = static_cast<int>(manifest.configs.size());
  const int n_reps = manifest.replications;
  const int n_jobs = n_configs * n_reps;
  const int rows_per_job = static_cast<int>(manifest.algorithms.size()) + 1;  // + pre-matched

  SimulationResult result;
  result.raw.assign(static_cast<size_t>(n_jobs) * rows_per_job, RawRecord{});

#ifdef _OPENMP
  int threads = manifest.threads > 0 ? manifest.threads : omp_get_max_threads();
#endif

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int job = 0; job < n_jobs; ++job) {
    const int ci = job / n_reps;
    const int rep = job % n_reps;
    const SimConfig& cfg = manifest.configs[ci];
    RawRecord* rows = &result.raw[static_cast<size_t>(job) * rows_per_job];
    for (int a = 0; a < rows_per_job; ++a) {
      rows[a].config = cfg;
      rows[a].replication = rep;
      rows[a].algorithm = a == 0 ? "none" : manifest.algorithms[a - 1];
    }

    std::uint64_t job_seed =
        Rng::derive(manifest.seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(rep));
    Cohort cohort;
    TrimResult trimmed;
    int t = 0;
    int eligible_refs = 0;
    try {
      cohort = sample_cohort(cfg, job_seed);
      trimmed = trim_and_refit(cohort);
      t = pick_reference(cohort, manifest.reference);
      eligible_refs = static_cast<int>(trimmed.eligible.group_indices(t).size());
      if (eligible_refs == 0) throw std::runtime_error("no eligible reference units");
    } catch (const std::exception& e) {
      for (int a = 0; a < rows_per_job; ++a) rows[a].status = e.what();
      continue;
    }

    // Pre-matched cohort of eligible units.
    try {
      MatchedSet pre = prematched_set(trimmed.eligible, t);
      BalanceReport r = balance_report(cohort, trimmed.eligible, pre, t, eligible_refs);
      rows[0].status = "ok";
      rows[0].maxmax2sb = r.maxmax2sb;
      rows[0].meanmax2sb = r.meanmax2sb;
      rows[0].prop_matched = 1.0;
    } catch (const std::exception& e) {
      rows[0].status = e.what();
    }

    MatchOptions mopts;
    mopts.clusters = manifest.clusters;
    mopts.fuzzy_m = manifest.fuzzy_m;
    mopts.epsilon = manifest.epsilon;
    mopts.seed = job_seed;
    for (size_t a = 0; a < manifest.algorithms.size(); ++a) {
      RawRecord& row = rows[a + 1];
      try {
        AlgorithmSpec spec = algorithm_from_label(manifest.algorithms[a]);
        MatchedSet ms = run_algorithm(trimmed.eligible, trimmed.gps, spec, t, mopts);
        if (ms.empty()) {
          row.status = "empty matched set";
          continue;
        }
        BalanceReport r = balance_report(cohort, trimmed.eligible, ms, t, eligible_refs);
        row.status = "ok";
        row.maxmax2sb = r.maxmax2sb;
        row.meanmax2sb = r.meanmax2sb;
        row.prop_matched = r.prop_matched;
      } catch (const std::exception& e) {
        row.status = e.what();
      }
    }
  }

  result.summary = summarize(result.raw);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<RawRecord>& raw) {
  // Group by (z, p, b, algorithm); medianize over everything else.
  std::map<std::tuple<int, int, double, std::string>, std::vector<const RawRecord*>> groups;
  for (const auto& r : raw)
    groups[{r.config.z, r.config.p, r.config.b, r.algorithm}].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [key, records] : groups) {
    SummaryRow row;
    std::tie(row.z, row.p, row.b, row.algorithm) = key;
    std::vector<double> mm, mean_m, pm;
    for (const auto* r : records) {
      if (r->status != "ok") continue;
      mm.push_back(r->maxmax2sb);
      mean_m.push_back(r->meanmax2sb);
      pm.push_back(r->prop_matched);
    }
    row.n_ok = static_cast<int>(mm.size());
    row.median_maxmax2sb = median(mm);
    row.median_meanmax2sb = median(mean_m);
    row.median_prop_matched = median(pm);
    out.push_back(std::move(row));
  }
  return out;
}

void write_raw(const std::vector<RawRecord>& raw, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << "z,n1,gamma,b,lambda,s2,s3,eta,df,p,algorithm,replication,status,maxmax2sb,meanmax2sb,"
         "prop_matched\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : raw) {
    const auto& c = r.config;
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << c.z << "," << c.n1 << "," << c.gamma << "," << c.b << "," << c.lambda << ","
        << c.sigma2_sq << "," << c.sigma3_sq << "," << c.eta << "," << format_df(c.df) << ","
        << c.p << "," << r.algorithm << "," << r.replication << "," << status << ","
        << num(r.maxmax2sb) << "," << num(r.meanmax2sb) << "," << num(r.prop_matched) << "\n";
  }
}

void write_summary_table(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << "z,p,b,algorithm,median_maxmax2sb,median_meanmax2sb,median_prop_matched,n_ok\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const auto& r : rows)
    out << r.z << "," << r.p << "," << r.b << "," << r.algorithm << "," << r.median_maxmax2sb
        << "," << r.median_meanmax2sb << "," << r.median_prop_matched << "," << r.n_ok << "\n";
}

}  // namespace gpsm
