#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gpsm {

// Immutable after construction; safe to share across threads.
struct Cohort {
  std::vector<std::string> unit_ids;       // length n
  Eigen::MatrixXd covariates;              // n x P
  std::vector<int> treatments;             // length n, labels in 1..Z
  std::optional<Eigen::VectorXd> outcomes; // length n when present
  int num_groups = 0;                      // Z
  std::map<std::string, int> label_map;    // original label -> 1..Z

  int n() const { return static_cast<int>(treatments.size()); }
  int p() const { return static_cast<int>(covariates.cols()); }

  std::vector<int> group_sizes() const;
  // Indices of units with treatment w (1-based label).
  std::vector<int> group_indices(int w) const;
  // Keep only the listed rows; treatment labels are preserved (not remapped).
  Cohort subset(const std::vector<int>& rows) const;
};

struct CsvSchema {
  std::string id_column = "id";
  std::string treatment_column = "treatment";
  std::vector<std::string> covariate_columns;  // empty: every x* column
  std::string outcome_column = "y";            // optional in the file
};

Cohort load_cohort(const std::string& path, const CsvSchema& schema = {});
void write_cohort(const Cohort& c, const std::string& path);

// Validates invariants and remaps treatment labels to contiguous 1..Z.
// `raw_labels` may be arbitrary strings; order of the mapping follows the
// sorted original labels.
Cohort make_cohort(std::vector<std::string> ids, Eigen::MatrixXd covariates,
                   const std::vector<std::string>& raw_labels,
                   std::optional<Eigen::VectorXd> outcomes);

struct GroupSummary {
  int group = 0;
  int n = 0;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;  // denominator n_w - 1
};

std::vector<GroupSummary> summarize_cohort(const Cohort& c);
void write_summary(const std::vector<GroupSummary>& rows, const std::string& path);

}  // namespace gpsm
