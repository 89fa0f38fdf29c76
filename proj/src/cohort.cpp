#include "gpsm/cohort.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gpsm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, int row, const std::string& col) {
  std::string t = trim(s);
  if (t.empty())
    throw std::runtime_error("missing covariate value at row " + std::to_string(row) +
                             " column " + col);
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != t.size())
    throw std::runtime_error("non-numeric value '" + t + "' at row " + std::to_string(row) +
                             " column " + col);
  return v;
}

}  // namespace

std::vector<int> Cohort::group_sizes() const {
  std::vector<int> sizes(num_groups, 0);
  for (int w : treatments) sizes[w - 1]++;
  return sizes;
}

std::vector<int> Cohort::group_indices(int w) const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (treatments[i] == w) out.push_back(i);
  return out;
}

Cohort Cohort::subset(const std::vector<int>& rows) const {
  Cohort out;
  out.num_groups = num_groups;
  out.label_map = label_map;
  out.covariates.resize(static_cast<int>(rows.size()), covariates.cols());
  if (outcomes) out.outcomes = Eigen::VectorXd(rows.size());
  out.unit_ids.reserve(rows.size());
  out.treatments.reserve(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    int i = rows[k];
    out.unit_ids.push_back(unit_ids[i]);
    out.treatments.push_back(treatments[i]);
    out.covariates.row(static_cast<int>(k)) = covariates.row(i);
    if (outcomes) (*out.outcomes)(static_cast<int>(k)) = (*outcomes)(i);
  }
  return out;
}

Cohort make_cohort(std::vector<std::string> ids, Eigen::MatrixXd covariates,
                   const std::vector<std::string>& raw_labels,
                   std::optional<Eigen::VectorXd> outcomes) {
  const int n = static_cast<int>(ids.size());
  if (n != covariates.rows() || n != static_cast<int>(raw_labels.size()))
    throw std::runtime_error("cohort fields have inconsistent lengths");
  if (outcomes && outcomes->size() != n)
    throw std::runtime_error("outcome vector length mismatch");

  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw std::runtime_error("duplicate unit id '" + id + "'");

  // Labels sort numerically when they all parse as numbers, otherwise
  // lexicographically; either way the remap to 1..Z preserves sorted order.
  std::set<std::string> labels(raw_labels.begin(), raw_labels.end());
  std::vector<std::string> ordered(labels.begin(), labels.end());
  bool all_numeric = true;
  for (const auto& l : ordered) {
    size_t pos = 0;
    try {
      (void)std::stod(l, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != l.size()) all_numeric = false;
  }
  if (all_numeric)
    std::sort(ordered.begin(), ordered.end(),
              [](const std::string& a, const std::string& b) { return std::stod(a) < std::stod(b); });

  Cohort c;
  c.unit_ids = std::move(ids);
  c.covariates = std::move(covariates);
  c.outcomes = std::move(outcomes);
  c.num_groups = static_cast<int>(ordered.size());
  for (int w = 0; w < c.num_groups; ++w) c.label_map[ordered[w]] = w + 1;
  c.treatments.reserve(n);
  for (const auto& l : raw_labels) c.treatments.push_back(c.label_map.at(l));

  auto sizes = c.group_sizes();
  for (int w = 0; w < c.num_groups; ++w)
    if (sizes[w] < 2)
      throw std::runtime_error("treatment group '" + ordered[w] + "' has fewer than 2 units");
  return c;
}

Cohort load_cohort(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");

  std::string header_line;
  if (!std::getline(in, header_line)) throw std::runtime_error("empty file '" + path + "'");
  auto header = split_csv_line(header_line);
  for (auto& h : header) h = trim(h);

  auto find_col = [&](const std::string& name) {
    for (size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  };

  int id_col = find_col(schema.id_column);
  int treat_col = find_col(schema.treatment_column);
  if (treat_col < 0)
    throw std::runtime_error("treatment column '" + schema.treatment_column + "' not found");
  int outcome_col = find_col(schema.outcome_column);

  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  if (!schema.covariate_columns.empty()) {
    for (const auto& name : schema.covariate_columns) {
      int j = find_col(name);
      if (j < 0) throw std::runtime_error("covariate column '" + name + "' not found");
      cov_cols.push_back(j);
      cov_names.push_back(name);
    }
  } else {
    for (size_t j = 0; j < header.size(); ++j) {
      int jj = static_cast<int>(j);
      if (jj == id_col || jj == treat_col || jj == outcome_col) continue;
      cov_cols.push_back(jj);
      cov_names.push_back(header[j]);
    }
  }
  if (cov_cols.empty()) throw std::runtime_error("no covariate columns in '" + path + "'");

  std::vector<std::string> ids, labels;
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::string line;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < header.size())
      throw std::runtime_error("row " + std::to_string(row) + " has too few fields");
    ids.push_back(id_col >= 0 ? trim(fields[id_col]) : std::to_string(row - 1));
    std::string lab = trim(fields[treat_col]);
    if (lab.empty()) throw std::runtime_error("missing treatment at row " + std::to_string(row));
    labels.push_back(lab);
    std::vector<double> x;
    for (size_t k = 0; k < cov_cols.size(); ++k)
      x.push_back(parse_number(fields[cov_cols[k]], row, cov_names[k]));
    rows.push_back(std::move(x));
    if (outcome_col >= 0) ys.push_back(parse_number(fields[outcome_col], row, schema.outcome_column));
  }
  if (rows.empty()) throw std::runtime_error("no data rows in '" + path + "'");

  Eigen::MatrixXd X(rows.size(), cov_cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cov_cols.size(); ++j) X(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];

  std::optional<Eigen::VectorXd> outcomes;
  if (outcome_col >= 0) {
    Eigen::VectorXd y(ys.size());
    for (size_t i = 0; i < ys.size(); ++i) y(static_cast<int>(i)) = ys[i];
    outcomes = std::move(y);
  }
  return make_cohort(std::move(ids), std::move(X), labels, std::move(outcomes));
}

void write_cohort(const Cohort& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << "id,treatment";
  for (int j = 0; j < c.p(); ++j) out << ",x" << (j + 1);
  if (c.outcomes) out << ",y";
  out << "\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (int i = 0; i < c.n(); ++i) {
    out << c.unit_ids[i] << "," << c.treatments[i];
    for (int j = 0; j < c.p(); ++j) out << "," << num(c.covariates(i, j));
    if (c.outcomes) out << "," << num((*c.outcomes)(i));
    out << "\n";
  }
}

std::vector<GroupSummary> summarize_cohort(const Cohort& c) {
  std::vector<GroupSummary> out;
  for (int w = 1; w <= c.num_groups; ++w) {
    auto idx = c.group_indices(w);
    GroupSummary s;
    s.group = w;
    s.n = static_cast<int>(idx.size());
    s.means = Eigen::VectorXd::Zero(c.p());
    s.sds = Eigen::VectorXd::Zero(c.p());
    for (int i : idx) s.means += c.covariates.row(i).transpose();
    s.means /= s.n;
    for (int i : idx) {
      Eigen::VectorXd d = c.covariates.row(i).transpose() - s.means;
      s.sds += d.cwiseProduct(d);
    }
    s.sds = (s.sds / (s.n - 1)).cwiseSqrt();
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary(const std::vector<GroupSummary>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  if (rows.empty()) return;
  out << "group,n";
  for (int j = 0; j < rows[0].means.size(); ++j) out << ",x" << (j + 1) << "_mean,x" << (j + 1) << "_sd";
  out << "\n";
  for (const auto& r : rows) {
    out << r.group << "," << r.n;
    for (int j = 0; j < r.means.size(); ++j) out << "," << r.means(j) << "," << r.sds(j);
    out << "\n";
  }
}

}  // namespace gpsm
