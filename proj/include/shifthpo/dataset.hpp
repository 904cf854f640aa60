// Copyright 2026 The shift-hpo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHIFTHPO_DATASET_HPP
#define SHIFTHPO_DATASET_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "shifthpo/errors.hpp"
#include "shifthpo/numeric.hpp"

namespace shifthpo {

/// Feature-only samples; all the pipeline ever sees of the target task.
struct unlabeled_dataset {
  Eigen::MatrixXd features;  // n_rows x d

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 1) throw input_error("unlabeled_dataset: no rows");
    if (!features.allFinite()) {
      throw input_error("unlabeled_dataset: non-finite feature value");
    }
  }
};

/// Labeled samples from one source task.
struct labeled_dataset {
  Eigen::MatrixXd features;  // n_rows x d
  Eigen::VectorXd labels;    // n_rows
  int task_id = 0;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 1) throw input_error("labeled_dataset: no rows");
    if (labels.size() != features.rows()) {
      throw input_error("labeled_dataset: label count != row count");
    }
    if (!features.allFinite() || !labels.allFinite()) {
      throw input_error("labeled_dataset: non-finite value");
    }
  }
};

/// Three-fold partition of one source task: density-ratio fold, train fold,
/// validation fold. The folds are disjoint and jointly exhaust the parent.
struct source_split {
  labeled_dataset density;
  labeled_dataset train;
  labeled_dataset val;
};

/// Settings for the synthetic 1-d regression tasks. Each task draws a mean
/// mu ~ U(-c, c), then x ~ N(mu, 1) and y ~ N(slope*x + intercept, noise_sd^2).
struct toy_config {
  int k = 2;                      // number of source tasks
  int n = 1000;                   // samples per task
  std::vector<double> c_source;   // per-source prior half-width c_j
  double c_target = 1.0;
  double slope = 0.7;
  double intercept = 0.3;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw config_error("toy_config.k: must be >= 1");
    if (n < 2) throw config_error("toy_config.n: must be >= 2");
    if (static_cast<int>(c_source.size()) != k) {
      throw config_error("toy_config.c_source: length must equal k");
    }
    for (double c : c_source) {
      if (!(c > 0.0)) throw config_error("toy_config.c_source: entries must be > 0");
    }
    if (!(c_target > 0.0)) throw config_error("toy_config.c_target: must be > 0");
    if (!(noise_sd > 0.0)) throw config_error("toy_config.noise_sd: must be > 0");
  }
};

/// Holds the target task's generated labels behind an explicit accessor so
/// that pipeline code cannot consume them by accident. Only the oracle
/// estimator and final evaluation are allowed to unlock this.
class oracle_access {
 public:
  oracle_access() = default;
  explicit oracle_access(Eigen::VectorXd labels) : labels_(std::move(labels)) {}

  /// Deliberately loud name; call sites are auditable by grep.
  const Eigen::VectorXd& reveal_labels_for_evaluation_only() const { return labels_; }

  Eigen::Index size() const { return labels_.size(); }

 private:
  Eigen::VectorXd labels_;
};

struct toy_problem {
  unlabeled_dataset target;
  oracle_access target_oracle;  // quarantined labels of the target rows
  double target_mu = 0.0;       // realized task mean of the target
  std::vector<double> source_mu;
  std::vector<labeled_dataset> sources;
};

/// Generates one unlabeled target task and k labeled source tasks from the
/// shared conditional y | x. Deterministic given cfg.seed.
inline toy_problem generate_toy(const toy_config& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  auto draw_task = [&](double c) {
    std::uniform_real_distribution<double> prior(-c, c);
    const double mu = prior(rng);
    Eigen::MatrixXd x(cfg.n, 1);
    Eigen::VectorXd y(cfg.n);
    for (int i = 0; i < cfg.n; ++i) {
      x(i, 0) = mu + unit_normal(rng);
      y(i) = cfg.slope * x(i, 0) + cfg.intercept + cfg.noise_sd * unit_normal(rng);
    }
    return std::make_pair(mu, std::make_pair(std::move(x), std::move(y)));
  };

  toy_problem out;
  auto [mu_t, target_xy] = draw_task(cfg.c_target);
  out.target_mu = mu_t;
  out.target.features = std::move(target_xy.first);
  out.target_oracle = oracle_access(std::move(target_xy.second));

  out.sources.reserve(cfg.k);
  for (int j = 0; j < cfg.k; ++j) {
    auto [mu_j, xy] = draw_task(cfg.c_source[static_cast<std::size_t>(j)]);
    out.source_mu.push_back(mu_j);
    labeled_dataset ds;
    ds.features = std::move(xy.first);
    ds.labels = std::move(xy.second);
    ds.task_id = j;
    out.sources.push_back(std::move(ds));
  }
  return out;
}

namespace detail {
inline labeled_dataset take_rows(const labeled_dataset& ds,
                                 const std::vector<Eigen::Index>& idx) {
  labeled_dataset out;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), ds.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(idx[i]);
    out.labels(static_cast<Eigen::Index>(i)) = ds.labels(idx[i]);
  }
  out.task_id = ds.task_id;
  return out;
}
}  // namespace detail

/// Partitions a source task into density / train / val folds of sizes
/// floor(n * density_frac), floor(rest * train_frac_of_rest), remainder.
/// Rows are assigned by a seeded shuffle, without replacement.
inline source_split split_source(const labeled_dataset& ds, double density_frac,
                                 double train_frac_of_rest, std::uint64_t seed) {
  ds.validate();
  if (!(density_frac > 0.0 && density_frac < 1.0)) {
    throw input_error("split_source: density_frac must be in (0, 1)");
  }
  if (!(train_frac_of_rest > 0.0 && train_frac_of_rest < 1.0)) {
    throw input_error("split_source: train_frac_of_rest must be in (0, 1)");
  }

  const Eigen::Index n = ds.rows();
  const auto n_density = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(n) * density_frac));
  const Eigen::Index rest = n - n_density;
  const auto n_train = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(rest) * train_frac_of_rest));
  const Eigen::Index n_val = rest - n_train;
  if (n_density < 1 || n_train < 1 || n_val < 1) {
    std::ostringstream oss;
    oss << "split_source: empty fold for n=" << n << " (density " << n_density
        << ", train " << n_train << ", val " << n_val << ")";
    throw split_error(oss.str());
  }

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const std::vector<Eigen::Index> idx_density(perm.begin(), perm.begin() + n_density);
  const std::vector<Eigen::Index> idx_train(perm.begin() + n_density,
                                            perm.begin() + n_density + n_train);
  const std::vector<Eigen::Index> idx_val(perm.begin() + n_density + n_train, perm.end());

  source_split out;
  out.density = detail::take_rows(ds, idx_density);
  out.train = detail::take_rows(ds, idx_train);
  out.val = detail::take_rows(ds, idx_val);
  return out;
}

using csv_dataset = std::variant<unlabeled_dataset, labeled_dataset>;

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

/// Reads a headered, comma-separated numeric file. With a label column the
/// result is labeled (features = remaining columns in header order);
/// otherwise every column is a feature. Any non-numeric or non-finite cell
/// aborts ingestion with its row/column location.
inline csv_dataset load_csv(const std::filesystem::path& path,
                            const std::optional<std::string>& label_column = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ingest_error("load_csv: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ingest_error("load_csv: empty file " + path.string());
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  if (header.empty()) throw ingest_error("load_csv: empty header in " + path.string());

  std::ptrdiff_t label_idx = -1;
  if (label_column) {
    const auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end()) {
      throw ingest_error("load_csv: label column '" + *label_column + "' not in header of " +
                         path.string());
    }
    label_idx = it - header.begin();
  }

  const std::size_t n_cols = header.size();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != n_cols) {
      std::ostringstream oss;
      oss << "load_csv: row " << line_no << " has " << cells.size() << " cells, expected "
          << n_cols << " (" << path.string() << ")";
      throw ingest_error(oss.str());
    }
    std::vector<double> row(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::string cell = detail::trim(cells[c]);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        std::ostringstream oss;
        oss << "load_csv: non-numeric or non-finite cell '" << cell << "' at row " << line_no
            << ", column '" << header[c] << "' (" << path.string() << ")";
        throw ingest_error(oss.str());
      }
      row[c] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ingest_error("load_csv: no data rows in " + path.string());

  const auto n = static_cast<Eigen::Index>(rows.size());
  if (label_idx >= 0) {
    labeled_dataset ds;
    ds.features.resize(n, static_cast<Eigen::Index>(n_cols - 1));
    ds.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index fc = 0;
      for (std::size_t c = 0; c < n_cols; ++c) {
        if (static_cast<std::ptrdiff_t>(c) == label_idx) {
          ds.labels(i) = rows[static_cast<std::size_t>(i)][c];
        } else {
          ds.features(i, fc++) = rows[static_cast<std::size_t>(i)][c];
        }
      }
    }
    ds.validate();
    return ds;
  }

  unlabeled_dataset ds;
  ds.features.resize(n, static_cast<Eigen::Index>(n_cols));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      ds.features(i, static_cast<Eigen::Index>(c)) = rows[static_cast<std::size_t>(i)][c];
    }
  }
  ds.validate();
  return ds;
}

}  // namespace shifthpo

#endif  // SHIFTHPO_DATASET_HPP
