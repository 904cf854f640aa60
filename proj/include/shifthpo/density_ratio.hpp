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

#ifndef SHIFTHPO_DENSITY_RATIO_HPP
#define SHIFTHPO_DENSITY_RATIO_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "shifthpo/dataset.hpp"
#include "shifthpo/errors.hpp"
#include "shifthpo/numeric.hpp"

namespace shifthpo {

/// Least-squares importance fitting settings. Empty grids are resolved at
/// fit time: bandwidths from the median pairwise distance of the target
/// sample times {0.25, 0.5, 1, 2, 4}, ridges {1e-3, 1e-2, 1e-1, 1}.
struct ulsif_config {
  int num_centers = 100;  // capped at the target sample count
  std::vector<double> bandwidth_grid;
  std::vector<double> ridge_grid;
  double cap = 50.0;
  int cv_folds = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_centers < 1) throw config_error("ulsif_config.num_centers: must be >= 1");
    if (!(cap > 0.0)) throw config_error("ulsif_config.cap: must be > 0");
    if (cv_folds < 2) throw config_error("ulsif_config.cv_folds: must be >= 2");
    for (double b : bandwidth_grid) {
      if (!(b > 0.0)) throw config_error("ulsif_config.bandwidth_grid: entries must be > 0");
    }
    for (double r : ridge_grid) {
      if (!(r > 0.0)) throw config_error("ulsif_config.ridge_grid: entries must be > 0");
    }
  }
};

/// Fitted importance model w(x) ~ sum_l alpha_l exp(-|x - c_l|^2 / (2 s^2)),
/// evaluated with output clipped into [0, cap].
struct density_ratio_model {
  Eigen::MatrixXd centers;  // b x d
  double bandwidth = 1.0;
  double ridge = 0.0;
  Eigen::VectorXd alpha;    // b, nonnegative after fitting
  double cap = 50.0;

  Eigen::Index dim() const { return centers.cols(); }

  double evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != centers.cols()) throw input_error("density_ratio_model: dimension mismatch");
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    double raw = 0.0;
    for (Eigen::Index l = 0; l < centers.rows(); ++l) {
      raw += alpha(l) * std::exp(-(x - centers.row(l).transpose()).squaredNorm() * inv);
    }
    return std::min(cap, std::max(0.0, raw));
  }

  Eigen::VectorXd evaluate_rows(const Eigen::MatrixXd& xs) const {
    Eigen::VectorXd out(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = evaluate(xs.row(i).transpose());
    return out;
  }

  /// Fraction of rows whose raw basis expansion fell outside [0, cap];
  /// a diagnostic for how often the clip actually binds.
  double clipped_fraction(const Eigen::MatrixXd& xs) const {
    if (xs.rows() == 0) return 0.0;
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    Eigen::Index clipped = 0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      double raw = 0.0;
      for (Eigen::Index l = 0; l < centers.rows(); ++l) {
        raw += alpha(l) *
               std::exp(-(xs.row(i) - centers.row(l)).squaredNorm() * inv);
      }
      if (raw < 0.0 || raw > cap) ++clipped;
    }
    return static_cast<double>(clipped) / static_cast<double>(xs.rows());
  }
};

inline double evaluate_ratio(const density_ratio_model& model, const Eigen::VectorXd& x) {
  return model.evaluate(x);
}

namespace detail {

inline Eigen::MatrixXd gaussian_design(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& centers,
                                       double bandwidth) {
  Eigen::MatrixXd phi(xs.rows(), centers.rows());
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    for (Eigen::Index l = 0; l < centers.rows(); ++l) {
      phi(i, l) = std::exp(-(xs.row(i) - centers.row(l)).squaredNorm() * inv);
    }
  }
  return phi;
}

inline std::vector<Eigen::Index> sample_rows(Eigen::Index n, Eigen::Index count,
                                             std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(std::min(n, count)));
  return idx;
}

inline Eigen::MatrixXd rows_at(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

/// Median pairwise distance over a seeded subsample of at most 500 rows.
inline double median_heuristic(const Eigen::MatrixXd& xs, std::uint64_t seed) {
  const auto idx = sample_rows(xs.rows(), 500, seed);
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      dists.push_back((xs.row(idx[i]) - xs.row(idx[j])).norm());
    }
  }
  if (dists.empty()) return 1.0;
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double med = *mid;
  return med > 0.0 ? med : 1.0;
}

/// Solves (H + ridge I) alpha = h and clips negative coefficients to zero.
inline Eigen::VectorXd solve_alpha_system(const Eigen::MatrixXd& hmat_base,
                                          const Eigen::VectorXd& hvec, double ridge) {
  Eigen::MatrixXd hmat = hmat_base;
  hmat.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> solver(hmat);
  if (solver.info() != Eigen::Success) {
    throw fit_error("fit_ulsif: singular kernel system");
  }
  Eigen::VectorXd alpha = solver.solve(hvec);
  if (!alpha.allFinite()) throw fit_error("fit_ulsif: non-finite solution");
  return alpha.cwiseMax(0.0);
}

/// Solves (Phi_S^T Phi_S / n_S + ridge I) alpha = mean(Phi_T) and clips
/// negative coefficients to zero.
inline Eigen::VectorXd solve_alpha(const Eigen::MatrixXd& phi_target,
                                   const Eigen::MatrixXd& phi_source, double ridge) {
  const Eigen::MatrixXd hmat = phi_source.transpose() * phi_source /
                               static_cast<double>(phi_source.rows());
  return solve_alpha_system(hmat, phi_target.colwise().mean(), ridge);
}

/// Empirical squared-error objective: 0.5 E_S[s^2] - E_T[s].
inline double ulsif_objective(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& phi_target,
                              const Eigen::MatrixXd& phi_source) {
  const Eigen::VectorXd s_src = phi_source * alpha;
  const Eigen::VectorXd s_tgt = phi_target * alpha;
  return 0.5 * s_src.squaredNorm() / static_cast<double>(s_src.size()) -
         s_tgt.mean();
}

struct resolved_grids {
  std::vector<double> bandwidths;
  std::vector<double> ridges;
};

inline resolved_grids resolve_grids(const Eigen::MatrixXd& target_features,
                                    const ulsif_config& cfg) {
  resolved_grids out;
  if (cfg.bandwidth_grid.empty()) {
    const double med = median_heuristic(target_features, derive_seed(cfg.seed, 0x6d6564));
    for (double m : {0.25, 0.5, 1.0, 2.0, 4.0}) out.bandwidths.push_back(med * m);
  } else {
    out.bandwidths = cfg.bandwidth_grid;
  }
  out.ridges = cfg.ridge_grid.empty() ? std::vector<double>{1e-3, 1e-2, 1e-1, 1.0}
                                      : cfg.ridge_grid;
  std::sort(out.bandwidths.begin(), out.bandwidths.end());
  std::sort(out.ridges.begin(), out.ridges.end());
  return out;
}

}  // namespace detail

/// Result of grid model selection, with the full cross-validated objective
/// table for inspection.
struct ulsif_selection {
  double bandwidth = 0.0;
  double ridge = 0.0;
  std::vector<double> bandwidth_grid;
  std::vector<double> ridge_grid;
  Eigen::MatrixXd cv_objective;  // bandwidth x ridge
};

/// Picks (bandwidth, ridge) minimizing the K-fold cross-validated value of
/// the squared-error objective; exact ties resolve toward the larger
/// bandwidth, then the larger ridge.
inline ulsif_selection select_hyperparams(const unlabeled_dataset& target,
                                          const Eigen::MatrixXd& source_features,
                                          const ulsif_config& cfg) {
  cfg.validate();
  target.validate();
  if (source_features.rows() < 1) throw input_error("select_hyperparams: empty source");
  if (source_features.cols() != target.dim()) {
    throw input_error("select_hyperparams: dimension mismatch");
  }

  const auto grids = detail::resolve_grids(target.features, cfg);
  const Eigen::Index n_t = target.rows();
  const Eigen::Index n_s = source_features.rows();
  const Eigen::Index b = std::min<Eigen::Index>(cfg.num_centers, n_t);
  const Eigen::MatrixXd centers = detail::rows_at(
      target.features, detail::sample_rows(n_t, b, derive_seed(cfg.seed, 0x63747273)));

  const int folds = std::min<int>(cfg.cv_folds, static_cast<int>(std::min(n_t, n_s)));
  const auto perm_t = detail::sample_rows(n_t, n_t, derive_seed(cfg.seed, 0x6376740aULL));
  const auto perm_s = detail::sample_rows(n_s, n_s, derive_seed(cfg.seed, 0x6376730aULL));

  // Round-robin folds over the shuffled row orders; fold lists do not depend
  // on the grid point, so build them once.
  std::vector<std::vector<Eigen::Index>> tr_t(folds), te_t(folds), tr_s(folds), te_s(folds);
  for (Eigen::Index i = 0; i < n_t; ++i) {
    const int f = static_cast<int>(i % folds);
    for (int g = 0; g < folds; ++g) {
      (g == f ? te_t : tr_t)[static_cast<std::size_t>(g)].push_back(
          perm_t[static_cast<std::size_t>(i)]);
    }
  }
  for (Eigen::Index i = 0; i < n_s; ++i) {
    const int f = static_cast<int>(i % folds);
    for (int g = 0; g < folds; ++g) {
      (g == f ? te_s : tr_s)[static_cast<std::size_t>(g)].push_back(
          perm_s[static_cast<std::size_t>(i)]);
    }
  }

  ulsif_selection sel;
  sel.bandwidth_grid = grids.bandwidths;
  sel.ridge_grid = grids.ridges;
  sel.cv_objective.resize(static_cast<Eigen::Index>(grids.bandwidths.size()),
                          static_cast<Eigen::Index>(grids.ridges.size()));

  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t bi = 0; bi < grids.bandwidths.size(); ++bi) {
    const double bandwidth = grids.bandwidths[bi];
    const Eigen::MatrixXd phi_t = detail::gaussian_design(target.features, centers, bandwidth);
    const Eigen::MatrixXd phi_s = detail::gaussian_design(source_features, centers, bandwidth);

    // Per-fold Gram pieces, shared across the ridge grid.
    std::vector<Eigen::MatrixXd> h_tr(folds), h_te(folds);
    std::vector<Eigen::VectorXd> hvec_tr(folds), hvec_te(folds);
    for (int f = 0; f < folds; ++f) {
      const Eigen::MatrixXd phi_s_tr = detail::rows_at(phi_s, tr_s[static_cast<std::size_t>(f)]);
      const Eigen::MatrixXd phi_s_te = detail::rows_at(phi_s, te_s[static_cast<std::size_t>(f)]);
      h_tr[static_cast<std::size_t>(f)] =
          phi_s_tr.transpose() * phi_s_tr / static_cast<double>(phi_s_tr.rows());
      h_te[static_cast<std::size_t>(f)] =
          phi_s_te.transpose() * phi_s_te / static_cast<double>(phi_s_te.rows());
      hvec_tr[static_cast<std::size_t>(f)] =
          detail::rows_at(phi_t, tr_t[static_cast<std::size_t>(f)]).colwise().mean();
      hvec_te[static_cast<std::size_t>(f)] =
          detail::rows_at(phi_t, te_t[static_cast<std::size_t>(f)]).colwise().mean();
    }

    for (std::size_t ri = 0; ri < grids.ridges.size(); ++ri) {
      const double ridge = grids.ridges[ri];
      double cv = 0.0;
      bool ok = true;
      for (int f = 0; f < folds && ok; ++f) {
        try {
          const Eigen::VectorXd alpha = detail::solve_alpha_system(
              h_tr[static_cast<std::size_t>(f)], hvec_tr[static_cast<std::size_t>(f)], ridge);
          cv += 0.5 * alpha.dot(h_te[static_cast<std::size_t>(f)] * alpha) -
                hvec_te[static_cast<std::size_t>(f)].dot(alpha);
        } catch (const fit_error&) {
          ok = false;
        }
      }
      const double value = ok ? cv / static_cast<double>(folds)
                              : std::numeric_limits<double>::infinity();
      sel.cv_objective(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(ri)) = value;
      if (ok && (!any || value <= best)) {
        best = value;
        sel.bandwidth = bandwidth;
        sel.ridge = ridge;
        any = true;
      }
    }
  }
  if (!any) throw fit_error("select_hyperparams: every grid fit failed");
  return sel;
}

/// Fits the density ratio w(x) = p_target(x) / p_source(x) from unlabeled
/// target samples and the source density fold. Centers are subsampled from
/// the target; (bandwidth, ridge) come from cross-validated grid selection.
inline density_ratio_model fit_ulsif(const unlabeled_dataset& target,
                                     const Eigen::MatrixXd& source_features,
                                     const ulsif_config& cfg) {
  const ulsif_selection sel = select_hyperparams(target, source_features, cfg);

  const Eigen::Index n_t = target.rows();
  const Eigen::Index b = std::min<Eigen::Index>(cfg.num_centers, n_t);
  density_ratio_model model;
  model.centers = detail::rows_at(
      target.features, detail::sample_rows(n_t, b, derive_seed(cfg.seed, 0x63747273)));
  model.bandwidth = sel.bandwidth;
  model.ridge = sel.ridge;
  model.cap = cfg.cap;
  model.alpha = detail::solve_alpha(
      detail::gaussian_design(target.features, model.centers, model.bandwidth),
      detail::gaussian_design(source_features, model.centers, model.bandwidth), model.ridge);
  return model;
}

}  // namespace shifthpo

#endif  // SHIFTHPO_DENSITY_RATIO_HPP
