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

#ifndef SHIFTHPO_GP_HPP
#define SHIFTHPO_GP_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "shifthpo/errors.hpp"

namespace shifthpo {

/// Matern 5/2 kernel: k = s * (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r)
/// with r the lengthscale-normalized Euclidean distance.
inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& lengthscales, double signal_var) {
  if (a.size() != b.size() || a.size() != lengthscales.size()) {
    throw input_error("matern52: dimension mismatch");
  }
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!(lengthscales(i) > 0.0)) throw input_error("matern52: lengthscale must be > 0");
    const double d = (a(i) - b(i)) / lengthscales(i);
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  const double sr = std::sqrt(5.0) * r;
  return signal_var * (1.0 + sr + sr * sr / 3.0) * std::exp(-sr);
}

struct gp_kernel {
  Eigen::VectorXd lengthscales;
  double signal_var = 1.0;
  double noise_var = 1e-4;
};

/// Kernel hyperparameter selection settings. Lengthscales are isotropic and
/// chosen together with the signal variance by grid-searched log marginal
/// likelihood; the noise level is fixed, escalating only on factorization
/// failure.
struct gp_config {
  std::vector<double> lengthscale_grid{0.1, 0.3, 1.0};
  std::vector<double> signal_grid{0.5, 1.0, 2.0};
  double noise_var = 1e-4;
  double max_noise_var = 1e-1;
};

/// Fitted GP posterior over unit-cube inputs with standardized targets.
struct gp_surrogate {
  Eigen::MatrixXd train_points;   // n x d, unit-cube coordinates
  Eigen::VectorXd train_targets;  // standardized scores
  gp_kernel kernel;
  Eigen::MatrixXd chol_lower;     // L with L L^T = K + noise I
  Eigen::VectorXd weights;        // (K + noise I)^-1 y_standardized
  double target_mean = 0.0;
  double target_sd = 1.0;
  double log_marginal = -std::numeric_limits<double>::infinity();
};

namespace detail {

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& pts, const gp_kernel& k) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = k.signal_var;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      K(i, j) = matern52(pts.row(i).transpose(), pts.row(j).transpose(), k.lengthscales,
                         k.signal_var);
      K(j, i) = K(i, j);
    }
  }
  return K;
}

/// Cholesky with the configured noise, escalating x10 up to max on failure.
inline bool factorize(const Eigen::MatrixXd& K, double noise0, double max_noise,
                      Eigen::MatrixXd& lower, double& noise_used) {
  for (double noise = noise0; noise <= max_noise * (1.0 + 1e-12); noise *= 10.0) {
    Eigen::MatrixXd Kn = K;
    Kn.diagonal().array() += noise;
    const Eigen::LLT<Eigen::MatrixXd> llt(Kn);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      noise_used = noise;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Fits a GP to unit-cube points and raw scores. Scores are standardized
/// internally; near-duplicate points (closer than 1e-12) are jittered so the
/// Gram matrix stays positive definite.
inline gp_surrogate gp_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& scores,
                           const gp_config& cfg = {}) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw input_error("gp_fit: need at least one point");
  if (scores.size() != n) throw input_error("gp_fit: score count mismatch");
  if (cfg.lengthscale_grid.empty() || cfg.signal_grid.empty()) {
    throw input_error("gp_fit: empty hyperparameter grid");
  }

  Eigen::MatrixXd pts = points;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if ((pts.row(i) - pts.row(j)).norm() < 1e-12) {
        pts(i, i % pts.cols()) += 1e-9 * static_cast<double>(i + 1);
      }
    }
  }

  const double mean = scores.mean();
  double sd = std::sqrt((scores.array() - mean).square().sum() / static_cast<double>(n));
  if (!(sd > 1e-12)) sd = 1.0;
  const Eigen::VectorXd y = (scores.array() - mean) / sd;

  gp_surrogate best;
  bool found = false;
  for (double ls : cfg.lengthscale_grid) {
    for (double sig : cfg.signal_grid) {
      gp_kernel kern;
      kern.lengthscales = Eigen::VectorXd::Constant(pts.cols(), ls);
      kern.signal_var = sig;
      const Eigen::MatrixXd K = detail::kernel_matrix(pts, kern);
      Eigen::MatrixXd lower;
      double noise_used = cfg.noise_var;
      if (!detail::factorize(K, cfg.noise_var, cfg.max_noise_var, lower, noise_used)) continue;
      kern.noise_var = noise_used;

      const Eigen::VectorXd alpha =
          lower.transpose().triangularView<Eigen::Upper>().solve(
              lower.triangularView<Eigen::Lower>().solve(y));
      const double lml = -0.5 * y.dot(alpha) - lower.diagonal().array().log().sum() -
                         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
      if (!found || lml > best.log_marginal) {
        best.train_points = pts;
        best.train_targets = y;
        best.kernel = kern;
        best.chol_lower = lower;
        best.weights = alpha;
        best.target_mean = mean;
        best.target_sd = sd;
        best.log_marginal = lml;
        found = true;
      }
    }
  }
  if (!found) {
    throw numeric_error("gp_fit: Cholesky failed for every kernel even at max jitter");
  }
  return best;
}

/// Posterior mean and variance at a unit-cube point, in original score units.
inline std::pair<double, double> gp_predict(const gp_surrogate& gp, const Eigen::VectorXd& x) {
  const Eigen::Index n = gp.train_points.rows();
  if (x.size() != gp.train_points.cols()) throw input_error("gp_predict: dimension mismatch");
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kstar(i) = matern52(gp.train_points.row(i).transpose(), x, gp.kernel.lengthscales,
                        gp.kernel.signal_var);
  }
  const double mean_std = kstar.dot(gp.weights);
  const Eigen::VectorXd v = gp.chol_lower.triangularView<Eigen::Lower>().solve(kstar);
  const double var_std = std::max(0.0, gp.kernel.signal_var - v.squaredNorm());
  return {gp.target_mean + gp.target_sd * mean_std, gp.target_sd * gp.target_sd * var_std};
}

}  // namespace shifthpo

#endif  // SHIFTHPO_GP_HPP
