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

#ifndef SHIFTHPO_LEARNERS_HPP
#define SHIFTHPO_LEARNERS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include "shifthpo/dataset.hpp"
#include "shifthpo/errors.hpp"

namespace shifthpo {

enum class loss_kind {
  squared_half,          // (p - y)^2 / 2
  squared,               // (p - y)^2
  absolute_error,        // |p - y|
  binary_cross_entropy,  // label in {0, 1}, prediction clipped into (0, 1)
  zero_one,              // prediction thresholded at 0.5
};

/// Pointwise loss. BCE clips the prediction into [1e-7, 1 - 1e-7] and
/// requires a 0/1 label.
inline double loss(loss_kind kind, double prediction, double label) {
  switch (kind) {
    case loss_kind::squared_half: {
      const double d = prediction - label;
      return 0.5 * d * d;
    }
    case loss_kind::squared: {
      const double d = prediction - label;
      return d * d;
    }
    case loss_kind::absolute_error:
      return std::abs(prediction - label);
    case loss_kind::binary_cross_entropy: {
      if (label != 0.0 && label != 1.0) {
        throw input_error("loss: binary_cross_entropy label must be 0 or 1");
      }
      const double p = std::min(1.0 - 1e-7, std::max(1e-7, prediction));
      return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
    }
    case loss_kind::zero_one: {
      const double cls = prediction >= 0.5 ? 1.0 : 0.0;
      return cls == label ? 0.0 : 1.0;
    }
  }
  throw input_error("loss: unknown kind");
}

/// The hyperparameter itself is the prediction.
struct constant_spec {};

/// Linear model fit by weighted ridge normal equations; the single
/// hyperparameter is the ridge strength.
struct weighted_ridge_spec {};

using learner_spec = std::variant<constant_spec, weighted_ridge_spec>;

struct constant_model {
  double value = 0.0;
};

struct ridge_model {
  Eigen::VectorXd beta;
  double intercept = 0.0;
};

using trained_model = std::variant<constant_model, ridge_model>;

inline double predict(const trained_model& model, const Eigen::VectorXd& x) {
  if (const auto* c = std::get_if<constant_model>(&model)) return c->value;
  const auto& r = std::get<ridge_model>(model);
  if (x.size() != r.beta.size()) throw input_error("predict: feature dimension mismatch");
  return r.beta.dot(x) + r.intercept;
}

/// One training fold with per-row weights (already combined lambda_j * w).
struct weighted_fold {
  const labeled_dataset* data = nullptr;
  Eigen::VectorXd weights;
};

/// Trains h_theta by weighted empirical risk minimization over the pooled
/// folds. The constant learner returns theta directly; the ridge learner
/// solves (X^T W X + reg I) beta = X^T W y exactly on the intercept-augmented
/// design, with reg = theta(0). The regularizer is not rescaled when the
/// weights are rescaled; the weight scale convention is fixed.
inline trained_model train_weighted(const learner_spec& spec, const Eigen::VectorXd& theta,
                                    const std::vector<weighted_fold>& folds, loss_kind /*loss*/) {
  if (theta.size() < 1) throw input_error("train_weighted: empty hyperparameters");
  Eigen::Index total_rows = 0;
  bool any_positive = false;
  for (const auto& f : folds) {
    if (f.data == nullptr) throw input_error("train_weighted: null fold");
    if (f.weights.size() != f.data->rows()) {
      throw input_error("train_weighted: weight count != row count");
    }
    for (Eigen::Index i = 0; i < f.weights.size(); ++i) {
      const double w = f.weights(i);
      if (!std::isfinite(w) || w < 0.0) {
        throw input_error("train_weighted: weights must be finite and >= 0");
      }
      any_positive = any_positive || w > 0.0;
    }
    total_rows += f.data->rows();
  }
  if (total_rows == 0) throw input_error("train_weighted: no training rows");
  if (!any_positive) throw training_error("train_weighted: all row weights are zero");

  if (std::holds_alternative<constant_spec>(spec)) {
    return constant_model{theta(0)};
  }

  const double reg = theta(0);
  if (!(reg > 0.0)) throw input_error("train_weighted: ridge strength must be > 0");

  const Eigen::Index d = folds.front().data->dim();
  const Eigen::Index da = d + 1;  // intercept column
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(da, da);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(da);
  Eigen::VectorXd xa(da);
  for (const auto& f : folds) {
    if (f.data->dim() != d) throw input_error("train_weighted: fold dimension mismatch");
    for (Eigen::Index i = 0; i < f.data->rows(); ++i) {
      const double w = f.weights(i);
      if (w == 0.0) continue;
      xa.head(d) = f.data->features.row(i).transpose();
      xa(d) = 1.0;
      gram.noalias() += w * xa * xa.transpose();
      rhs.noalias() += (w * f.data->labels(i)) * xa;
    }
  }
  gram.diagonal().array() += reg;

  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw numeric_error("train_weighted: ridge normal equations not solvable");
  }
  const Eigen::VectorXd coef = solver.solve(rhs);
  if (!coef.allFinite()) {
    throw numeric_error("train_weighted: non-finite ridge solution");
  }
  ridge_model model;
  model.beta = coef.head(d);
  model.intercept = coef(d);
  return model;
}

/// Per-row losses of a trained model on a dataset.
inline Eigen::VectorXd evaluate_losses(const trained_model& model, const labeled_dataset& ds,
                                       loss_kind kind) {
  Eigen::VectorXd out(ds.rows());
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    out(i) = loss(kind, predict(model, ds.features.row(i).transpose()), ds.labels(i));
  }
  return out;
}

}  // namespace shifthpo

#endif  // SHIFTHPO_LEARNERS_HPP
