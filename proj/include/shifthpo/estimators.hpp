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

#ifndef SHIFTHPO_ESTIMATORS_HPP
#define SHIFTHPO_ESTIMATORS_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "shifthpo/errors.hpp"
#include "shifthpo/numeric.hpp"

namespace shifthpo {

/// Tolerance on the weighting constraint sum_j lambda_j * n_j = 1.
inline constexpr double kWeightConstraintTol = 1e-9;

/// Per-task losses and importance ratios evaluated on the same val-fold rows.
struct task_losses {
  Eigen::VectorXd losses;  // L(h_theta(x_i), y_i), >= 0
  Eigen::VectorXd ratios;  // w(x_i) in [0, C]
};

/// One row per source task. The weighted estimators consume this table.
struct weighted_loss_table {
  std::vector<task_losses> tasks;

  std::size_t task_count() const { return tasks.size(); }

  std::vector<Eigen::Index> n_per_task() const {
    std::vector<Eigen::Index> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) out.push_back(t.losses.size());
    return out;
  }

  void validate() const {
    if (tasks.empty()) throw input_error("weighted_loss_table: no tasks");
    for (std::size_t j = 0; j < tasks.size(); ++j) {
      const auto& t = tasks[j];
      if (t.losses.size() == 0) throw input_error("weighted_loss_table: empty task");
      if (t.losses.size() != t.ratios.size()) {
        throw input_error("weighted_loss_table: losses/ratios length mismatch");
      }
      if (!t.losses.allFinite() || !t.ratios.allFinite()) {
        throw input_error("weighted_loss_table: non-finite entry");
      }
    }
  }
};

enum class weighting_kind { uniform, variance_reduced, custom };

/// A per-task weight vector lambda with lambda_j >= 0 and
/// sum_j lambda_j * n_j = 1. Construct through the factories below.
struct source_weighting {
  Eigen::VectorXd lambda;
  weighting_kind kind = weighting_kind::custom;

  void validate(const std::vector<Eigen::Index>& n_per_task) const {
    if (static_cast<std::size_t>(lambda.size()) != n_per_task.size()) {
      throw weighting_error("source_weighting: task count mismatch");
    }
    compensated_sum acc;
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      if (!(lambda(j) >= 0.0)) {
        throw weighting_error("source_weighting: negative weight");
      }
      acc.add(lambda(j) * static_cast<double>(n_per_task[static_cast<std::size_t>(j)]));
    }
    if (std::abs(acc.value() - 1.0) > kWeightConstraintTol) {
      std::ostringstream oss;
      oss << "source_weighting: sum lambda_j * n_j = " << acc.value() << ", expected 1";
      throw weighting_error(oss.str());
    }
  }
};

/// lambda_j = 1 / n with n the pooled sample count; the plain unbiased
/// weighting.
inline source_weighting uniform_weights(const std::vector<Eigen::Index>& n_per_task) {
  if (n_per_task.empty()) throw input_error("uniform_weights: no tasks");
  Eigen::Index total = 0;
  for (Eigen::Index n : n_per_task) {
    if (n < 1) throw input_error("uniform_weights: task with n < 1");
    total += n;
  }
  source_weighting out;
  out.lambda = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_per_task.size()),
                                         1.0 / static_cast<double>(total));
  out.kind = weighting_kind::uniform;
  return out;
}

/// Wraps an arbitrary nonnegative lambda after checking the constraint.
inline source_weighting custom_weights(Eigen::VectorXd lambda,
                                       const std::vector<Eigen::Index>& n_per_task) {
  source_weighting out;
  out.lambda = std::move(lambda);
  out.kind = weighting_kind::custom;
  out.validate(n_per_task);
  return out;
}

/// Empirical mean of target-task losses; the oracle objective.
inline double empirical_target_objective(const Eigen::VectorXd& losses) {
  if (losses.size() == 0) throw input_error("empirical_target_objective: empty input");
  compensated_sum acc;
  for (Eigen::Index i = 0; i < losses.size(); ++i) acc.add(losses(i));
  return acc.value() / static_cast<double>(losses.size());
}

/// sum_j lambda_j sum_i w_ij * L_ij: unbiased for the target objective for
/// any weighting satisfying the constraint.
inline double lambda_unbiased_estimate(const weighted_loss_table& table,
                                       const source_weighting& weights) {
  table.validate();
  weights.validate(table.n_per_task());
  compensated_sum acc;
  for (std::size_t j = 0; j < table.tasks.size(); ++j) {
    const auto& t = table.tasks[j];
    compensated_sum inner;
    for (Eigen::Index i = 0; i < t.losses.size(); ++i) {
      inner.add(t.ratios(i) * t.losses(i));
    }
    acc.add(weights.lambda(static_cast<Eigen::Index>(j)) * inner.value());
  }
  return acc.value();
}

/// Empirical task divergence: second moment of w*L minus squared first
/// moment. May be negative on tiny folds; floor before inverting.
inline double estimate_divergence(const Eigen::VectorXd& losses,
                                  const Eigen::VectorXd& ratios) {
  if (losses.size() == 0) throw input_error("estimate_divergence: empty input");
  if (losses.size() != ratios.size()) {
    throw input_error("estimate_divergence: length mismatch");
  }
  const auto n = static_cast<double>(losses.size());
  compensated_sum first, second;
  for (Eigen::Index i = 0; i < losses.size(); ++i) {
    const double wl = ratios(i) * losses(i);
    first.add(wl);
    second.add(wl * wl);
  }
  const double m1 = first.value() / n;
  return second.value() / n - m1 * m1;
}

/// Exact divergence on a finite outcome space with known densities;
/// the test oracle for estimate_divergence.
inline double population_divergence(const Eigen::VectorXd& loss_by_outcome,
                                    const Eigen::VectorXd& source_probs,
                                    const Eigen::VectorXd& target_probs) {
  const Eigen::Index m = loss_by_outcome.size();
  if (m == 0 || source_probs.size() != m || target_probs.size() != m) {
    throw input_error("population_divergence: dimension mismatch");
  }
  if (std::abs(source_probs.sum() - 1.0) > 1e-6 || std::abs(target_probs.sum() - 1.0) > 1e-6) {
    throw input_error("population_divergence: probabilities must sum to 1");
  }
  compensated_sum second, f_t;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (target_probs(i) > 0.0 && !(source_probs(i) > 0.0)) {
      throw assumption_error("population_divergence: source lacks support where target > 0");
    }
    f_t.add(target_probs(i) * loss_by_outcome(i));
    if (source_probs(i) > 0.0) {
      const double w = target_probs(i) / source_probs(i);
      second.add(source_probs(i) * w * w * loss_by_outcome(i) * loss_by_outcome(i));
    }
  }
  return second.value() - f_t.value() * f_t.value();
}

/// Divergence estimates after flooring; raw values kept for diagnostics.
struct divergence_estimate {
  Eigen::VectorXd div_hat;  // floored, strictly positive
  Eigen::VectorXd raw;
  double floor = 0.0;

  /// True when no task carried usable divergence signal.
  bool all_at_floor() const { return (div_hat.array() <= floor).all(); }
};

/// Floors raw divergences at eps = 1e-6 * max(1, max_j raw) so the inverse
/// weights stay finite even when an empirical estimate is <= 0.
inline divergence_estimate floor_divergences(const Eigen::VectorXd& raw) {
  if (raw.size() == 0) throw input_error("floor_divergences: empty input");
  const double floor = 1e-6 * std::max(1.0, raw.maxCoeff());
  divergence_estimate out;
  out.raw = raw;
  out.div_hat = raw.cwiseMax(floor);
  out.floor = floor;
  return out;
}

/// Variance-optimal weights lambda*_j = (Div_j * sum_l n_l / Div_l)^-1.
inline source_weighting vr_weights(const divergence_estimate& divs,
                                   const std::vector<Eigen::Index>& n_per_task) {
  const auto k = static_cast<Eigen::Index>(n_per_task.size());
  if (divs.div_hat.size() != k) throw input_error("vr_weights: dimension mismatch");
  compensated_sum denom;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(divs.div_hat(j) > 0.0)) throw input_error("vr_weights: non-positive divergence");
    if (n_per_task[static_cast<std::size_t>(j)] < 1) {
      throw input_error("vr_weights: task with n < 1");
    }
    denom.add(static_cast<double>(n_per_task[static_cast<std::size_t>(j)]) / divs.div_hat(j));
  }
  source_weighting out;
  out.lambda.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    out.lambda(j) = 1.0 / (divs.div_hat(j) * denom.value());
  }
  out.kind = weighting_kind::variance_reduced;
  return out;
}

/// Closed-form estimator variance sum_j lambda_j^2 * n_j * Div_j.
inline double analytic_variance(const source_weighting& weights, const Eigen::VectorXd& divs,
                                const std::vector<Eigen::Index>& n_per_task) {
  const auto k = static_cast<Eigen::Index>(n_per_task.size());
  if (weights.lambda.size() != k || divs.size() != k) {
    throw input_error("analytic_variance: dimension mismatch");
  }
  compensated_sum acc;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double lam = weights.lambda(j);
    acc.add(lam * lam * static_cast<double>(n_per_task[static_cast<std::size_t>(j)]) * divs(j));
  }
  return acc.value();
}

/// Plug-in regret-bound diagnostic:
/// R_n + sqrt(2 V_incumbent / delta) + sqrt(2 (V_opt + V_est_opt) / delta).
inline double regret_bound(double variance_at_incumbent, double variance_at_opt,
                           double variance_at_est_opt, double simple_regret, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw input_error("regret_bound: delta must be in (0, 1)");
  if (variance_at_incumbent < 0.0 || variance_at_opt < 0.0 || variance_at_est_opt < 0.0) {
    throw input_error("regret_bound: negative variance");
  }
  return simple_regret + std::sqrt(2.0 * variance_at_incumbent / delta) +
         std::sqrt(2.0 * (variance_at_opt + variance_at_est_opt) / delta);
}

}  // namespace shifthpo

#endif  // SHIFTHPO_ESTIMATORS_HPP
