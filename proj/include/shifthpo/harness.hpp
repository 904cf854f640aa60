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

#ifndef SHIFTHPO_HARNESS_HPP
#define SHIFTHPO_HARNESS_HPP

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "shifthpo/bo.hpp"
#include "shifthpo/dataset.hpp"
#include "shifthpo/density_ratio.hpp"
#include "shifthpo/errors.hpp"
#include "shifthpo/estimators.hpp"
#include "shifthpo/learners.hpp"
#include "shifthpo/log.hpp"
#include "shifthpo/numeric.hpp"
#include "shifthpo/search_space.hpp"

namespace shifthpo {

enum class estimator_kind { oracle, naive, unbiased, variance_reduced };

inline const char* estimator_name(estimator_kind k) {
  switch (k) {
    case estimator_kind::oracle: return "oracle";
    case estimator_kind::naive: return "naive";
    case estimator_kind::unbiased: return "unbiased";
    case estimator_kind::variance_reduced: return "variance_reduced";
  }
  return "?";
}

/// Exact expectation of (theta - Y)^2 / 2 under the toy generative model
/// with task mean mu: Y = slope * X + intercept + noise, X ~ N(mu, 1).
inline double toy_true_objective(double theta, double mu_target, double slope = 0.7,
                                 double intercept = 0.3, double noise_sd = 1.0) {
  const double bias = theta - (slope * mu_target + intercept);
  return 0.5 * (bias * bias + slope * slope * 1.0 + noise_sd * noise_sd);
}

/// r = f(incumbent) - f(theta*); nonnegative up to float noise when
/// theta_star_value really is the minimum of true_f.
inline double compute_regret(const bo_history& history,
                             const std::function<double(const hyper_params&)>& true_f,
                             double theta_star_value) {
  return true_f(history.incumbent_theta()) - theta_star_value;
}

// ---------------------------------------------------------------------------
// Objective construction (Algorithm 1 inner loop)
// ---------------------------------------------------------------------------

/// Per-evaluation objective for one MS-CS problem instance. Trains h_theta
/// on the pooled train folds under the estimator kind's weighting, then
/// scores on the val folds:
///   oracle   -> empirical mean loss on the labeled target
///   naive    -> unweighted pooled val mean
///   unbiased -> lambda_j = 1/n with fitted importance ratios
///   vr       -> divergences re-estimated for this theta, floored, inverted
/// The variance-reduced weighting needs a trained model before divergences
/// exist, so training runs twice: a pilot pass under uniform weights fixes
/// the training-time lambda*, the final pass produces the scored model.
/// Divergences are estimated on the density fold's labels, never on the val
/// fold: weights derived from the scored losses themselves correlate with
/// them, which visibly biases the estimated objective and costs the
/// weighting its variance advantage.
class mscs_objective {
 public:
  mscs_objective(estimator_kind kind, const std::vector<source_split>& splits,
                 const std::vector<density_ratio_model>& ratios, const unlabeled_dataset& target,
                 const labeled_dataset* oracle_target, learner_spec learner, loss_kind loss)
      : kind_(kind), splits_(&splits), oracle_target_(oracle_target), learner_(learner),
        loss_(loss) {
    if (splits.empty()) throw config_error("build_objective: no source splits");
    const bool needs_ratios =
        kind == estimator_kind::unbiased || kind == estimator_kind::variance_reduced;
    if (needs_ratios && ratios.size() != splits.size()) {
      throw config_error("build_objective: one fitted ratio model per source is required");
    }
    if (kind == estimator_kind::oracle && oracle_target == nullptr) {
      throw config_error("build_objective: oracle estimator requires labeled target data");
    }
    if (kind != estimator_kind::oracle && oracle_target != nullptr) {
      throw config_error("build_objective: target labels are forbidden for non-oracle kinds");
    }

    n_train_total_ = 0;
    n_val_total_ = 0;
    for (const auto& s : splits) {
      n_train_total_ += s.train.rows();
      n_val_total_ += s.val.rows();
    }

    if (needs_ratios) {
      double clipped = 0.0;
      Eigen::Index evaluated = 0;
      for (std::size_t j = 0; j < splits.size(); ++j) {
        const auto& model = ratios[j];
        if (model.dim() != target.dim()) {
          throw input_error("build_objective: ratio model dimension mismatch");
        }
        w_train_.push_back(model.evaluate_rows(splits[j].train.features));
        w_val_.push_back(model.evaluate_rows(splits[j].val.features));
        w_density_.push_back(model.evaluate_rows(splits[j].density.features));
        clipped += model.clipped_fraction(splits[j].val.features) *
                   static_cast<double>(splits[j].val.rows());
        evaluated += splits[j].val.rows();
      }
      clipped_fraction_ = clipped / static_cast<double>(evaluated);
    }
  }

  bo_eval operator()(const hyper_params& theta) const {
    switch (kind_) {
      case estimator_kind::oracle: {
        const trained_model model = train_unit(theta);
        const Eigen::VectorXd losses = evaluate_losses(model, *oracle_target_, loss_);
        return {empirical_target_objective(losses), std::nullopt};
      }
      case estimator_kind::naive: {
        const trained_model model = train_unit(theta);
        compensated_sum acc;
        for (const auto& s : *splits_) {
          const Eigen::VectorXd losses = evaluate_losses(model, s.val, loss_);
          for (Eigen::Index i = 0; i < losses.size(); ++i) acc.add(losses(i));
        }
        return {acc.value() / static_cast<double>(n_val_total_), std::nullopt};
      }
      case estimator_kind::unbiased: {
        const trained_model model = train_importance_uniform(theta);
        const weighted_loss_table table = val_table(model);
        const source_weighting lam = uniform_weights(table.n_per_task());
        bo_eval out;
        out.score = lambda_unbiased_estimate(table, lam);
        out.diagnostics = diagnostics_for(lam, density_divergences(model));
        return out;
      }
      case estimator_kind::variance_reduced: {
        const trained_model pilot = train_importance_uniform(theta);
        const source_weighting lam_train =
            vr_or_fallback(density_divergences(pilot), train_sizes());
        const trained_model model = train_weighted_by(theta, lam_train);

        const divergence_estimate divs = density_divergences(model);
        const weighted_loss_table table = val_table(model);
        const source_weighting lam = vr_or_fallback(divs, table.n_per_task());
        bo_eval out;
        out.score = lambda_unbiased_estimate(table, lam);
        out.diagnostics = diagnostics_for(lam, divs);
        return out;
      }
    }
    throw config_error("build_objective: unknown estimator kind");
  }

  /// The model the incumbent hyperparameters would deploy; used for the
  /// held-out final evaluation.
  trained_model train_final(const hyper_params& theta) const {
    switch (kind_) {
      case estimator_kind::oracle:
      case estimator_kind::naive:
        return train_unit(theta);
      case estimator_kind::unbiased:
        return train_importance_uniform(theta);
      case estimator_kind::variance_reduced: {
        const trained_model pilot = train_importance_uniform(theta);
        const source_weighting lam_train =
            vr_or_fallback(density_divergences(pilot), train_sizes());
        return train_weighted_by(theta, lam_train);
      }
    }
    throw config_error("build_objective: unknown estimator kind");
  }

 private:
  trained_model train_unit(const hyper_params& theta) const {
    std::vector<weighted_fold> folds;
    folds.reserve(splits_->size());
    for (const auto& s : *splits_) {
      folds.push_back({&s.train, Eigen::VectorXd::Ones(s.train.rows())});
    }
    return train_weighted(learner_, theta.values, folds, loss_);
  }

  trained_model train_importance_uniform(const hyper_params& theta) const {
    const double lam = 1.0 / static_cast<double>(n_train_total_);
    std::vector<weighted_fold> folds;
    folds.reserve(splits_->size());
    for (std::size_t j = 0; j < splits_->size(); ++j) {
      folds.push_back({&(*splits_)[j].train, lam * w_train_[j]});
    }
    return train_weighted(learner_, theta.values, folds, loss_);
  }

  trained_model train_weighted_by(const hyper_params& theta, const source_weighting& lam) const {
    std::vector<weighted_fold> folds;
    folds.reserve(splits_->size());
    for (std::size_t j = 0; j < splits_->size(); ++j) {
      folds.push_back(
          {&(*splits_)[j].train, lam.lambda(static_cast<Eigen::Index>(j)) * w_train_[j]});
    }
    return train_weighted(learner_, theta.values, folds, loss_);
  }

  weighted_loss_table val_table(const trained_model& model) const {
    weighted_loss_table table;
    table.tasks.reserve(splits_->size());
    for (std::size_t j = 0; j < splits_->size(); ++j) {
      table.tasks.push_back(
          {evaluate_losses(model, (*splits_)[j].val, loss_), w_val_[j]});
    }
    return table;
  }

  std::vector<Eigen::Index> train_sizes() const {
    std::vector<Eigen::Index> out;
    out.reserve(splits_->size());
    for (const auto& s : *splits_) out.push_back(s.train.rows());
    return out;
  }

  /// Per-task divergence of w * L estimated on the density fold, whose
  /// labels are untouched by training and scoring. The val fold stays out:
  /// weights derived from the losses they will multiply are correlated with
  /// them and bias the score.
  divergence_estimate density_divergences(const trained_model& model) const {
    Eigen::VectorXd raw(static_cast<Eigen::Index>(splits_->size()));
    for (std::size_t j = 0; j < splits_->size(); ++j) {
      raw(static_cast<Eigen::Index>(j)) = estimate_divergence(
          evaluate_losses(model, (*splits_)[j].density, loss_), w_density_[j]);
    }
    return floor_divergences(raw);
  }

  source_weighting vr_or_fallback(const divergence_estimate& divs,
                                  const std::vector<Eigen::Index>& n_per_task) const {
    if (divs.all_at_floor()) {
      log_info("variance_reduced: every divergence at floor; using uniform weights");
      return uniform_weights(n_per_task);
    }
    return vr_weights(divs, n_per_task);
  }

  trial_diagnostics diagnostics_for(const source_weighting& lam,
                                    const divergence_estimate& divs) const {
    trial_diagnostics diag;
    diag.lambda = lam.lambda;
    diag.div_raw = divs.raw;
    diag.div_floored = divs.div_hat;
    diag.clipped_ratio_fraction = clipped_fraction_;
    return diag;
  }

  estimator_kind kind_;
  const std::vector<source_split>* splits_;
  const labeled_dataset* oracle_target_;
  learner_spec learner_;
  loss_kind loss_;
  std::vector<Eigen::VectorXd> w_train_;
  std::vector<Eigen::VectorXd> w_val_;
  std::vector<Eigen::VectorXd> w_density_;
  double clipped_fraction_ = 0.0;
  Eigen::Index n_train_total_ = 0;
  Eigen::Index n_val_total_ = 0;
};

/// Functional wrapper matching the run_bo objective shape.
inline std::function<bo_eval(const hyper_params&)> build_objective(
    estimator_kind kind, const std::vector<source_split>& splits,
    const std::vector<density_ratio_model>& ratios, const unlabeled_dataset& target,
    const labeled_dataset* oracle_target, learner_spec learner, loss_kind loss) {
  auto obj = std::make_shared<mscs_objective>(kind, splits, ratios, target, oracle_target,
                                              learner, loss);
  return [obj](const hyper_params& theta) { return (*obj)(theta); };
}

// ---------------------------------------------------------------------------
// Run configuration and report
// ---------------------------------------------------------------------------

struct toy_source {
  toy_config cfg;
};

struct csv_source {
  std::string target_path;
  std::vector<std::string> source_paths;
  std::string label_column;
};

using data_source = std::variant<toy_source, csv_source>;

struct run_config {
  estimator_kind estimator = estimator_kind::variance_reduced;
  learner_spec learner = constant_spec{};
  loss_kind loss = loss_kind::squared_half;
  search_space space;
  int budget = 50;
  int n_init = 5;
  double beta = 2.0;
  double density_frac = 0.30;
  double train_frac_of_rest = 0.70;
  ulsif_config ulsif;
  std::vector<std::uint64_t> seeds;
  data_source data = toy_source{};

  void validate() const {
    space.validate();
    ulsif.validate();
    if (budget < 1 || n_init < 1 || budget < n_init) {
      throw config_error("run_config: need budget >= n_init >= 1");
    }
    if (seeds.empty()) throw config_error("run_config.seeds: must be non-empty");
    if (!(density_frac > 0.0 && density_frac < 1.0)) {
      throw config_error("run_config.density_frac: must be in (0, 1)");
    }
    if (!(train_frac_of_rest > 0.0 && train_frac_of_rest < 1.0)) {
      throw config_error("run_config.train_frac_of_rest: must be in (0, 1)");
    }
    if (const auto* toy = std::get_if<toy_source>(&data)) {
      toy->cfg.validate();
    } else {
      const auto& csv = std::get<csv_source>(data);
      if (csv.target_path.empty()) throw config_error("run_config.data.target_path: empty");
      if (csv.source_paths.empty()) throw config_error("run_config.data.source_paths: empty");
      if (csv.label_column.empty()) throw config_error("run_config.data.label_column: empty");
    }
  }
};

struct seed_run {
  std::uint64_t seed = 0;
  bo_history history;
  double final_score = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> regret;
};

struct run_report {
  std::string estimator;
  std::vector<seed_run> runs;
  double mean_final_score = 0.0;
  double se_final_score = 0.0;
  std::optional<double> mean_regret;
  std::optional<double> se_regret;
};

namespace detail {

// Seed-derivation tags for the independent random stages of one run.
inline constexpr std::uint64_t kTagSplit = 0x53504c49;   // splits, + task index
inline constexpr std::uint64_t kTagUlsif = 0x554c5349;   // ratio fits, + task index
inline constexpr std::uint64_t kTagBo = 0xb0;            // BO loop
inline constexpr std::uint64_t kTagCsvSplit = 0xc5f70;   // target 70/30 split

struct run_data {
  unlabeled_dataset target;
  std::vector<labeled_dataset> sources;
  std::optional<labeled_dataset> oracle_target;   // only built for the oracle kind
  std::optional<labeled_dataset> eval_holdout;    // csv: 30% labeled test split
  std::optional<double> toy_mu_target;            // toy: realized target mean
  oracle_access toy_labels;                       // toy: quarantined labels
};

inline run_data materialize(const run_config& cfg, std::uint64_t seed) {
  run_data out;
  if (const auto* toy = std::get_if<toy_source>(&cfg.data)) {
    toy_config tc = toy->cfg;
    tc.seed = derive_seed(seed, toy->cfg.seed);
    toy_problem problem = generate_toy(tc);
    out.target = std::move(problem.target);
    out.sources = std::move(problem.sources);
    out.toy_mu_target = problem.target_mu;
    out.toy_labels = std::move(problem.target_oracle);
    if (cfg.estimator == estimator_kind::oracle) {
      labeled_dataset lt;
      lt.features = out.target.features;
      lt.labels = out.toy_labels.reveal_labels_for_evaluation_only();
      lt.task_id = -1;
      out.oracle_target = std::move(lt);
    }
    return out;
  }

  const auto& csv = std::get<csv_source>(cfg.data);
  const auto loaded = load_csv(csv.target_path, csv.label_column);
  const auto& full_target = std::get<labeled_dataset>(loaded);

  // 70/30 split of the labeled target; only the 70%'s features enter the
  // pipeline, the 30% is reserved for the final held-out evaluation.
  const Eigen::Index n = full_target.rows();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(derive_seed(seed, kTagCsvSplit));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_pipe = static_cast<Eigen::Index>(
      std::floor(0.7 * static_cast<double>(n)));
  if (n_pipe < 1 || n - n_pipe < 1) {
    throw split_error("run_mscs: target file too small for a 70/30 split");
  }
  const std::vector<Eigen::Index> idx_pipe(perm.begin(), perm.begin() + n_pipe);
  const std::vector<Eigen::Index> idx_test(perm.begin() + n_pipe, perm.end());
  const labeled_dataset pipe = take_rows(full_target, idx_pipe);
  out.eval_holdout = take_rows(full_target, idx_test);
  out.target.features = pipe.features;
  if (cfg.estimator == estimator_kind::oracle) out.oracle_target = pipe;

  int task_id = 0;
  for (const auto& p : csv.source_paths) {
    auto src = std::get<labeled_dataset>(load_csv(p, csv.label_column));
    src.task_id = task_id++;
    if (src.dim() != out.target.dim()) {
      throw input_error("run_mscs: source/target feature dimension mismatch for " + p);
    }
    out.sources.push_back(std::move(src));
  }
  return out;
}

}  // namespace detail

/// Runs Algorithm 1 with BO as the optimizer for a single seed.
inline seed_run run_single(const run_config& cfg, std::uint64_t seed) {
  detail::run_data data = detail::materialize(cfg, seed);

  std::vector<source_split> splits;
  splits.reserve(data.sources.size());
  for (std::size_t j = 0; j < data.sources.size(); ++j) {
    splits.push_back(split_source(data.sources[j], cfg.density_frac, cfg.train_frac_of_rest,
                                  derive_seed(seed, detail::kTagSplit + j)));
  }

  std::vector<density_ratio_model> ratios;
  if (cfg.estimator == estimator_kind::unbiased ||
      cfg.estimator == estimator_kind::variance_reduced) {
    ratios.reserve(splits.size());
    for (std::size_t j = 0; j < splits.size(); ++j) {
      ulsif_config ucfg = cfg.ulsif;
      ucfg.seed = derive_seed(seed, detail::kTagUlsif + j);
      ratios.push_back(fit_ulsif(data.target, splits[j].density.features, ucfg));
    }
  }

  const mscs_objective objective(cfg.estimator, splits, ratios, data.target,
                                 data.oracle_target ? &*data.oracle_target : nullptr,
                                 cfg.learner, cfg.loss);

  bo_options opts;
  opts.budget = cfg.budget;
  opts.n_init = cfg.n_init;
  opts.beta = cfg.beta;
  opts.seed = derive_seed(seed, detail::kTagBo);
  seed_run out;
  out.seed = seed;
  out.history = run_bo(std::cref(objective), cfg.space, opts);

  const auto& best = out.history.trials[out.history.incumbent_index];
  if (best.failed) {
    out.final_score = std::numeric_limits<double>::infinity();
    return out;
  }

  if (data.toy_mu_target.has_value()) {
    const auto& toy = std::get<toy_source>(cfg.data).cfg;
    if (std::holds_alternative<constant_spec>(cfg.learner) &&
        cfg.loss == loss_kind::squared_half) {
      out.final_score = toy_true_objective(best.theta.values(0), *data.toy_mu_target, toy.slope,
                                           toy.intercept, toy.noise_sd);
      const double optimum =
          0.5 * (toy.slope * toy.slope + toy.noise_sd * toy.noise_sd);
      out.regret = out.final_score - optimum;
    } else {
      // No closed form for other learners; score on the quarantined labels.
      labeled_dataset truth;
      truth.features = data.target.features;
      truth.labels = data.toy_labels.reveal_labels_for_evaluation_only();
      const trained_model model = objective.train_final(best.theta);
      out.final_score = empirical_target_objective(evaluate_losses(model, truth, cfg.loss));
    }
  } else {
    const trained_model model = objective.train_final(best.theta);
    out.final_score =
        empirical_target_objective(evaluate_losses(model, *data.eval_holdout, cfg.loss));
  }
  return out;
}

/// Full multi-seed experiment; seeds run in parallel, results are assembled
/// in seed order so reports stay deterministic.
inline run_report run_mscs(const run_config& cfg) {
  cfg.validate();
  run_report report;
  report.estimator = estimator_name(cfg.estimator);
  report.runs.resize(cfg.seeds.size());

  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(cfg.seeds.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cfg.seeds.size()) return;
        try {
          report.runs[i] = run_single(cfg, cfg.seeds[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      log_error("run_mscs: seed ", cfg.seeds[i], " failed");
      std::rethrow_exception(errors[i]);
    }
  }

  std::vector<double> finals, regrets;
  bool all_regret = true;
  for (const auto& r : report.runs) {
    finals.push_back(r.final_score);
    if (r.regret) {
      regrets.push_back(*r.regret);
    } else {
      all_regret = false;
    }
  }
  report.mean_final_score = mean(finals);
  report.se_final_score = standard_error(finals);
  if (all_regret && !regrets.empty()) {
    report.mean_regret = mean(regrets);
    report.se_regret = standard_error(regrets);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Worked-example verification
// ---------------------------------------------------------------------------

struct table1_check {
  std::string name;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 1e-2;
  bool pass = false;
};

struct table1_report {
  std::vector<table1_check> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
};

/// Recomputes the two-outcome worked example end to end: target objective,
/// both task divergences, the variances of the uniform / drop-first /
/// variance-reduced weightings, and the optimal weights themselves.
inline table1_report verify_table1() {
  Eigen::VectorXd losses(2), p_target(2), p_s1(2), p_s2(2);
  losses << 10.0, 1.0;
  p_target << 0.8, 0.2;
  p_s1 << 0.2, 0.8;
  p_s2 << 0.9, 0.1;
  const std::vector<Eigen::Index> ns{1, 1};

  const double f_t = p_target.dot(losses);
  const double div1 = population_divergence(losses, p_s1, p_target);
  const double div2 = population_divergence(losses, p_s2, p_target);
  Eigen::VectorXd divs(2);
  divs << div1, div2;

  const double var_ub = analytic_variance(uniform_weights(ns), divs, ns);
  Eigen::VectorXd drop(2);
  drop << 0.0, 1.0;
  const double var_drop = analytic_variance(custom_weights(drop, ns), divs, ns);
  const source_weighting star = vr_weights(floor_divergences(divs), ns);
  const double var_vr = analytic_variance(star, divs, ns);
  const double var_vr_closed = 1.0 / (1.0 / div1 + 1.0 / div2);

  table1_report report;
  auto check = [&report](std::string name, double expected, double actual,
                         double tolerance = 1e-2) {
    report.checks.push_back(
        {std::move(name), expected, actual, tolerance, std::abs(expected - actual) <= tolerance});
  };
  check("target objective f_T", 8.2, f_t);
  check("Div(T||S1)", 252.81, div1);
  check("Div(T||S2)", 4.27, div2);
  check("Var(uniform unbiased)", 64.27, var_ub);
  check("Var(drop S1)", 4.27, var_drop);
  check("lambda*_1", 0.017, star.lambda(0));
  check("lambda*_2", 0.983, star.lambda(1));
  check("Var(variance reduced)", 4.21, var_vr);
  check("closed-form identity", var_vr_closed, var_vr, 1e-9);
  return report;
}

}  // namespace shifthpo

#endif  // SHIFTHPO_HARNESS_HPP
