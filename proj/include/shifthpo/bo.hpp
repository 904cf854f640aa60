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

#ifndef SHIFTHPO_BO_HPP
#define SHIFTHPO_BO_HPP

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <type_traits>
#include <utility>
#include <vector>

#include "shifthpo/errors.hpp"
#include "shifthpo/gp.hpp"
#include "shifthpo/log.hpp"
#include "shifthpo/numeric.hpp"
#include "shifthpo/search_space.hpp"

namespace shifthpo {

/// Lower confidence bound for minimization: mean - beta * sqrt(variance).
inline double acquisition_lcb(double mean, double variance, double beta = 2.0) {
  if (variance < 0.0) throw input_error("acquisition_lcb: negative variance");
  return mean - beta * std::sqrt(variance);
}

/// Per-task diagnostics captured alongside a trial score.
struct trial_diagnostics {
  Eigen::VectorXd lambda;
  Eigen::VectorXd div_raw;
  Eigen::VectorXd div_floored;
  double clipped_ratio_fraction = 0.0;
};

/// Score plus optional diagnostics returned by a rich objective.
struct bo_eval {
  double score = 0.0;
  std::optional<trial_diagnostics> diagnostics;
};

struct bo_trial {
  hyper_params theta;
  double score = 0.0;
  bool failed = false;
  double wall_time_ms = 0.0;  // kept in memory only; excluded from reports
  std::optional<trial_diagnostics> diagnostics;
};

struct bo_history {
  std::vector<bo_trial> trials;
  std::size_t incumbent_index = 0;

  double incumbent_score() const { return trials[incumbent_index].score; }
  const hyper_params& incumbent_theta() const { return trials[incumbent_index].theta; }

  /// Index of the best (finite) trial among the first `count` trials;
  /// ties resolve to the earliest trial.
  std::size_t incumbent_after(std::size_t count) const {
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < count && t < trials.size(); ++t) {
      if (!trials[t].failed && trials[t].score < best_score) {
        best = t;
        best_score = trials[t].score;
      }
    }
    return best;
  }
};

struct bo_options {
  int budget = 50;  // total evaluations, including the initial design
  int n_init = 5;
  double beta = 2.0;
  std::uint64_t seed = 0;
  gp_config gp;
};

namespace detail {

/// Additive-recurrence low-discrepancy point set, shifted by a seeded offset.
/// Deterministic and cheap; good enough spread for acquisition search.
class lowdisc_sequence {
 public:
  lowdisc_sequence(Eigen::Index dim, std::uint64_t seed) : alpha_(dim), shift_(dim) {
    // Generalized golden ratio: unique positive root of x^(d+1) = x + 1.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) {
      phi = std::pow(1.0 + phi, 1.0 / (static_cast<double>(dim) + 1.0));
    }
    std::uint64_t state = seed;
    for (Eigen::Index i = 0; i < dim; ++i) {
      alpha_(i) = std::fmod(std::pow(1.0 / phi, static_cast<double>(i + 1)), 1.0);
      shift_(i) = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    }
  }

  Eigen::VectorXd point(std::int64_t n) const {
    Eigen::VectorXd u(alpha_.size());
    for (Eigen::Index i = 0; i < alpha_.size(); ++i) {
      u(i) = std::fmod(shift_(i) + static_cast<double>(n + 1) * alpha_(i), 1.0);
    }
    return u;
  }

 private:
  Eigen::VectorXd alpha_;
  Eigen::VectorXd shift_;
};

inline double lcb_at(const gp_surrogate& gp, const Eigen::VectorXd& u, double beta) {
  const auto [mean, var] = gp_predict(gp, u);
  return acquisition_lcb(mean, var, beta);
}

}  // namespace detail

inline constexpr int kAcquisitionCandidates = 2048;
inline constexpr int kRefinementPasses = 16;
inline constexpr int kRefinementStarts = 4;

/// Minimizes the LCB acquisition over seeded low-discrepancy candidates,
/// then polishes the best few by coordinate descent. Deterministic per seed.
inline hyper_params propose_next(const gp_surrogate& gp, const search_space& space,
                                 std::uint64_t seed, double beta = 2.0) {
  space.validate();
  const detail::lowdisc_sequence seq(space.size(), seed);

  std::vector<std::pair<double, Eigen::VectorXd>> scored;
  scored.reserve(kAcquisitionCandidates);
  for (int c = 0; c < kAcquisitionCandidates; ++c) {
    Eigen::VectorXd u = seq.point(c);
    scored.emplace_back(detail::lcb_at(gp, u, beta), std::move(u));
  }
  std::partial_sort(scored.begin(), scored.begin() + kRefinementStarts, scored.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });

  double best_val = scored.front().first;
  Eigen::VectorXd best_u = scored.front().second;
  for (int s = 0; s < kRefinementStarts; ++s) {
    Eigen::VectorXd u = scored[static_cast<std::size_t>(s)].second;
    double val = scored[static_cast<std::size_t>(s)].first;
    double step = 0.25;
    for (int pass = 0; pass < kRefinementPasses; ++pass) {
      for (Eigen::Index dim = 0; dim < u.size(); ++dim) {
        for (double dir : {-1.0, 1.0}) {
          Eigen::VectorXd cand = u;
          cand(dim) = std::min(1.0, std::max(0.0, cand(dim) + dir * step));
          const double v = detail::lcb_at(gp, cand, beta);
          if (v < val) {
            val = v;
            u = cand;
          }
        }
      }
      step *= 0.6;
    }
    if (val < best_val) {
      best_val = val;
      best_u = u;
    }
  }
  return space.from_unit(best_u);
}

namespace detail {

template <typename Objective>
bo_eval invoke_objective(Objective&& objective, const hyper_params& theta) {
  if constexpr (std::is_same_v<std::invoke_result_t<Objective&, const hyper_params&>, bo_eval>) {
    return objective(theta);
  } else {
    return bo_eval{objective(theta), std::nullopt};
  }
}

}  // namespace detail

/// Sequential GP-UCB loop (LCB for minimization): n_init seeded random
/// points, then fit / propose / evaluate until the budget is spent. A trial
/// whose objective throws is recorded as failed with score +inf and never
/// becomes the incumbent. The trajectory for a given seed is a prefix of the
/// trajectory for any larger budget.
template <typename Objective>
bo_history run_bo(Objective&& objective, const search_space& space, const bo_options& opts) {
  space.validate();
  if (opts.n_init < 1 || opts.budget < opts.n_init) {
    throw input_error("run_bo: need budget >= n_init >= 1");
  }

  bo_history history;
  history.trials.reserve(static_cast<std::size_t>(opts.budget));
  std::mt19937_64 init_rng(derive_seed(opts.seed, 0x696e6974));  // "init"
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // GP training view; failed trials enter with an imputed worst-finite score
  // so the surrogate avoids them without poisoning the standardization.
  std::vector<Eigen::VectorXd> unit_points;
  std::vector<double> gp_scores;
  std::vector<bool> failed_flags;

  auto evaluate = [&](const hyper_params& theta, Eigen::VectorXd u) {
    bo_trial trial;
    trial.theta = theta;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      bo_eval ev = detail::invoke_objective(objective, theta);
      if (!std::isfinite(ev.score)) throw numeric_error("objective returned non-finite score");
      trial.score = ev.score;
      trial.diagnostics = std::move(ev.diagnostics);
    } catch (const std::exception& e) {
      trial.failed = true;
      trial.score = std::numeric_limits<double>::infinity();
      log_info("trial failed: ", e.what());
    }
    trial.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    unit_points.push_back(std::move(u));
    gp_scores.push_back(trial.score);
    failed_flags.push_back(trial.failed);
    history.trials.push_back(std::move(trial));
  };

  for (int t = 0; t < opts.n_init; ++t) {
    Eigen::VectorXd u(space.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = unit(init_rng);
    const hyper_params theta = space.from_unit(u);
    evaluate(theta, std::move(u));
  }

  for (int t = opts.n_init; t < opts.budget; ++t) {
    // Impute failed scores with the worst finite score seen so far.
    double worst_finite = 0.0;
    bool any_finite = false;
    for (std::size_t i = 0; i < gp_scores.size(); ++i) {
      if (!failed_flags[i]) {
        worst_finite = any_finite ? std::max(worst_finite, gp_scores[i]) : gp_scores[i];
        any_finite = true;
      }
    }
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(unit_points.size()), space.size());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(unit_points.size()));
    for (std::size_t i = 0; i < unit_points.size(); ++i) {
      pts.row(static_cast<Eigen::Index>(i)) = unit_points[i].transpose();
      ys(static_cast<Eigen::Index>(i)) = failed_flags[i] ? worst_finite : gp_scores[i];
    }

    hyper_params proposal;
    if (!any_finite) {
      Eigen::VectorXd u(space.size());
      std::mt19937_64 rng(derive_seed(opts.seed, 0x72646d00ULL + static_cast<std::uint64_t>(t)));
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = unit(rng);
      proposal = space.from_unit(u);
    } else {
      const gp_surrogate gp = gp_fit(pts, ys, opts.gp);
      proposal = propose_next(gp, space, derive_seed(opts.seed, static_cast<std::uint64_t>(t)),
                              opts.beta);
    }

    // Nudge duplicates so the next Gram matrix stays well conditioned.
    Eigen::VectorXd u = space.to_unit(proposal);
    for (const auto& prev : unit_points) {
      if ((u - prev).norm() < 1e-9) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          u(i) = std::min(1.0, std::max(0.0, u(i) + (u(i) < 0.5 ? 1e-6 : -1e-6)));
        }
        proposal = space.from_unit(u);
        break;
      }
    }
    evaluate(proposal, std::move(u));
  }

  history.incumbent_index = history.incumbent_after(history.trials.size());
  return history;
}

}  // namespace shifthpo

#endif  // SHIFTHPO_BO_HPP
