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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "shifthpo/estimators.hpp"

using namespace shifthpo;
using Catch::Approx;

namespace {

// The two-outcome worked example: losses and task densities.
struct two_outcome_world {
  Eigen::VectorXd losses{{10.0, 1.0}};
  Eigen::VectorXd p_target{{0.8, 0.2}};
  Eigen::VectorXd p_s1{{0.2, 0.8}};
  Eigen::VectorXd p_s2{{0.9, 0.1}};

  double f_target() const { return p_target.dot(losses); }
  double ratio_s1(int outcome) const { return p_target(outcome) / p_s1(outcome); }
  double ratio_s2(int outcome) const { return p_target(outcome) / p_s2(outcome); }
};

}  // namespace

TEST_CASE("empirical_target_objective is the arithmetic mean") {
  CHECK(empirical_target_objective(Eigen::VectorXd{{2.0, 4.0}}) == Approx(3.0));
  CHECK(empirical_target_objective(Eigen::VectorXd::Constant(17, 0.42)) == Approx(0.42));
  CHECK_THROWS_AS(empirical_target_objective(Eigen::VectorXd{}), input_error);
}

TEST_CASE("uniform weights satisfy the constraint exactly") {
  const auto w = uniform_weights({1, 1});
  CHECK(w.lambda(0) == Approx(0.5));
  CHECK(w.lambda(1) == Approx(0.5));

  const auto w2 = uniform_weights({3, 7});
  CHECK(w2.lambda(0) == Approx(0.1));
  CHECK(w2.lambda(1) == Approx(0.1));

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Eigen::Index> size(1, 50);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Eigen::Index> ns;
    const int k = 1 + static_cast<int>(rng() % 5);
    for (int j = 0; j < k; ++j) ns.push_back(size(rng));
    const auto w3 = uniform_weights(ns);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += w3.lambda(j) * static_cast<double>(ns[j]);
    CHECK(std::abs(acc - 1.0) <= 1e-9);
  }
}

TEST_CASE("lambda-unbiased estimate on the worked example") {
  // One sample per source, both landing on the first outcome (loss 10).
  const two_outcome_world world;
  weighted_loss_table table;
  table.tasks.push_back({Eigen::VectorXd{{10.0}}, Eigen::VectorXd{{world.ratio_s1(0)}}});
  table.tasks.push_back({Eigen::VectorXd{{10.0}}, Eigen::VectorXd{{world.ratio_s2(0)}}});

  const double est = lambda_unbiased_estimate(table, uniform_weights({1, 1}));
  CHECK(est == Approx((4.0 * 10.0 + (8.0 / 9.0) * 10.0) / 2.0).epsilon(1e-12));
  CHECK(est == Approx(24.4444444444).epsilon(1e-9));
}

TEST_CASE("lambda-unbiased estimate collapses to pooled mean when ratios are 1") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(1.0, 0.25);
  weighted_loss_table table;
  double total = 0.0;
  Eigen::Index count = 0;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd losses(5 + j);
    for (Eigen::Index i = 0; i < losses.size(); ++i) {
      losses(i) = std::abs(noise(rng));
      total += losses(i);
    }
    count += losses.size();
    table.tasks.push_back({losses, Eigen::VectorXd::Ones(losses.size())});
  }
  const double est = lambda_unbiased_estimate(table, uniform_weights(table.n_per_task()));
  CHECK(est == Approx(total / static_cast<double>(count)).epsilon(1e-12));
}

TEST_CASE("single-source reduction is importance-weighted validation") {
  weighted_loss_table table;
  table.tasks.push_back({Eigen::VectorXd{{1.0, 2.0, 3.0}}, Eigen::VectorXd{{0.5, 1.5, 1.0}}});
  source_weighting w;
  w.lambda = Eigen::VectorXd::Constant(1, 1.0 / 3.0);
  w.kind = weighting_kind::custom;
  const double est = lambda_unbiased_estimate(table, w);
  CHECK(est == Approx((0.5 * 1.0 + 1.5 * 2.0 + 1.0 * 3.0) / 3.0));
}

TEST_CASE("constraint violations are rejected") {
  weighted_loss_table table;
  table.tasks.push_back({Eigen::VectorXd{{1.0}}, Eigen::VectorXd{{1.0}}});
  source_weighting bad;
  bad.lambda = Eigen::VectorXd{{0.5}};
  CHECK_THROWS_AS(lambda_unbiased_estimate(table, bad), weighting_error);

  source_weighting negative;
  negative.lambda = Eigen::VectorXd{{-1.0, 2.0}};
  CHECK_THROWS_AS(custom_weights(negative.lambda, {1, 1}), weighting_error);
}

TEST_CASE("estimate_divergence matches hand arithmetic") {
  SECTION("constant weighted losses have zero spread") {
    const Eigen::VectorXd l = Eigen::VectorXd::Constant(9, 3.0);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(9, 1.0);
    CHECK(estimate_divergence(l, w) == Approx(0.0).margin(1e-12));
  }
  SECTION("two-point example") {
    // w*L values 40 and 0.25: mean of squares 800.03125, squared mean
    // 405.015625, difference 395.015625.
    const Eigen::VectorXd l{{10.0, 1.0}};
    const Eigen::VectorXd w{{4.0, 0.25}};
    CHECK(estimate_divergence(l, w) == Approx(395.015625).epsilon(1e-12));
  }
  SECTION("errors") {
    CHECK_THROWS_AS(estimate_divergence(Eigen::VectorXd{}, Eigen::VectorXd{}), input_error);
    CHECK_THROWS_AS(estimate_divergence(Eigen::VectorXd{{1.0}}, Eigen::VectorXd{{1.0, 2.0}}),
                    input_error);
  }
}

TEST_CASE("population divergences of the worked example") {
  const two_outcome_world world;
  const double div1 = population_divergence(world.losses, world.p_s1, world.p_target);
  const double div2 = population_divergence(world.losses, world.p_s2, world.p_target);
  CHECK(div1 == Approx(252.81).margin(1e-9));
  CHECK(div2 == Approx(4.2711).margin(1e-4));

  SECTION("no shift and constant loss gives zero divergence") {
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(2, 5.0);
    CHECK(population_divergence(c, world.p_target, world.p_target) == Approx(0.0).margin(1e-12));
  }
  SECTION("support violations raise assumption errors") {
    Eigen::VectorXd p_s{{1.0, 0.0}};
    CHECK_THROWS_AS(population_divergence(world.losses, p_s, world.p_target), assumption_error);
  }
}

TEST_CASE("empirical divergence converges to the population value") {
  // 1e5 draws from the first source of the worked example.
  const two_outcome_world world;
  std::mt19937_64 rng(12345);
  std::bernoulli_distribution first_outcome(world.p_s1(0));
  const int n = 100000;
  Eigen::VectorXd losses(n), ratios(n);
  for (int i = 0; i < n; ++i) {
    const int outcome = first_outcome(rng) ? 0 : 1;
    losses(i) = world.losses(outcome);
    ratios(i) = world.ratio_s1(outcome);
  }
  const double est = estimate_divergence(losses, ratios);
  CHECK(est == Approx(252.81).epsilon(0.02));
}

TEST_CASE("vr weights reproduce the worked example") {
  Eigen::VectorXd divs{{252.81, 4.2711111111111113}};
  const auto star = vr_weights(floor_divergences(divs), {1, 1});
  CHECK(star.lambda(0) == Approx(0.017).margin(1e-2));
  CHECK(star.lambda(1) == Approx(0.983).margin(1e-2));
  CHECK(star.lambda(0) == Approx(0.0166139).margin(1e-6));
  star.validate({1, 1});

  SECTION("equal divergences and sizes give the uniform weighting") {
    Eigen::VectorXd eq = Eigen::VectorXd::Constant(4, 2.5);
    const auto w = vr_weights(floor_divergences(eq), {10, 10, 10, 10});
    for (int j = 0; j < 4; ++j) CHECK(w.lambda(j) == Approx(1.0 / 40.0));
  }
  SECTION("a floored task absorbs nearly all weight") {
    Eigen::VectorXd divs2{{-0.5, 1e9, 1e9}};
    const auto fl = floor_divergences(divs2);
    CHECK(fl.div_hat(0) == Approx(1e-6 * 1e9));
    const auto w = vr_weights(fl, {5, 5, 5});
    w.validate({5, 5, 5});
    CHECK(w.lambda(0) * 5.0 > 0.99);
  }
}

TEST_CASE("analytic variance matches the worked example") {
  Eigen::VectorXd divs{{252.81, 4.2711111111111113}};
  const std::vector<Eigen::Index> ns{1, 1};

  CHECK(analytic_variance(uniform_weights(ns), divs, ns) == Approx(64.27).margin(1e-2));

  Eigen::VectorXd drop{{0.0, 1.0}};
  CHECK(analytic_variance(custom_weights(drop, ns), divs, ns) == Approx(4.27).margin(1e-2));

  const auto star = vr_weights(floor_divergences(divs), ns);
  const double var_vr = analytic_variance(star, divs, ns);
  CHECK(var_vr == Approx(4.21).margin(0.02));
  const double closed = 1.0 / (1.0 / divs(0) + 1.0 / divs(1));
  CHECK(var_vr == Approx(closed).margin(1e-9));
}

TEST_CASE("variance optimality over random weightings") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(0.01, 10.0);
  std::uniform_int_distribution<int> ksize(1, 5);
  std::uniform_int_distribution<Eigen::Index> nsize(1, 200);

  for (int inst = 0; inst < 20; ++inst) {
    const int k = ksize(rng);
    Eigen::VectorXd divs(k);
    std::vector<Eigen::Index> ns;
    for (int j = 0; j < k; ++j) {
      divs(j) = unif(rng);
      ns.push_back(nsize(rng));
    }
    const auto star = vr_weights(floor_divergences(divs), ns);
    const double best = analytic_variance(star, divs, ns);
    const double closed_form = [&] {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += static_cast<double>(ns[j]) / divs(j);
      return 1.0 / acc;
    }();
    REQUIRE(best == Approx(closed_form).margin(1e-9));

    for (int rep = 0; rep < 1000; ++rep) {
      Eigen::VectorXd lam(k);
      double norm = 0.0;
      for (int j = 0; j < k; ++j) {
        lam(j) = unif(rng);
        norm += lam(j) * static_cast<double>(ns[j]);
      }
      lam /= norm;
      const auto w = custom_weights(lam, ns);
      REQUIRE(analytic_variance(w, divs, ns) >= best - 1e-12);
    }
  }
}

TEST_CASE("unbiasedness over resampled worlds, uniform and vr weights") {
  // Monte-Carlo mean of the estimator over many resampled datasets must
  // match the exact target objective within 3 standard errors.
  const two_outcome_world world;
  const double truth = world.f_target();  // 8.2
  Eigen::VectorXd divs(2);
  divs << population_divergence(world.losses, world.p_s1, world.p_target),
      population_divergence(world.losses, world.p_s2, world.p_target);
  const std::vector<Eigen::Index> ns{1, 1};
  const auto star = vr_weights(floor_divergences(divs), ns);
  const auto uni = uniform_weights(ns);

  std::mt19937_64 rng(2026);
  std::bernoulli_distribution s1_first(world.p_s1(0));
  std::bernoulli_distribution s2_first(world.p_s2(0));

  const int reps = 100000;
  std::vector<double> est_uni(reps), est_vr(reps);
  for (int r = 0; r < reps; ++r) {
    const int o1 = s1_first(rng) ? 0 : 1;
    const int o2 = s2_first(rng) ? 0 : 1;
    weighted_loss_table table;
    table.tasks.push_back(
        {Eigen::VectorXd{{world.losses(o1)}}, Eigen::VectorXd{{world.ratio_s1(o1)}}});
    table.tasks.push_back(
        {Eigen::VectorXd{{world.losses(o2)}}, Eigen::VectorXd{{world.ratio_s2(o2)}}});
    est_uni[static_cast<std::size_t>(r)] = lambda_unbiased_estimate(table, uni);
    est_vr[static_cast<std::size_t>(r)] = lambda_unbiased_estimate(table, star);
  }

  const double mean_uni = mean(est_uni);
  const double mean_vr = mean(est_vr);
  const double se_uni = standard_error(est_uni);
  const double se_vr = standard_error(est_vr);
  CHECK(std::abs(mean_uni - truth) <= 3.0 * se_uni);
  CHECK(std::abs(mean_vr - truth) <= 3.0 * se_vr);

  // Monte-Carlo variances should track the analytic values and ordering.
  auto sample_var = [](const std::vector<double>& xs) {
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
  };
  const double var_uni = sample_var(est_uni);
  const double var_vr = sample_var(est_vr);
  CHECK(var_uni == Approx(64.27).epsilon(0.10));
  CHECK(var_vr == Approx(4.20).epsilon(0.10));
  CHECK(var_vr < var_uni);
}

TEST_CASE("divergence flooring") {
  Eigen::VectorXd raw{{-2.0, 0.0, 3.0}};
  const auto fl = floor_divergences(raw);
  CHECK(fl.floor == Approx(3e-6));
  CHECK(fl.div_hat(0) == Approx(3e-6));
  CHECK(fl.div_hat(1) == Approx(3e-6));
  CHECK(fl.div_hat(2) == Approx(3.0));
  CHECK_FALSE(fl.all_at_floor());
  CHECK(fl.raw(0) == Approx(-2.0));

  Eigen::VectorXd all_neg{{-1.0, -0.5}};
  const auto fl2 = floor_divergences(all_neg);
  CHECK(fl2.floor == Approx(1e-6));
  CHECK(fl2.all_at_floor());
}

TEST_CASE("regret bound diagnostic") {
  CHECK(regret_bound(0.0, 0.0, 0.0, 0.0, 0.5) == Approx(0.0));
  CHECK(regret_bound(0.05, 0.05, 0.05, 0.0, 0.1) == Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(regret_bound(1.0, 1.0, 1.0, 0.0, 0.0), input_error);
  CHECK_THROWS_AS(regret_bound(1.0, 1.0, 1.0, 0.0, 1.0), input_error);
  CHECK_THROWS_AS(regret_bound(-1.0, 1.0, 1.0, 0.0, 0.5), input_error);

  // Monotone nonincreasing in delta.
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.01, 0.05, 0.1, 0.5, 0.9}) {
    const double b = regret_bound(0.3, 0.2, 0.1, 0.7, delta);
    CHECK(b <= prev);
    prev = b;
  }
}
