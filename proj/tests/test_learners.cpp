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

#include "shifthpo/learners.hpp"

using namespace shifthpo;
using Catch::Approx;

namespace {

labeled_dataset linear_data(Eigen::Index n, double slope, double intercept, double noise_sd,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  labeled_dataset ds;
  ds.features.resize(n, 1);
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.features(i, 0) = normal(rng);
    ds.labels(i) = slope * ds.features(i, 0) + intercept + noise_sd * normal(rng);
  }
  return ds;
}

}  // namespace

TEST_CASE("pointwise losses") {
  CHECK(loss(loss_kind::squared_half, 3.0, 1.0) == Approx(2.0));
  CHECK(loss(loss_kind::squared, 3.0, 1.0) == Approx(4.0));
  CHECK(loss(loss_kind::absolute_error, 3.0, 1.0) == Approx(2.0));
  CHECK(loss(loss_kind::zero_one, 0.7, 1.0) == Approx(0.0));
  CHECK(loss(loss_kind::zero_one, 0.7, 0.0) == Approx(1.0));
  CHECK(loss(loss_kind::zero_one, 0.2, 0.0) == Approx(0.0));
  CHECK(loss(loss_kind::binary_cross_entropy, 0.5, 1.0) == Approx(std::log(2.0)));
  CHECK_THROWS_AS(loss(loss_kind::binary_cross_entropy, 0.5, 0.3), input_error);

  SECTION("bce clipping keeps the loss finite") {
    CHECK(std::isfinite(loss(loss_kind::binary_cross_entropy, 0.0, 1.0)));
    CHECK(std::isfinite(loss(loss_kind::binary_cross_entropy, 1.0, 0.0)));
  }
  SECTION("losses are nonnegative and zero at the label") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int rep = 0; rep < 200; ++rep) {
      const double p = u(rng), y = u(rng);
      for (auto kind : {loss_kind::squared_half, loss_kind::squared, loss_kind::absolute_error}) {
        CHECK(loss(kind, p, y) >= 0.0);
        CHECK(loss(kind, y, y) == Approx(0.0).margin(1e-15));
      }
    }
  }
}

TEST_CASE("constant predictor ignores the data") {
  labeled_dataset ds = linear_data(10, 2.0, 0.0, 0.0, 1);
  std::vector<weighted_fold> folds{{&ds, Eigen::VectorXd::Ones(10)}};
  const auto model =
      train_weighted(constant_spec{}, Eigen::VectorXd{{0.3}}, folds, loss_kind::squared_half);
  CHECK(predict(model, Eigen::VectorXd{{123.0}}) == Approx(0.3));
  CHECK(predict(model, Eigen::VectorXd{{-5.0}}) == Approx(0.3));
}

TEST_CASE("ridge recovers exactly linear data as reg -> 0") {
  labeled_dataset ds = linear_data(50, 2.0, 0.0, 0.0, 2);
  ds.labels = 2.0 * ds.features.col(0);  // exact, no intercept
  std::vector<weighted_fold> folds{{&ds, Eigen::VectorXd::Ones(50)}};
  const auto model = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{1e-10}}, folds,
                                    loss_kind::squared_half);
  const auto& r = std::get<ridge_model>(model);
  CHECK(r.beta(0) == Approx(2.0).margin(1e-6));
  CHECK(r.intercept == Approx(0.0).margin(1e-6));
  CHECK(predict(model, Eigen::VectorXd{{3.0}}) == Approx(6.0).margin(1e-5));
}

TEST_CASE("zero-weight rows do not influence the ridge fit") {
  labeled_dataset full = linear_data(60, 1.5, -0.5, 0.3, 3);
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(60);
  for (Eigen::Index i = 30; i < 60; ++i) weights(i) = 0.0;

  std::vector<weighted_fold> folds{{&full, weights}};
  const auto masked = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.01}}, folds,
                                     loss_kind::squared_half);

  labeled_dataset surviving;
  surviving.features = full.features.topRows(30);
  surviving.labels = full.labels.head(30);
  std::vector<weighted_fold> survivor_folds{{&surviving, Eigen::VectorXd::Ones(30)}};
  const auto refit = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.01}},
                                    survivor_folds, loss_kind::squared_half);

  const auto& a = std::get<ridge_model>(masked);
  const auto& b = std::get<ridge_model>(refit);
  CHECK(a.beta(0) == Approx(b.beta(0)).margin(1e-12));
  CHECK(a.intercept == Approx(b.intercept).margin(1e-12));
}

TEST_CASE("ridge training errors") {
  labeled_dataset ds = linear_data(5, 1.0, 0.0, 0.1, 4);
  SECTION("all weights zero") {
    std::vector<weighted_fold> folds{{&ds, Eigen::VectorXd::Zero(5)}};
    CHECK_THROWS_AS(train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.1}}, folds,
                                   loss_kind::squared_half),
                    training_error);
  }
  SECTION("negative weights") {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(5);
    w(2) = -0.5;
    std::vector<weighted_fold> folds{{&ds, w}};
    CHECK_THROWS_AS(train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.1}}, folds,
                                   loss_kind::squared_half),
                    input_error);
  }
  SECTION("non-positive regularizer") {
    std::vector<weighted_fold> folds{{&ds, Eigen::VectorXd::Ones(5)}};
    CHECK_THROWS_AS(train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.0}}, folds,
                                   loss_kind::squared_half),
                    input_error);
  }
}

TEST_CASE("ridge prediction dimension mismatch") {
  labeled_dataset ds = linear_data(20, 1.0, 0.0, 0.1, 6);
  std::vector<weighted_fold> folds{{&ds, Eigen::VectorXd::Ones(20)}};
  const auto model = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.1}}, folds,
                                    loss_kind::squared_half);
  CHECK_THROWS_AS(predict(model, Eigen::VectorXd{{1.0, 2.0}}), input_error);
}

TEST_CASE("ridge weight-scale convention") {
  // Fixed reg is deliberately not co-scaled with the weights; training is a
  // pure function of (data, weights, reg).
  labeled_dataset ds = linear_data(40, 0.8, 0.2, 0.5, 7);
  std::vector<weighted_fold> folds{{&ds, Eigen::VectorXd::Ones(40)}};
  const auto a = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.5}}, folds,
                                loss_kind::squared_half);
  const auto b = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{0.5}}, folds,
                                loss_kind::squared_half);
  CHECK(std::get<ridge_model>(a).beta == std::get<ridge_model>(b).beta);

  // Co-scaling weights and reg by the same factor leaves the model unchanged
  // (homogeneity of the normal equations).
  std::vector<weighted_fold> scaled{{&ds, 3.0 * Eigen::VectorXd::Ones(40)}};
  const auto c = train_weighted(weighted_ridge_spec{}, Eigen::VectorXd{{1.5}}, scaled,
                                loss_kind::squared_half);
  CHECK(std::get<ridge_model>(a).beta(0) == Approx(std::get<ridge_model>(c).beta(0)).margin(1e-12));
  CHECK(std::get<ridge_model>(a).intercept ==
        Approx(std::get<ridge_model>(c).intercept).margin(1e-12));
}

TEST_CASE("constant-learner weighted risk is minimized at the weighted label mean") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  labeled_dataset ds = linear_data(30, 0.7, 0.3, 1.0, 9);
  Eigen::VectorXd w(30);
  for (Eigen::Index i = 0; i < 30; ++i) w(i) = u(rng);

  const double weighted_mean = w.dot(ds.labels) / w.sum();
  auto risk = [&](double theta) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < 30; ++i) {
      acc += w(i) * loss(loss_kind::squared_half, theta, ds.labels(i));
    }
    return acc;
  };
  CHECK(risk(weighted_mean) <= risk(weighted_mean + 0.01));
  CHECK(risk(weighted_mean) <= risk(weighted_mean - 0.01));
  const double eps = 1e-4;
  const double grad = (risk(weighted_mean + eps) - risk(weighted_mean - eps)) / (2.0 * eps);
  CHECK(grad == Approx(0.0).margin(1e-6));
}
