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

#ifndef SHIFTHPO_JSON_IO_HPP
#define SHIFTHPO_JSON_IO_HPP

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shifthpo/density_ratio.hpp"
#include "shifthpo/errors.hpp"
#include "shifthpo/harness.hpp"

namespace shifthpo {

using json = nlohmann::json;

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& context) {
  if (!j.is_object()) throw config_error(context + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      throw config_error(context + ": unknown key '" + item.key() + "'");
    }
  }
}

inline json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vec_from_json(const json& a, const std::string& context) {
  if (!a.is_array()) throw config_error(context + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vec_to_json(m.row(i).transpose()));
  }
  return rows;
}

inline Eigen::MatrixXd mat_from_json(const json& a, const std::string& context) {
  if (!a.is_array() || a.empty()) throw config_error(context + ": expected a non-empty array");
  const auto cols = static_cast<Eigen::Index>(a[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.size()), cols);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (static_cast<Eigen::Index>(a[i].size()) != cols) {
      throw config_error(context + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), c) = a[i][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace detail

// --- enum names ------------------------------------------------------------

inline std::string to_string(loss_kind k) {
  switch (k) {
    case loss_kind::squared_half: return "squared_half";
    case loss_kind::squared: return "squared";
    case loss_kind::absolute_error: return "absolute_error";
    case loss_kind::binary_cross_entropy: return "binary_cross_entropy";
    case loss_kind::zero_one: return "zero_one";
  }
  return "?";
}

inline loss_kind loss_kind_from_string(const std::string& s) {
  if (s == "squared_half") return loss_kind::squared_half;
  if (s == "squared") return loss_kind::squared;
  if (s == "absolute_error") return loss_kind::absolute_error;
  if (s == "binary_cross_entropy") return loss_kind::binary_cross_entropy;
  if (s == "zero_one") return loss_kind::zero_one;
  throw config_error("unknown loss kind '" + s + "'");
}

inline estimator_kind estimator_kind_from_string(const std::string& s) {
  if (s == "oracle") return estimator_kind::oracle;
  if (s == "naive") return estimator_kind::naive;
  if (s == "unbiased") return estimator_kind::unbiased;
  if (s == "variance_reduced") return estimator_kind::variance_reduced;
  throw config_error("unknown estimator kind '" + s + "'");
}

// --- density ratio model ---------------------------------------------------

inline json ratio_model_to_json(const density_ratio_model& m) {
  json j;
  j["centers"] = detail::mat_to_json(m.centers);
  j["bandwidth"] = m.bandwidth;
  j["ridge"] = m.ridge;
  j["alpha"] = detail::vec_to_json(m.alpha);
  j["cap"] = m.cap;
  return j;
}

inline density_ratio_model ratio_model_from_json(const json& j) {
  detail::require_keys(j, {"centers", "bandwidth", "ridge", "alpha", "cap"},
                       "density_ratio_model");
  density_ratio_model m;
  m.centers = detail::mat_from_json(j.at("centers"), "density_ratio_model.centers");
  m.bandwidth = j.at("bandwidth").get<double>();
  m.ridge = j.at("ridge").get<double>();
  m.alpha = detail::vec_from_json(j.at("alpha"), "density_ratio_model.alpha");
  m.cap = j.at("cap").get<double>();
  if (m.alpha.size() != m.centers.rows()) {
    throw config_error("density_ratio_model: alpha/centers size mismatch");
  }
  return m;
}

// --- run configuration (strict: unknown keys rejected) ----------------------

inline search_space space_from_json(const json& j) {
  if (!j.is_array()) throw config_error("space: expected an array of dimensions");
  search_space space;
  for (const auto& dj : j) {
    detail::require_keys(dj, {"name", "low", "high", "scale"}, "space dimension");
    space_dim d;
    d.name = dj.at("name").get<std::string>();
    d.low = dj.at("low").get<double>();
    d.high = dj.at("high").get<double>();
    const auto scale = dj.value("scale", std::string("linear"));
    if (scale == "linear") {
      d.scale = scale_kind::linear;
    } else if (scale == "log") {
      d.scale = scale_kind::log_scale;
    } else {
      throw config_error("space dimension '" + d.name + "': scale must be linear or log");
    }
    space.dims.push_back(std::move(d));
  }
  space.validate();
  return space;
}

inline json space_to_json(const search_space& space) {
  json a = json::array();
  for (const auto& d : space.dims) {
    json dj;
    dj["name"] = d.name;
    dj["low"] = d.low;
    dj["high"] = d.high;
    dj["scale"] = d.scale == scale_kind::log_scale ? "log" : "linear";
    a.push_back(std::move(dj));
  }
  return a;
}

inline run_config run_config_from_json(const json& j) {
  detail::require_keys(j,
                       {"estimator", "learner", "loss", "space", "budget", "n_init", "beta",
                        "split", "ulsif", "seeds", "data"},
                       "run_config");
  run_config cfg;
  cfg.estimator = estimator_kind_from_string(j.at("estimator").get<std::string>());

  const json& lj = j.at("learner");
  detail::require_keys(lj, {"kind"}, "run_config.learner");
  const auto lk = lj.at("kind").get<std::string>();
  if (lk == "constant") {
    cfg.learner = constant_spec{};
  } else if (lk == "weighted_ridge") {
    cfg.learner = weighted_ridge_spec{};
  } else {
    throw config_error("run_config.learner.kind: unknown learner '" + lk + "'");
  }

  cfg.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  cfg.space = space_from_json(j.at("space"));
  if (j.contains("budget")) cfg.budget = j.at("budget").get<int>();
  if (j.contains("n_init")) cfg.n_init = j.at("n_init").get<int>();
  if (j.contains("beta")) cfg.beta = j.at("beta").get<double>();

  if (j.contains("split")) {
    const json& sj = j.at("split");
    detail::require_keys(sj, {"density_frac", "train_frac_of_rest"}, "run_config.split");
    if (sj.contains("density_frac")) cfg.density_frac = sj.at("density_frac").get<double>();
    if (sj.contains("train_frac_of_rest")) {
      cfg.train_frac_of_rest = sj.at("train_frac_of_rest").get<double>();
    }
  }

  if (j.contains("ulsif")) {
    const json& uj = j.at("ulsif");
    detail::require_keys(
        uj, {"num_centers", "bandwidth_grid", "ridge_grid", "cap", "cv_folds", "seed"},
        "run_config.ulsif");
    if (uj.contains("num_centers")) cfg.ulsif.num_centers = uj.at("num_centers").get<int>();
    if (uj.contains("bandwidth_grid")) {
      cfg.ulsif.bandwidth_grid = uj.at("bandwidth_grid").get<std::vector<double>>();
    }
    if (uj.contains("ridge_grid")) {
      cfg.ulsif.ridge_grid = uj.at("ridge_grid").get<std::vector<double>>();
    }
    if (uj.contains("cap")) cfg.ulsif.cap = uj.at("cap").get<double>();
    if (uj.contains("cv_folds")) cfg.ulsif.cv_folds = uj.at("cv_folds").get<int>();
    if (uj.contains("seed")) cfg.ulsif.seed = uj.at("seed").get<std::uint64_t>();
  }

  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();

  const json& dj = j.at("data");
  detail::require_keys(dj,
                       {"type", "k", "n", "c_source", "c_target", "slope", "intercept",
                        "noise_sd", "seed", "target_path", "source_paths", "label_column"},
                       "run_config.data");
  const auto type = dj.at("type").get<std::string>();
  if (type == "toy") {
    toy_source toy;
    if (dj.contains("k")) toy.cfg.k = dj.at("k").get<int>();
    if (dj.contains("n")) toy.cfg.n = dj.at("n").get<int>();
    if (dj.contains("c_source")) {
      toy.cfg.c_source = dj.at("c_source").get<std::vector<double>>();
    }
    if (dj.contains("c_target")) toy.cfg.c_target = dj.at("c_target").get<double>();
    if (dj.contains("slope")) toy.cfg.slope = dj.at("slope").get<double>();
    if (dj.contains("intercept")) toy.cfg.intercept = dj.at("intercept").get<double>();
    if (dj.contains("noise_sd")) toy.cfg.noise_sd = dj.at("noise_sd").get<double>();
    if (dj.contains("seed")) toy.cfg.seed = dj.at("seed").get<std::uint64_t>();
    cfg.data = std::move(toy);
  } else if (type == "csv") {
    csv_source csv;
    csv.target_path = dj.at("target_path").get<std::string>();
    csv.source_paths = dj.at("source_paths").get<std::vector<std::string>>();
    csv.label_column = dj.at("label_column").get<std::string>();
    cfg.data = std::move(csv);
  } else {
    throw config_error("run_config.data.type: must be 'toy' or 'csv'");
  }

  cfg.validate();
  return cfg;
}

// --- reports -----------------------------------------------------------------

inline json trial_to_json(const bo_trial& t) {
  json j;
  j["theta"] = detail::vec_to_json(t.theta.values);
  j["score"] = t.score;
  j["failed"] = t.failed;
  if (t.diagnostics) {
    json d;
    d["lambda"] = detail::vec_to_json(t.diagnostics->lambda);
    d["div_raw"] = detail::vec_to_json(t.diagnostics->div_raw);
    d["div"] = detail::vec_to_json(t.diagnostics->div_floored);
    d["clipped_ratio_fraction"] = t.diagnostics->clipped_ratio_fraction;
    j["diagnostics"] = std::move(d);
  } else {
    j["diagnostics"] = nullptr;
  }
  return j;
}

// Wall-clock times stay out of reports: repeated invocations with the same
// seeds must serialize to identical bytes.
inline json seed_run_to_json(const seed_run& r) {
  json j;
  j["seed"] = r.seed;
  j["incumbent_index"] = r.history.incumbent_index;
  j["incumbent_theta"] = detail::vec_to_json(r.history.incumbent_theta().values);
  j["final_score"] = r.final_score;
  j["regret"] = r.regret ? json(*r.regret) : json(nullptr);
  json trials = json::array();
  for (const auto& t : r.history.trials) trials.push_back(trial_to_json(t));
  j["trials"] = std::move(trials);
  return j;
}

inline json report_to_json(const run_report& r) {
  json j;
  j["schema"] = "shift-hpo-report-v1";
  j["estimator"] = r.estimator;
  json runs = json::array();
  for (const auto& run : r.runs) runs.push_back(seed_run_to_json(run));
  j["runs"] = std::move(runs);
  json agg;
  agg["mean_final_score"] = r.mean_final_score;
  agg["se_final_score"] = r.se_final_score;
  agg["mean_regret"] = r.mean_regret ? json(*r.mean_regret) : json(nullptr);
  agg["se_regret"] = r.se_regret ? json(*r.se_regret) : json(nullptr);
  j["aggregate"] = std::move(agg);
  return j;
}

inline json table1_report_to_json(const table1_report& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json cj;
    cj["name"] = c.name;
    cj["expected"] = c.expected;
    cj["actual"] = c.actual;
    cj["tolerance"] = c.tolerance;
    cj["pass"] = c.pass;
    checks.push_back(std::move(cj));
  }
  json j;
  j["schema"] = "shift-hpo-table1-v1";
  j["checks"] = std::move(checks);
  j["all_pass"] = r.all_pass();
  return j;
}

}  // namespace shifthpo

#endif  // SHIFTHPO_JSON_IO_HPP
