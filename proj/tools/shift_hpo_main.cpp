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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <variant>
#include <vector>

#include "shifthpo/json_io.hpp"
#include "shifthpo/shifthpo.hpp"

namespace {

using shifthpo::json;

std::string fmt(double x) { return json(x).dump(); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw shifthpo::error("cannot write " + path.string());
  out << text;
}

std::filesystem::path csv_sibling(const std::filesystem::path& json_path) {
  std::filesystem::path p = json_path;
  p.replace_extension(".csv");
  return p;
}

// One row per (estimator, c, seed); c and regret may be absent for CSV runs.
void append_flat_rows(std::string& csv, const std::string& estimator, const std::string& c,
                      const shifthpo::run_report& report) {
  for (const auto& run : report.runs) {
    csv += estimator;
    csv += ',';
    csv += c;
    csv += ',';
    csv += std::to_string(run.seed);
    csv += ',';
    if (run.regret) csv += fmt(*run.regret);
    csv += ',';
    csv += fmt(run.final_score);
    csv += '\n';
  }
}

int cmd_toy(const std::vector<double>& c_values, double c_target, int k, int n,
            const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& estimators,
            int budget, int n_init, double beta, const std::string& out_path) {
  json cells = json::array();
  std::string flat = "estimator,c,seed,regret,final_score\n";

  for (const auto& name : estimators) {
    const auto kind = shifthpo::estimator_kind_from_string(name);
    for (double c : c_values) {
      shifthpo::run_config cfg;
      cfg.estimator = kind;
      cfg.learner = shifthpo::constant_spec{};
      cfg.loss = shifthpo::loss_kind::squared_half;
      cfg.space.dims = {{"theta", -8.0, 8.0, shifthpo::scale_kind::linear}};
      cfg.budget = budget;
      cfg.n_init = n_init;
      cfg.beta = beta;
      cfg.seeds = seeds;
      shifthpo::toy_source toy;
      toy.cfg.k = k;
      toy.cfg.n = n;
      toy.cfg.c_source.assign(static_cast<std::size_t>(k), c);
      toy.cfg.c_target = c_target;
      cfg.data = toy;

      shifthpo::log_info("toy sweep: estimator=", name, " c=", c);
      const shifthpo::run_report report = shifthpo::run_mscs(cfg);
      json cell = shifthpo::report_to_json(report);
      cell["c"] = c;
      cells.push_back(std::move(cell));
      append_flat_rows(flat, name, fmt(c), report);
    }
  }

  json doc;
  doc["schema"] = "shift-hpo-toy-sweep-v1";
  doc["c_target"] = c_target;
  doc["k"] = k;
  doc["n"] = n;
  doc["budget"] = budget;
  doc["n_init"] = n_init;
  doc["beta"] = beta;
  doc["seeds"] = seeds;
  doc["cells"] = std::move(cells);

  write_text(out_path, doc.dump(2) + "\n");
  write_text(csv_sibling(out_path), flat);
  std::cout << "wrote " << out_path << " and " << csv_sibling(out_path).string() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path) {
  std::ifstream in(config_path);
  if (!in) throw shifthpo::error("cannot open config " + config_path);
  json cj = json::parse(in);
  const shifthpo::run_config cfg = shifthpo::run_config_from_json(cj);
  const shifthpo::run_report report = shifthpo::run_mscs(cfg);

  json doc = shifthpo::report_to_json(report);
  write_text(out_path, doc.dump(2) + "\n");

  std::string flat = "estimator,c,seed,regret,final_score\n";
  append_flat_rows(flat, report.estimator, "", report);
  write_text(csv_sibling(out_path), flat);
  std::cout << "wrote " << out_path << " and " << csv_sibling(out_path).string() << "\n";
  return 0;
}

int cmd_density_ratio(const std::string& target_path, const std::string& source_path,
                      const std::string& label_column, int num_centers, double cap,
                      int cv_folds, std::uint64_t seed, const std::string& out_path) {
  const std::optional<std::string> label =
      label_column.empty() ? std::nullopt : std::optional<std::string>(label_column);

  auto features_of = [&](const std::string& path) {
    const auto loaded = shifthpo::load_csv(path, label);
    if (const auto* lab = std::get_if<shifthpo::labeled_dataset>(&loaded)) {
      return lab->features;
    }
    return std::get<shifthpo::unlabeled_dataset>(loaded).features;
  };

  shifthpo::unlabeled_dataset target{features_of(target_path)};
  const Eigen::MatrixXd source = features_of(source_path);

  shifthpo::ulsif_config cfg;
  cfg.num_centers = num_centers;
  cfg.cap = cap;
  cfg.cv_folds = cv_folds;
  cfg.seed = seed;
  const auto model = shifthpo::fit_ulsif(target, source, cfg);

  write_text(out_path, shifthpo::ratio_model_to_json(model).dump(2) + "\n");
  std::cout << "wrote " << out_path << " (bandwidth " << fmt(model.bandwidth) << ", ridge "
            << fmt(model.ridge) << ", mean ratio over source "
            << fmt(model.evaluate_rows(source).mean()) << ")\n";
  return 0;
}

int cmd_verify_table1() {
  const auto report = shifthpo::verify_table1();
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": expected "
              << fmt(c.expected) << ", got " << fmt(c.actual) << " (tolerance "
              << fmt(c.tolerance) << ")\n";
  }
  std::cout << (report.all_pass() ? "all checks passed" : "CHECKS FAILED") << "\n";
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperparameter optimization under multi-source covariate shift"};
  app.require_subcommand(1);

  // toy
  auto* toy = app.add_subcommand("toy", "Run the synthetic sweep over source prior widths");
  std::vector<double> c_values{1.0, 2.0, 3.0, 4.0, 5.0};
  double c_target = 1.0;
  int k = 2, n = 1000, budget = 50, n_init = 5;
  double beta = 2.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> estimators{"oracle", "naive", "unbiased", "variance_reduced"};
  std::string toy_out = "toy_report.json";
  toy->add_option("--c-values", c_values, "Source prior half-widths to sweep");
  toy->add_option("--c-target", c_target, "Target prior half-width");
  toy->add_option("--k", k, "Number of source tasks");
  toy->add_option("--n", n, "Samples per task");
  toy->add_option("--seeds", seeds, "Seed list (default 0..29)");
  toy->add_option("--estimators", estimators, "Estimators to compare");
  toy->add_option("--budget", budget, "Evaluations per run");
  toy->add_option("--n-init", n_init, "Random initial points");
  toy->add_option("--beta", beta, "LCB confidence parameter");
  toy->add_option("--out", toy_out, "Output JSON path (CSV written alongside)");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string config_path, run_out = "report.json";
  run->add_option("--config", config_path, "Config JSON path")->required();
  run->add_option("--out", run_out, "Output JSON path (CSV written alongside)");

  // density-ratio
  auto* dr = app.add_subcommand("density-ratio", "Fit a density-ratio model and dump it");
  std::string dr_target, dr_source, dr_label, dr_out = "ratio_model.json";
  int dr_centers = 100, dr_folds = 5;
  double dr_cap = 50.0;
  std::uint64_t dr_seed = 0;
  dr->add_option("--target", dr_target, "Target CSV (features)")->required();
  dr->add_option("--source", dr_source, "Source CSV (features)")->required();
  dr->add_option("--label-column", dr_label, "Column to drop from both files, if present");
  dr->add_option("--num-centers", dr_centers, "Kernel centers");
  dr->add_option("--cap", dr_cap, "Ratio clipping cap");
  dr->add_option("--cv-folds", dr_folds, "Cross-validation folds");
  dr->add_option("--seed", dr_seed, "Seed");
  dr->add_option("--out", dr_out, "Output model JSON path");

  // verify-table1
  auto* vt = app.add_subcommand("verify-table1", "Recompute the worked example and check it");

  CLI11_PARSE(app, argc, argv);

  try {
    if (toy->parsed()) {
      if (seeds.empty()) {
        for (std::uint64_t s = 0; s < 30; ++s) seeds.push_back(s);
      }
      return cmd_toy(c_values, c_target, k, n, seeds, estimators, budget, n_init, beta, toy_out);
    }
    if (run->parsed()) return cmd_run(config_path, run_out);
    if (dr->parsed()) {
      return cmd_density_ratio(dr_target, dr_source, dr_label, dr_centers, dr_cap, dr_folds,
                               dr_seed, dr_out);
    }
    if (vt->parsed()) return cmd_verify_table1();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
