// Copyright 2026 The byzagg authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line front end:
//   byzagg run      -- train with a config file, write per-epoch CSV metrics
//   byzagg sweep    -- repeat `run` across values of one config key
//   byzagg report   -- summarize metric CSVs (mean/std of peak accuracy)
//   byzagg selftest -- execute the full acceptance suite

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "byzagg/acceptance.hpp"
#include "byzagg/config.hpp"
#include "byzagg/harness.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

json summary_json(const byzagg::ExperimentConfig& cfg, const byzagg::ExperimentResult& result,
                  const std::string& csv_path) {
  json j;
  j["output"] = csv_path;
  j["rows"] = result.rows.size();
  j["rule"] = byzagg::rule_name(cfg.protocol.rule.rule);
  j["nnm"] = cfg.protocol.rule.nnm;
  j["attack"] = byzagg::attack_name(cfg.attack.kind);
  j["optimizer"] = byzagg::optimizer_name(cfg.optimizer);
  j["protocol"] = cfg.use_protocol;
  j["n"] = cfg.protocol.n;
  j["b"] = cfg.protocol.b;
  j["z"] = cfg.protocol.z;
  j["mean_max_acc"] = result.mean_max_acc;
  j["std_max_acc"] = result.std_max_acc;
  json seeds = json::array();
  json failed = json::array();
  for (const auto& o : result.outcomes) {
    json s;
    s["seed"] = o.seed;
    s["max_acc"] = o.max_acc;
    seeds.push_back(s);
    if (o.failed) {
      json f;
      f["seed"] = o.seed;
      f["reason"] = o.fail_reason;
      failed.push_back(f);
    }
  }
  j["seeds"] = seeds;
  j["failed_seeds"] = failed;
  return j;
}

int write_rows(const std::string& path, const std::vector<byzagg::MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    return 1;
  }
  byzagg::write_csv(out, rows);
  return out ? 0 : 1;
}

int cmd_run(const std::string& config_path, std::string output, bool quiet) {
  byzagg::ExperimentConfig cfg = byzagg::load_config(config_path);
  if (!output.empty()) cfg.output = output;
  cfg.validate();
  const byzagg::ExperimentResult result = byzagg::run_experiment(cfg);
  if (const int rc = write_rows(cfg.output, result.rows); rc != 0) return rc;
  if (!quiet) std::cout << summary_json(cfg, result, cfg.output).dump(2) << "\n";
  bool any_failed = false;
  for (const auto& o : result.outcomes) any_failed = any_failed || o.failed;
  return any_failed ? 2 : 0;
}

// Values may repeat a key (e.g. --param attack --values alie foe sf lf).
int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<std::string>& values, const std::string& output_dir) {
  int rc = 0;
  json all = json::array();
  for (const std::string& value : values) {
    byzagg::ExperimentConfig cfg = byzagg::load_config(config_path);
    byzagg::apply_config_key(cfg, param, value);
    std::string tag = value;
    for (char& c : tag) {
      if (c == '/' || c == ' ' || c == ',') c = '_';
    }
    cfg.output = output_dir + "/" + param + "-" + tag + ".csv";
    cfg.validate();
    const byzagg::ExperimentResult result = byzagg::run_experiment(cfg);
    if (const int wrc = write_rows(cfg.output, result.rows); wrc != 0) return wrc;
    json j = summary_json(cfg, result, cfg.output);
    j[param] = value;
    all.push_back(j);
    for (const auto& o : result.outcomes) {
      if (o.failed) rc = 2;
    }
  }
  std::cout << all.dump(2) << "\n";
  return rc;
}

struct CsvSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> max_acc;
};

CsvSummary summarize_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("seed,epoch,test_acc", 0) != 0) {
    throw byzagg::ParseError(name + ": not a byzagg metrics CSV (bad header)");
  }
  CsvSummary out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) {
      throw byzagg::ParseError(name + ":" + std::to_string(line_no) + ": short row");
    }
    const std::uint64_t seed = std::stoull(cells[0]);
    const double acc = std::stod(cells[2]);
    std::size_t k = 0;
    while (k < out.seeds.size() && out.seeds[k] != seed) ++k;
    if (k == out.seeds.size()) {
      out.seeds.push_back(seed);
      out.max_acc.push_back(acc);
    } else {
      out.max_acc[k] = std::max(out.max_acc[k], acc);
    }
  }
  return out;
}

int cmd_report(const std::vector<std::string>& files) {
  json all = json::array();
  for (const std::string& path : files) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot read " << path << "\n";
      return 1;
    }
    const CsvSummary s = summarize_csv(in, path);
    if (s.seeds.empty()) {
      std::cerr << "error: " << path << " has no data rows\n";
      return 1;
    }
    json j;
    j["file"] = path;
    j["seeds"] = s.seeds.size();
    j["mean_max_acc"] = byzagg::mean(s.max_acc);
    j["std_max_acc"] = s.max_acc.size() > 1 ? byzagg::sample_stddev(s.max_acc) : 0.0;
    all.push_back(j);
  }
  std::cout << all.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"private Byzantine-resilient aggregation toolkit"};
  app.require_subcommand(1);

  std::string run_config, run_output;
  bool run_quiet = false;
  CLI::App* run = app.add_subcommand("run", "train with a config file and emit CSV metrics");
  run->add_option("--config", run_config, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--output", run_output, "override the config's CSV output path");
  run->add_flag("--quiet", run_quiet, "suppress the JSON summary");

  std::string sweep_config, sweep_param, sweep_dir = ".";
  std::vector<std::string> sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "run once per value of one config key");
  sweep->add_option("--config", sweep_config, "base experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--param", sweep_param, "config key to vary (config-file vocabulary)")
      ->required();
  sweep->add_option("--values", sweep_values, "values to apply")->required()->expected(-1);
  sweep->add_option("--output-dir", sweep_dir, "directory for per-value CSVs");

  std::vector<std::string> report_files;
  CLI::App* report = app.add_subcommand("report", "summarize metric CSVs");
  report->add_option("--csv", report_files, "metric CSV files")->required()->expected(-1);

  std::string selftest_csv = "selftest.csv";
  CLI::App* selftest = app.add_subcommand("selftest", "run the acceptance suite");
  selftest->add_option("--csv", selftest_csv, "where to write the canonical run's CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_config, run_output, run_quiet);
    if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_param, sweep_values, sweep_dir);
    if (report->parsed()) return cmd_report(report_files);
    if (selftest->parsed()) {
      return byzagg::acceptance::run_all(std::cout, selftest_csv) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
