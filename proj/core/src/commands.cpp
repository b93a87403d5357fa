/*
 * Copyright 2026 The fedsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fedsim/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fedsim/checkpoint.hpp"
#include "fedsim/config.hpp"
#include "fedsim/format.hpp"
#include "fedsim/manifest.hpp"
#include "fedsim/metrics_io.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/svg.hpp"

namespace fedsim {

namespace {

namespace fs = std::filesystem;

bool dir_nonempty(const fs::path& dir) {
  return fs::exists(dir) && fs::is_directory(dir) &&
         fs::directory_iterator(dir) != fs::directory_iterator();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct CellResult {
  std::string policy;
  std::uint64_t seed = 0;
  MetricsTable table;
};

double mean_tail(const std::vector<double>& values, std::size_t window) {
  const std::size_t n = std::min(window, values.size());
  double sum = 0.0;
  for (std::size_t i = values.size() - n; i < values.size(); ++i) {
    sum += values[i];
  }
  return sum / static_cast<double>(n);
}

}  // namespace

bool apply_policy_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "fedavg") {
    cfg.selection.policy = PolicyKind::kRandom;
    cfg.aggregation = AggregationMode::kFedAvg;
  } else if (name == "optagg") {
    cfg.selection.policy = PolicyKind::kRandom;
    cfg.aggregation = AggregationMode::kOptimalAggregation;
  } else if (name == "fedpns") {
    cfg.selection.policy = PolicyKind::kFedPns;
    cfg.aggregation = AggregationMode::kOptimalAggregation;
  } else if (name == "bn2") {
    cfg.selection.policy = PolicyKind::kBn2;
    cfg.aggregation = AggregationMode::kFedAvg;
  } else {
    return false;
  }
  return true;
}

int resolve_threads(std::optional<int> flag_value, int config_value) {
  if (flag_value.has_value()) return *flag_value;
  if (const char* env = std::getenv("FEDSIM_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) return parsed;
  }
  return config_value;
}

int cmd_run(const RunOptions& options) {
  ExperimentConfig cfg;
  try {
    cfg = parse_config(options.config_path);
    if (options.seed.has_value()) cfg.master_seed = *options.seed;
    if (options.policy.has_value() && !apply_policy_preset(cfg, *options.policy)) {
      std::cerr << "unknown policy preset '" << *options.policy
                << "' (expected fedavg, optagg, fedpns or bn2)\n";
      return kExitUsage;
    }
    cfg.threads = resolve_threads(options.threads, cfg.threads);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (dir_nonempty(options.out_dir) && !options.force) {
      std::cerr << "output directory " << options.out_dir.string()
                << " is not empty; pass --force to overwrite\n";
      return kExitRuntime;
    }
    fs::create_directories(options.out_dir);

    Experiment experiment(cfg);
    MetricsTable table;
    table.policy = policy_label(cfg);
    table.seed = cfg.master_seed;
    table.num_nodes = cfg.data.num_nodes;
    table.rows = experiment.run_all();

    std::ostringstream csv;
    write_metrics_csv(csv, table);
    write_text_file(options.out_dir / "metrics.csv", csv.str());
    write_manifest(make_manifest(cfg, options.out_dir.string()),
                   options.out_dir / "manifest.json");

    Checkpoint cp;
    cp.config_digest = config_digest(cfg);
    cp.rounds_completed = static_cast<int>(table.rows.size());
    cp.model = experiment.global_model();
    cp.stats = experiment.stats();
    save_checkpoint(options.out_dir / "checkpoint.bin", cp);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_compare(const CompareOptions& options) {
  if (options.policies.size() < 2) {
    std::cerr << "compare needs at least two policies\n";
    return kExitUsage;
  }

  ExperimentConfig base;
  try {
    base = parse_config(options.config_path);
    base.threads = resolve_threads(options.threads, base.threads);
    for (const std::string& policy : options.policies) {
      ExperimentConfig probe = base;
      if (!apply_policy_preset(probe, policy)) {
        std::cerr << "unknown policy preset '" << policy
                  << "' (expected fedavg, optagg, fedpns or bn2)\n";
        return kExitUsage;
      }
      probe.validate();
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (dir_nonempty(options.out_dir) && !options.force) {
      std::cerr << "output directory " << options.out_dir.string()
                << " is not empty; pass --force to overwrite\n";
      return kExitRuntime;
    }
    fs::create_directories(options.out_dir);

    std::vector<std::uint64_t> seeds = options.seeds;
    if (seeds.empty()) seeds.push_back(base.master_seed);

    std::vector<CellResult> cells;
    for (const std::string& policy : options.policies) {
      for (std::uint64_t seed : seeds) {
        CellResult cell;
        cell.policy = policy;
        cell.seed = seed;
        cells.push_back(std::move(cell));
      }
    }

    // Cells are independent runs; with a thread budget they run in parallel
    // and each cell trains single-threaded, otherwise the budget goes to
    // node-level parallelism inside the lone cell.
    const int cell_threads = base.threads > 1 ? base.threads : 1;
    parallel_for(static_cast<int>(cells.size()), cell_threads, [&](int i) {
      CellResult& cell = cells[static_cast<std::size_t>(i)];
      ExperimentConfig cfg = base;
      apply_policy_preset(cfg, cell.policy);
      cfg.master_seed = cell.seed;
      cfg.threads = cell_threads > 1 ? 1 : base.threads;
      cell.table.policy = cell.policy;
      cell.table.seed = cell.seed;
      cell.table.num_nodes = cfg.data.num_nodes;
      cell.table.rows = run_experiment(cfg);
    });

    std::vector<Series> acc_series;
    std::ostringstream summary;
    summary << "policy,seed,last10_test_acc,last10_train_loss\n";
    for (const CellResult& cell : cells) {
      std::ostringstream csv;
      write_metrics_csv(csv, cell.table);
      write_text_file(options.out_dir / ("metrics_" + cell.policy + "_seed" +
                                         std::to_string(cell.seed) + ".csv"),
                      csv.str());

      const std::vector<double> acc = metric_values(cell.table, "test_acc");
      const std::vector<double> loss = metric_values(cell.table, "train_loss");
      summary << cell.policy << ',' << cell.seed << ','
              << format_double(mean_tail(acc, 10)) << ','
              << format_double(mean_tail(loss, 10)) << "\n";

      Series s;
      s.label = cell.policy + "-s" + std::to_string(cell.seed);
      for (const RoundRecord& r : cell.table.rows) {
        s.x.push_back(static_cast<double>(r.round));
        s.y.push_back(r.test_accuracy);
      }
      acc_series.push_back(std::move(s));
    }
    write_text_file(options.out_dir / "summary.csv", summary.str());
    emit_svg_file(acc_series, "test_acc",
                  (options.out_dir / "compare_test_acc.svg").string());
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "compare failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace fedsim
