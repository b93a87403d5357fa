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
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "fedsim/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning simulator: FedAvg, optimal aggregation "
               "and probabilistic node selection"};
  app.require_subcommand(1);

  fedsim::RunOptions run_options;
  std::string run_config, run_out;
  std::uint64_t run_seed = 0;
  std::string run_policy;
  int run_threads = 0;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", run_config, "Experiment config file")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  auto* run_seed_opt =
      run->add_option("--seed", run_seed, "Override the master seed");
  auto* run_policy_opt = run->add_option(
      "--policy", run_policy, "Policy preset: fedavg, optagg, fedpns, bn2");
  auto* run_threads_opt =
      run->add_option("--threads", run_threads, "Worker thread count");
  run->add_flag("--force", run_options.force,
                "Overwrite a non-empty output directory");

  fedsim::CompareOptions compare_options;
  std::string cmp_config, cmp_out;
  std::vector<std::string> cmp_policies;
  std::vector<std::uint64_t> cmp_seeds;
  int cmp_threads = 0;
  CLI::App* compare =
      app.add_subcommand("compare", "Run paired policy comparisons");
  compare->add_option("--config", cmp_config, "Experiment config file")
      ->required();
  compare->add_option("--out", cmp_out, "Output directory")->required();
  compare
      ->add_option("--policy", cmp_policies,
                   "Policy presets to compare (repeat or comma-separate)")
      ->required()
      ->delimiter(',');
  compare->add_option("--seed", cmp_seeds, "Master seeds (one run per seed)")
      ->delimiter(',');
  auto* cmp_threads_opt =
      compare->add_option("--threads", cmp_threads, "Worker thread count");
  compare->add_flag("--force", compare_options.force,
                    "Overwrite a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? fedsim::kExitOk : fedsim::kExitUsage;
  }

  if (run->parsed()) {
    run_options.config_path = run_config;
    run_options.out_dir = run_out;
    if (run_seed_opt->count() > 0) run_options.seed = run_seed;
    if (run_policy_opt->count() > 0) run_options.policy = run_policy;
    if (run_threads_opt->count() > 0) run_options.threads = run_threads;
    return fedsim::cmd_run(run_options);
  }
  if (compare->parsed()) {
    compare_options.config_path = cmp_config;
    compare_options.out_dir = cmp_out;
    compare_options.policies = cmp_policies;
    compare_options.seeds = cmp_seeds;
    if (cmp_threads_opt->count() > 0) compare_options.threads = cmp_threads;
    return fedsim::cmd_compare(compare_options);
  }
  std::cerr << "no subcommand\n";
  return fedsim::kExitUsage;
}
