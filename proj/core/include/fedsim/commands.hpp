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
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/orchestrator.hpp"

namespace fedsim {

// Exit codes shared by the commands and the CLI wrapper.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Applies one of the named method presets:
///   fedavg -> random selection + plain averaging
///   optagg -> random selection + optimal aggregation
///   fedpns -> probabilistic selection + optimal aggregation
///   bn2    -> gradient-norm macro selection + plain averaging
/// Returns false for unknown names.
bool apply_policy_preset(ExperimentConfig& cfg, const std::string& name);

/// Thread count resolution: explicit option, else FEDSIM_THREADS, else the
/// config value.
int resolve_threads(std::optional<int> flag_value, int config_value);

struct RunOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<int> threads;
  bool force = false;
};

/// Runs one experiment and writes metrics.csv, manifest.json and
/// checkpoint.bin under out_dir. Refuses a non-empty out_dir without force.
int cmd_run(const RunOptions& options);

struct CompareOptions {
  std::filesystem::path config_path;
  std::vector<std::string> policies;
  std::vector<std::uint64_t> seeds;  // empty -> the config seed
  std::filesystem::path out_dir;
  std::optional<int> threads;
  bool force = false;
};

/// Runs every (policy, seed) cell under the paired-seed discipline (shared
/// data, init and per-node substreams), writes one metrics CSV per cell, a
/// summary CSV of last-10-round means, and a test-accuracy comparison SVG.
int cmd_compare(const CompareOptions& options);

}  // namespace fedsim
