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

#include <filesystem>
#include <string>

#include "fedsim/orchestrator.hpp"

namespace fedsim {

/// SHA-256 hex digest of the canonical config serialization. Two files that
/// spell the same configuration in any key order share one digest.
std::string config_digest(const ExperimentConfig& cfg);

struct RunManifest {
  ExperimentConfig config;
  std::string out_dir;
  std::string digest;
  std::string timestamp;  // ISO-8601 UTC
};

RunManifest make_manifest(const ExperimentConfig& cfg,
                          const std::string& out_dir);

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

}  // namespace fedsim
