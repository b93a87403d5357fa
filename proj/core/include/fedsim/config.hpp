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
#include <stdexcept>
#include <string>
#include <string_view>

#include "fedsim/orchestrator.hpp"

namespace fedsim {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string message, int line = 0)
      : std::runtime_error(std::move(message)), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Reads a sectioned key = value file into an ExperimentConfig. Missing keys
/// take the standard defaults (c=0.2, B=20, eta0=0.01, decay=0.995, v=0.7,
/// eval batch 128, alpha=2, beta=0.7); unknown sections or keys are rejected
/// with the offending line number. The parsed config is validated before it
/// is returned.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Same, from an in-memory buffer; `origin` names the source in errors.
ExperimentConfig parse_config_text(std::string_view text,
                                   const std::string& origin);

/// Canonical serialization: every field, fixed section and key order.
/// parse_config_text(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace fedsim
