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

#include "fedsim/models.hpp"
#include "fedsim/selection.hpp"

namespace fedsim {

/// Resumable run state. On disk: 4-byte tag "FSC1", then the config digest
/// (u64 length + bytes), completed round count (u64), the model parameters
/// (length-prefixed little-endian doubles), and per-node stats.
struct Checkpoint {
  std::string config_digest;
  int rounds_completed = 0;
  ParamVector model;
  NodeStats stats;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fedsim
