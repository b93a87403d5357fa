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
#include "fedsim/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fedsim/config.hpp"

namespace fedsim {

std::string config_digest(const ExperimentConfig& cfg) {
  const std::string canonical = serialize_config(cfg);
  unsigned char hash[EVP_MAX_MD_SIZE];
  unsigned int hash_len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), hash, &hash_len,
                 EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(hash_len * 2);
  for (unsigned int i = 0; i < hash_len; ++i) {
    out += hex[hash[i] >> 4];
    out += hex[hash[i] & 0xf];
  }
  return out;
}

RunManifest make_manifest(const ExperimentConfig& cfg,
                          const std::string& out_dir) {
  RunManifest m;
  m.config = cfg;
  m.out_dir = out_dir;
  m.digest = config_digest(cfg);

  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  m.timestamp = buf;
  return m;
}

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path) {
  nlohmann::json j;
  j["digest"] = manifest.digest;
  j["out_dir"] = manifest.out_dir;
  j["timestamp"] = manifest.timestamp;
  j["config"] = serialize_config(manifest.config);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace fedsim
