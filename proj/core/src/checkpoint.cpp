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
#include "fedsim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fedsim {

namespace {

constexpr char kTag[4] = {'F', 'S', 'C', '1'};

void put_u64(std::ostream& out, std::uint64_t x) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) {
    throw std::runtime_error("truncated checkpoint");
  }
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | buf[i];
  return x;
}

void put_i64(std::ostream& out, std::int64_t x) {
  put_u64(out, std::bit_cast<std::uint64_t>(x));
}

std::int64_t get_i64(std::istream& in) {
  return std::bit_cast<std::int64_t>(get_u64(in));
}

void put_f64(std::ostream& out, double x) {
  put_u64(out, std::bit_cast<std::uint64_t>(x));
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kTag, 4);
  put_u64(out, cp.config_digest.size());
  out.write(cp.config_digest.data(),
            static_cast<std::streamsize>(cp.config_digest.size()));
  put_u64(out, static_cast<std::uint64_t>(cp.rounds_completed));
  write_param_vector(out, cp.model);
  const int n = cp.stats.size();
  put_u64(out, static_cast<std::uint64_t>(n));
  for (int i = 0; i < n; ++i) {
    put_f64(out, cp.stats.probability[i]);
    put_i64(out, cp.stats.times_selected[i]);
    put_i64(out, cp.stats.times_labeled[i]);
    put_i64(out, cp.stats.times_excluded[i]);
  }
  if (!out) throw std::runtime_error("write failure on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char tag[4];
  if (!in.read(tag, 4) || std::memcmp(tag, kTag, 4) != 0) {
    throw std::runtime_error("not a checkpoint file (bad tag): " +
                             path.string());
  }
  Checkpoint cp;
  const std::uint64_t digest_len = get_u64(in);
  cp.config_digest.resize(digest_len);
  if (!in.read(cp.config_digest.data(),
               static_cast<std::streamsize>(digest_len))) {
    throw std::runtime_error("truncated checkpoint");
  }
  cp.rounds_completed = static_cast<int>(get_u64(in));
  cp.model = read_param_vector(in);
  const std::uint64_t n = get_u64(in);
  cp.stats.probability.resize(n);
  cp.stats.times_selected.resize(n);
  cp.stats.times_labeled.resize(n);
  cp.stats.times_excluded.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    cp.stats.probability[i] = get_f64(in);
    cp.stats.times_selected[i] = get_i64(in);
    cp.stats.times_labeled[i] = get_i64(in);
    cp.stats.times_excluded[i] = get_i64(in);
  }
  return cp;
}

}  // namespace fedsim
