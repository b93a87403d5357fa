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
#include <random>
#include <vector>

namespace fedsim {

/// Labels for deriving independent substreams from one master seed.
/// Each label has a fixed argument arity by convention:
///   kModelInit ()          kData (purpose, index)      kSelection (round)
///   kLocalTrain (round, node)   kEvalBatch (round)     kCentralized (round)
enum class Stream : std::uint64_t {
  kModelInit = 1,
  kData = 2,
  kSelection = 3,
  kLocalTrain = 4,
  kEvalBatch = 5,
  kCentralized = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives a child seed from (seed, a, b, c) by iterated splitmix64 mixing.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

/// Seeded generator with pinned transforms. The engine is std::mt19937_64,
/// whose output sequence is fully specified by the standard; the
/// uniform/normal/integer transforms below are implemented here rather than
/// taken from <random> distributions, so a given seed reproduces the same
/// values under any conforming standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
    return Rng(mix_seed(master, static_cast<std::uint64_t>(stream), a, b));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution from the top engine bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log argument.
  double uniform01_positive() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (cosine branch). Consumes exactly two
  /// engine draws per call; no spare value is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates shuffle using below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fedsim
