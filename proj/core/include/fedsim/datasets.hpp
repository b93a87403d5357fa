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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

struct LabeledExample {
  std::vector<double> features;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

struct NodeDataset {
  int node_id = 0;
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  bool is_iid = true;
};

/// Synthetic generator settings. `heterogeneity` is the variance of the
/// per-node mean offset B_i (0 collapses every B_i to 0).
struct SyntheticConfig {
  int num_nodes = 50;
  double iid_fraction = 0.2;
  double heterogeneity = 1.0;
  int samples_per_node = 200;
  int feature_dim = 60;
  int num_classes = 10;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticConfig&) const = default;
};

struct SkewConfig {
  int num_nodes = 50;
  double iid_fraction = 0.2;
  int labels_per_node = 2;
  int samples_per_node = 200;
  std::uint64_t seed = 0;

  bool operator==(const SkewConfig&) const = default;
};

/// The linear model that labels every synthetic sample drawn under one seed:
/// y = argmax(W x + b), entries of W and b drawn once from N(0, 1).
/// Exposed so tests can recompute labels independently.
struct SyntheticModel {
  std::vector<double> weights;  // num_classes x feature_dim, row-major
  std::vector<double> bias;     // num_classes
  int feature_dim = 0;
  int num_classes = 0;

  static SyntheticModel create(int feature_dim, int num_classes,
                               std::uint64_t seed);

  /// argmax(W x + b); ties broken toward the lowest class index.
  int label_for(std::span<const double> x) const;
};

/// Generates per-node synthetic datasets. The first round(iid_fraction * K)
/// node ids are IID: x ~ N(0, Sigma) with diagonal Sigma_{r,r} = r^{-1.2}
/// (r is 1-based). Non-IID node i draws x ~ N(o_i, Sigma) where each element
/// of o_i ~ N(B_i, 1) and B_i ~ N(0, heterogeneity). Labels come from the
/// shared SyntheticModel; each node is split 80/20 into train/test with
/// |train| = round(0.8 * samples_per_node). Bit-deterministic under the seed.
std::vector<NodeDataset> generate_synthetic(const SyntheticConfig& cfg);

/// Class centers of the flat-pool distribution for one seed: num_classes
/// points in feature_dim dimensions, entries N(0, 0.4^2). Exposed so tests
/// can recompute pool structure.
std::vector<std::vector<double>> pool_class_centers(int feature_dim,
                                                    int num_classes,
                                                    std::uint64_t seed);

/// A class-balanced labeled pool standing in for an image benchmark: labels
/// cycle through the classes, features are the class center plus unit
/// Gaussian noise. Every class holds an equal share by construction, so
/// per-class partition quotas are always satisfiable. Pools with distinct
/// stream indices are independent draws around one set of centers, which is
/// how a train pool and a held-out test pool are produced.
std::vector<LabeledExample> synthetic_pool(int count, int feature_dim,
                                           int num_classes, std::uint64_t seed,
                                           std::uint64_t stream_index = 0);

class PartitionError : public std::runtime_error {
 public:
  PartitionError(const std::string& what, int class_label)
      : std::runtime_error(what), class_label_(class_label) {}
  int class_label() const { return class_label_; }

 private:
  int class_label_;
};

/// Splits a labeled pool across num_nodes. The first round(iid_fraction * K)
/// node ids draw samples_per_node examples uniformly without replacement from
/// the whole pool; every remaining node receives samples_per_node examples
/// split evenly over labels_per_node classes, classes assigned round-robin
/// over the non-IID nodes (ordinal j covers classes (j*rho + l) mod C).
/// No pool example is handed out twice. All of a node's samples land in
/// `train`; the caller supplies a separate evaluation split.
/// Throws PartitionError naming the class when a class runs dry.
std::vector<NodeDataset> partition_label_skew(
    std::span<const LabeledExample> pool, const SkewConfig& cfg);

class IdxError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kTruncated, kCountMismatch };

  IdxError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads an IDX image/label file pair (big-endian magic 2051 / 2049, then
/// big-endian 32-bit dimension sizes, then raw bytes). Pixels are scaled to
/// [0, 1] and flattened row-major.
std::vector<LabeledExample> load_idx(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path);

/// min(size, |pool|) examples drawn uniformly without replacement.
std::vector<LabeledExample> sample_eval_batch(
    std::span<const LabeledExample> pool, int size, Rng& rng);

}  // namespace fedsim
