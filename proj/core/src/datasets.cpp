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
#include "fedsim/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace fedsim {

namespace {

// Sub-purpose tags within Stream::kData.
constexpr std::uint64_t kTagGeneratingModel = 0;
constexpr std::uint64_t kTagNodeSamples = 1;
constexpr std::uint64_t kTagPool = 2;
constexpr std::uint64_t kTagPartition = 3;

std::vector<double> sigma_diagonal(int feature_dim) {
  std::vector<double> sigma(feature_dim);
  for (int r = 0; r < feature_dim; ++r) {
    sigma[r] = std::pow(static_cast<double>(r + 1), -0.6);
  }
  return sigma;
}

int round_nearest(double x) { return static_cast<int>(std::lround(x)); }

// Removes and returns a uniformly chosen element (swap with the back).
template <typename T>
T draw_without_replacement(std::vector<T>& items, Rng& rng) {
  const std::size_t j = static_cast<std::size_t>(rng.below(items.size()));
  std::swap(items[j], items.back());
  T out = items.back();
  items.pop_back();
  return out;
}

}  // namespace

SyntheticModel SyntheticModel::create(int feature_dim, int num_classes,
                                      std::uint64_t seed) {
  SyntheticModel m;
  m.feature_dim = feature_dim;
  m.num_classes = num_classes;
  Rng rng = Rng::substream(seed, Stream::kData, kTagGeneratingModel);
  m.weights.resize(static_cast<std::size_t>(num_classes) * feature_dim);
  m.bias.resize(num_classes);
  for (double& w : m.weights) w = rng.normal();
  for (double& b : m.bias) b = rng.normal();
  return m;
}

int SyntheticModel::label_for(std::span<const double> x) const {
  int best = 0;
  double best_logit = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    double logit = bias[c];
    const double* row = weights.data() + static_cast<std::size_t>(c) * feature_dim;
    for (int r = 0; r < feature_dim; ++r) logit += row[r] * x[r];
    if (c == 0 || logit > best_logit) {
      best = c;
      best_logit = logit;
    }
  }
  return best;
}

namespace {

void validate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  if (cfg.samples_per_node < 1) {
    throw std::invalid_argument("samples_per_node must be >= 1");
  }
  if (cfg.feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (cfg.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (cfg.iid_fraction < 0.0 || cfg.iid_fraction > 1.0) {
    throw std::invalid_argument("iid_fraction must lie in [0, 1]");
  }
  if (cfg.heterogeneity < 0.0) {
    throw std::invalid_argument("heterogeneity must be >= 0");
  }
}

}  // namespace

std::vector<NodeDataset> generate_synthetic(const SyntheticConfig& cfg) {
  validate_synthetic(cfg);
  const SyntheticModel model =
      SyntheticModel::create(cfg.feature_dim, cfg.num_classes, cfg.seed);

  // Per-feature standard deviation: sqrt(r^{-1.2}) with 1-based r.
  const std::vector<double> sigma = sigma_diagonal(cfg.feature_dim);

  // Non-integral iid_fraction * num_nodes rounds to nearest.
  const int num_iid = round_nearest(cfg.iid_fraction * cfg.num_nodes);

  std::vector<NodeDataset> nodes(cfg.num_nodes);
  for (int i = 0; i < cfg.num_nodes; ++i) {
    NodeDataset& node = nodes[i];
    node.node_id = i;
    node.is_iid = i < num_iid;

    Rng rng = Rng::substream(cfg.seed, Stream::kData, kTagNodeSamples,
                             static_cast<std::uint64_t>(i));
    std::vector<double> offset(cfg.feature_dim, 0.0);
    if (!node.is_iid) {
      const double node_mean = rng.normal(0.0, std::sqrt(cfg.heterogeneity));
      for (double& o : offset) o = rng.normal(node_mean, 1.0);
    }

    std::vector<LabeledExample> samples;
    samples.reserve(cfg.samples_per_node);
    for (int s = 0; s < cfg.samples_per_node; ++s) {
      LabeledExample ex;
      ex.features.resize(cfg.feature_dim);
      for (int r = 0; r < cfg.feature_dim; ++r) {
        ex.features[r] = offset[r] + sigma[r] * rng.normal();
      }
      ex.label = model.label_for(ex.features);
      samples.push_back(std::move(ex));
    }

    const int train_count = round_nearest(0.8 * cfg.samples_per_node);
    node.train.assign(samples.begin(), samples.begin() + train_count);
    node.test.assign(samples.begin() + train_count, samples.end());
  }
  return nodes;
}

std::vector<std::vector<double>> pool_class_centers(int feature_dim,
                                                    int num_classes,
                                                    std::uint64_t seed) {
  // Mirrors the structure of image benchmarks: a high-energy component
  // common to every class (the "average digit" blob), class families with
  // confusable twins inside them (1/7, 4/9, ...), and per-sample noise.
  // The common component dominates the feature energy but carries no class
  // signal, so single-class cohorts train fast locally while the population
  // objective is learned slowly through the small discriminative parts.
  constexpr double kCommonScale = 1.5;
  constexpr double kFamilyScale = 0.35;
  constexpr double kSplitScale = 0.15;
  Rng rng = Rng::substream(seed, Stream::kData, kTagGeneratingModel, 1);
  std::vector<double> common(feature_dim);
  for (double& v : common) v = rng.normal(0.0, kCommonScale);
  const int families = (num_classes + 1) / 2;
  std::vector<std::vector<double>> family_centers(families);
  for (auto& center : family_centers) {
    center.resize(feature_dim);
    for (double& v : center) v = rng.normal(0.0, kFamilyScale);
  }
  std::vector<std::vector<double>> centers(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    centers[c].resize(feature_dim);
    const auto& base = family_centers[c / 2];
    for (int r = 0; r < feature_dim; ++r) {
      centers[c][r] = common[r] + base[r] + rng.normal(0.0, kSplitScale);
    }
  }
  return centers;
}

std::vector<LabeledExample> synthetic_pool(int count, int feature_dim,
                                           int num_classes, std::uint64_t seed,
                                           std::uint64_t stream_index) {
  if (count < 1) throw std::invalid_argument("pool count must be >= 1");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");

  constexpr double kSampleNoise = 0.5;
  const auto centers = pool_class_centers(feature_dim, num_classes, seed);
  Rng rng = Rng::substream(seed, Stream::kData, kTagPool, stream_index);
  std::vector<LabeledExample> pool;
  pool.reserve(count);
  for (int s = 0; s < count; ++s) {
    LabeledExample ex;
    ex.label = s % num_classes;
    ex.features.resize(feature_dim);
    const auto& center = centers[ex.label];
    for (int r = 0; r < feature_dim; ++r) {
      ex.features[r] = center[r] + rng.normal(0.0, kSampleNoise);
    }
    pool.push_back(std::move(ex));
  }
  return pool;
}

std::vector<NodeDataset> partition_label_skew(
    std::span<const LabeledExample> pool, const SkewConfig& cfg) {
  if (cfg.num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  if (cfg.samples_per_node < 1) {
    throw std::invalid_argument("samples_per_node must be >= 1");
  }
  if (pool.empty()) throw std::invalid_argument("pool must be nonempty");
  if (cfg.iid_fraction < 0.0 || cfg.iid_fraction > 1.0) {
    throw std::invalid_argument("iid_fraction must lie in [0, 1]");
  }

  int num_classes = 0;
  for (const LabeledExample& ex : pool) {
    if (ex.label < 0) throw std::invalid_argument("pool labels must be >= 0");
    num_classes = std::max(num_classes, ex.label + 1);
  }
  if (cfg.labels_per_node < 1 || cfg.labels_per_node > num_classes) {
    throw std::invalid_argument("labels_per_node must lie in [1, num_classes]");
  }
  if (cfg.samples_per_node % cfg.labels_per_node != 0) {
    throw std::invalid_argument(
        "samples_per_node must divide evenly across labels_per_node");
  }

  const int num_iid = round_nearest(cfg.iid_fraction * cfg.num_nodes);
  Rng rng = Rng::substream(cfg.seed, Stream::kData, kTagPartition);

  std::vector<NodeDataset> nodes(cfg.num_nodes);

  // IID nodes draw from the whole remaining pool first, in node-id order.
  std::vector<std::size_t> available(pool.size());
  std::iota(available.begin(), available.end(), std::size_t{0});
  for (int i = 0; i < num_iid; ++i) {
    nodes[i].node_id = i;
    nodes[i].is_iid = true;
    if (available.size() < static_cast<std::size_t>(cfg.samples_per_node)) {
      throw PartitionError("pool exhausted while filling iid nodes", -1);
    }
    for (int s = 0; s < cfg.samples_per_node; ++s) {
      nodes[i].train.push_back(pool[draw_without_replacement(available, rng)]);
    }
  }

  // What is left, bucketed by class, feeds the skewed nodes.
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t idx : available) {
    by_class[pool[idx].label].push_back(idx);
  }

  const int per_label = cfg.samples_per_node / cfg.labels_per_node;
  for (int i = num_iid; i < cfg.num_nodes; ++i) {
    nodes[i].node_id = i;
    nodes[i].is_iid = false;
    const int ordinal = i - num_iid;
    for (int l = 0; l < cfg.labels_per_node; ++l) {
      const int cls = (ordinal * cfg.labels_per_node + l) % num_classes;
      auto& bucket = by_class[cls];
      if (bucket.size() < static_cast<std::size_t>(per_label)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "insufficient samples of class %d: need %d, have %zu",
                      cls, per_label, bucket.size());
        throw PartitionError(msg, cls);
      }
      for (int s = 0; s < per_label; ++s) {
        nodes[i].train.push_back(pool[draw_without_replacement(bucket, rng)]);
      }
    }
  }
  return nodes;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw IdxError(IdxError::Kind::kTruncated, "truncated header in " + path);
  }
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

std::vector<LabeledExample> load_idx(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) {
    throw IdxError(IdxError::Kind::kIo,
                   "cannot open image file " + images_path.string());
  }
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) {
    throw IdxError(IdxError::Kind::kIo,
                   "cannot open label file " + labels_path.string());
  }

  const std::uint32_t image_magic = read_be32(images, images_path.string());
  if (image_magic != 2051) {
    throw IdxError(IdxError::Kind::kBadMagic,
                   "bad image magic " + std::to_string(image_magic) + " in " +
                       images_path.string());
  }
  const std::uint32_t image_count = read_be32(images, images_path.string());
  const std::uint32_t rows = read_be32(images, images_path.string());
  const std::uint32_t cols = read_be32(images, images_path.string());

  const std::uint32_t label_magic = read_be32(labels, labels_path.string());
  if (label_magic != 2049) {
    throw IdxError(IdxError::Kind::kBadMagic,
                   "bad label magic " + std::to_string(label_magic) + " in " +
                       labels_path.string());
  }
  const std::uint32_t label_count = read_be32(labels, labels_path.string());

  if (image_count != label_count) {
    throw IdxError(IdxError::Kind::kCountMismatch,
                   "image count " + std::to_string(image_count) +
                       " != label count " + std::to_string(label_count));
  }

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixel_buf(pixels);
  std::vector<unsigned char> label_buf(label_count);
  if (!labels.read(reinterpret_cast<char*>(label_buf.data()), label_count)) {
    throw IdxError(IdxError::Kind::kTruncated,
                   "truncated label data in " + labels_path.string());
  }

  std::vector<LabeledExample> out;
  out.reserve(image_count);
  for (std::uint32_t i = 0; i < image_count; ++i) {
    if (!images.read(reinterpret_cast<char*>(pixel_buf.data()),
                     static_cast<std::streamsize>(pixels))) {
      throw IdxError(IdxError::Kind::kTruncated,
                     "truncated image data in " + images_path.string());
    }
    LabeledExample ex;
    ex.features.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      ex.features[p] = static_cast<double>(pixel_buf[p]) / 255.0;
    }
    ex.label = static_cast<int>(label_buf[i]);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> sample_eval_batch(
    std::span<const LabeledExample> pool, int size, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("eval pool must be nonempty");
  if (size < 1) throw std::invalid_argument("eval batch size must be >= 1");

  const std::size_t k =
      std::min(static_cast<std::size_t>(size), pool.size());
  std::vector<std::size_t> indices(pool.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  // Partial Fisher-Yates: fix the first k positions.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  std::vector<LabeledExample> batch;
  batch.reserve(k);
  for (std::size_t i = 0; i < k; ++i) batch.push_back(pool[indices[i]]);
  return batch;
}

}  // namespace fedsim
