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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/datasets.hpp"
#include "fedsim/models.hpp"
#include "fedsim/selection.hpp"

namespace fedsim {

enum class AggregationMode { kFedAvg, kOptimalAggregation };

enum class DataKind {
  kSynthetic,      // per-node synthetic generator
  kSkewSynthetic,  // synthetic pool partitioned by label skew
  kSkewIdx,        // IDX files partitioned by label skew
};

struct DataConfig {
  DataKind kind = DataKind::kSynthetic;
  int num_nodes = 50;
  double iid_fraction = 0.2;
  int samples_per_node = 200;
  int feature_dim = 60;
  int num_classes = 10;
  // kSynthetic
  double heterogeneity = 1.0;
  // kSkewSynthetic / kSkewIdx
  int labels_per_node = 2;
  int pool_size = 20000;
  int test_pool_size = 5000;
  std::string train_images, train_labels, test_images, test_labels;

  bool operator==(const DataConfig&) const = default;
};

struct ExperimentConfig {
  DataConfig data;
  ModelSpec model;
  TrainConfig train;
  double lr_decay = 0.995;
  SelectionPolicyConfig selection;
  AggregationMode aggregation = AggregationMode::kFedAvg;
  int rounds = 200;
  double min_retained_fraction = 0.7;  // v
  int eval_batch_size = 128;           // B-bar
  std::uint64_t master_seed = 1;
  bool track_divergence = false;
  bool track_grad_norms = true;
  int threads = 1;

  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

struct RoundRecord {
  int round = 0;
  std::set<NodeId> selected, labeled, excluded;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double eta = 0.0;
  std::map<NodeId, double> grad_norms;  // every node trained this round
  std::vector<double> probabilities;    // snapshot after this round's update
  std::optional<double> divergence;
  std::vector<std::vector<std::pair<NodeId, double>>> expectation_trace;
};

/// Centralized-SGD reference trajectory over the pooled training data.
struct CentralizedReference {
  ParamVector v;
  std::vector<LabeledExample> pooled;
};

/// Equal-weight mean of the per-node training losses.
double global_train_loss(const ModelSpec& spec, const ParamVector& w,
                         std::span<const NodeDataset> nodes);

/// Synchronizes ref.v to the full-participation average and advances it by
/// `steps` mini-batch SGD steps on the pooled data.
ParamVector centralized_step(const ModelSpec& spec, CentralizedReference& ref,
                             const ParamVector& w_tilde_prev, double eta,
                             int batch_size, int steps, Rng& rng);

double weight_divergence(const ParamVector& w, const ParamVector& v);

/// Materialized node datasets plus the evaluation pool.
struct BuiltData {
  std::vector<NodeDataset> nodes;
  std::vector<LabeledExample> test_pool;
};

BuiltData build_data(const DataConfig& cfg, std::uint64_t master_seed);

/// Owns all mutable training state; one instance is one run. Substreams are
/// keyed by (master seed, purpose, round, node), so paired runs that share a
/// master seed see identical data, initialization, and per-node batches no
/// matter which policy drives them.
class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg);

  /// Runs on caller-supplied node datasets instead of build_data(); the node
  /// count must match the config.
  Experiment(const ExperimentConfig& cfg, BuiltData data);

  RoundRecord run_round();
  std::vector<RoundRecord> run_all();

  int round() const { return round_; }
  double learning_rate(int t) const;
  const ExperimentConfig& config() const { return cfg_; }
  const std::vector<NodeDataset>& nodes() const { return data_.nodes; }
  const std::vector<LabeledExample>& test_pool() const {
    return data_.test_pool;
  }
  const ParamVector& global_model() const { return global_; }
  const NodeStats& stats() const { return stats_; }

 private:
  std::set<NodeId> select_participants(int t, Rng& rng,
                                       std::set<NodeId>* macro_out);

  ExperimentConfig cfg_;
  BuiltData data_;
  ParamVector global_;
  NodeStats stats_;
  int round_ = 0;
  // Divergence diagnostic state: previous round's full-participation average.
  ParamVector w_tilde_prev_;
  CentralizedReference central_;
};

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg);

}  // namespace fedsim
