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
#include "fedsim/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedsim/parallel.hpp"

namespace fedsim {

void ExperimentConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (!(min_retained_fraction > 0.0) || min_retained_fraction > 1.0) {
    throw std::invalid_argument("min_retained_fraction must lie in (0, 1]");
  }
  if (eval_batch_size < 1) {
    throw std::invalid_argument("eval_batch_size must be >= 1");
  }
  if (!(lr_decay > 0.0) || lr_decay > 1.0) {
    throw std::invalid_argument("lr_decay must lie in (0, 1]");
  }
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (train.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (train.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(train.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (data.num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  if (data.samples_per_node < 1) {
    throw std::invalid_argument("samples_per_node must be >= 1");
  }
  if (data.iid_fraction < 0.0 || data.iid_fraction > 1.0) {
    throw std::invalid_argument("iid_fraction must lie in [0, 1]");
  }
  if (data.kind == DataKind::kSynthetic && data.heterogeneity < 0.0) {
    throw std::invalid_argument("heterogeneity must be >= 0");
  }
  if (data.kind == DataKind::kSkewSynthetic) {
    if (data.pool_size < 1 || data.test_pool_size < 1) {
      throw std::invalid_argument("pool sizes must be >= 1");
    }
  }
  if (data.kind == DataKind::kSkewIdx) {
    if (data.train_images.empty() || data.train_labels.empty() ||
        data.test_images.empty() || data.test_labels.empty()) {
      throw std::invalid_argument("idx data requires all four file paths");
    }
  }
  model.validate();
  selection.validate(data.num_nodes);
}

double global_train_loss(const ModelSpec& spec, const ParamVector& w,
                         std::span<const NodeDataset> nodes) {
  if (nodes.empty()) throw std::invalid_argument("no node datasets");
  double sum = 0.0;
  for (const NodeDataset& node : nodes) {
    sum += evaluate(spec, w, node.train).loss;
  }
  return sum / static_cast<double>(nodes.size());
}

ParamVector centralized_step(const ModelSpec& spec, CentralizedReference& ref,
                             const ParamVector& w_tilde_prev, double eta,
                             int batch_size, int steps, Rng& rng) {
  if (ref.pooled.empty()) {
    throw std::invalid_argument("centralized reference has no pooled data");
  }
  ref.v = w_tilde_prev;
  sgd_steps(spec, ref.v, ref.pooled, batch_size, eta, steps, rng);
  return ref.v;
}

double weight_divergence(const ParamVector& w, const ParamVector& v) {
  return norm(w - v);
}

BuiltData build_data(const DataConfig& cfg, std::uint64_t master_seed) {
  BuiltData out;
  switch (cfg.kind) {
    case DataKind::kSynthetic: {
      SyntheticConfig scfg;
      scfg.num_nodes = cfg.num_nodes;
      scfg.iid_fraction = cfg.iid_fraction;
      scfg.heterogeneity = cfg.heterogeneity;
      scfg.samples_per_node = cfg.samples_per_node;
      scfg.feature_dim = cfg.feature_dim;
      scfg.num_classes = cfg.num_classes;
      scfg.seed = master_seed;
      out.nodes = generate_synthetic(scfg);
      for (const NodeDataset& node : out.nodes) {
        out.test_pool.insert(out.test_pool.end(), node.test.begin(),
                             node.test.end());
      }
      break;
    }
    case DataKind::kSkewSynthetic: {
      const std::vector<LabeledExample> pool = synthetic_pool(
          cfg.pool_size, cfg.feature_dim, cfg.num_classes, master_seed, 0);
      out.test_pool = synthetic_pool(cfg.test_pool_size, cfg.feature_dim,
                                     cfg.num_classes, master_seed, 1);
      SkewConfig kcfg;
      kcfg.num_nodes = cfg.num_nodes;
      kcfg.iid_fraction = cfg.iid_fraction;
      kcfg.labels_per_node = cfg.labels_per_node;
      kcfg.samples_per_node = cfg.samples_per_node;
      kcfg.seed = master_seed;
      out.nodes = partition_label_skew(pool, kcfg);
      break;
    }
    case DataKind::kSkewIdx: {
      const std::vector<LabeledExample> pool =
          load_idx(cfg.train_images, cfg.train_labels);
      out.test_pool = load_idx(cfg.test_images, cfg.test_labels);
      SkewConfig kcfg;
      kcfg.num_nodes = cfg.num_nodes;
      kcfg.iid_fraction = cfg.iid_fraction;
      kcfg.labels_per_node = cfg.labels_per_node;
      kcfg.samples_per_node = cfg.samples_per_node;
      kcfg.seed = master_seed;
      out.nodes = partition_label_skew(pool, kcfg);
      break;
    }
  }
  return out;
}

Experiment::Experiment(const ExperimentConfig& cfg)
    : Experiment(cfg, build_data(cfg.data, cfg.master_seed)) {}

Experiment::Experiment(const ExperimentConfig& cfg, BuiltData data)
    : cfg_(cfg), data_(std::move(data)) {
  cfg_.validate();
  if (static_cast<int>(data_.nodes.size()) != cfg_.data.num_nodes) {
    throw std::invalid_argument(
        "node dataset count does not match the configured num_nodes");
  }

  for (const NodeDataset& node : data_.nodes) {
    if (node.train.empty()) {
      throw std::runtime_error("node " + std::to_string(node.node_id) +
                               " has an empty training set");
    }
    if (static_cast<int>(node.train.front().features.size()) !=
        cfg_.model.input_dim) {
      throw std::runtime_error(
          "model input_dim does not match the data feature length");
    }
  }

  Rng init_rng = Rng::substream(cfg_.master_seed, Stream::kModelInit);
  global_ = init_params(cfg_.model, init_rng);
  stats_ = NodeStats::uniform(cfg_.data.num_nodes);

  if (cfg_.track_divergence) {
    const std::size_t size0 = data_.nodes.front().train.size();
    for (const NodeDataset& node : data_.nodes) {
      if (node.train.size() != size0) {
        throw std::runtime_error(
            "divergence diagnostic requires equal per-node data sizes");
      }
      central_.pooled.insert(central_.pooled.end(), node.train.begin(),
                             node.train.end());
    }
    central_.v = global_;
    w_tilde_prev_ = global_;
  }
}

double Experiment::learning_rate(int t) const {
  return cfg_.train.learning_rate *
         std::pow(cfg_.lr_decay, static_cast<double>(t));
}

std::set<NodeId> Experiment::select_participants(int t, Rng& rng,
                                                 std::set<NodeId>* macro_out) {
  const int m = cfg_.selection.selection_count(cfg_.data.num_nodes);
  switch (cfg_.selection.policy) {
    case PolicyKind::kRandom:
      return select_random(cfg_.data.num_nodes, m, rng);
    case PolicyKind::kFedPns:
      return sample_nodes(stats_, m, rng);
    case PolicyKind::kBn2: {
      *macro_out = select_random(cfg_.data.num_nodes,
                                 cfg_.selection.macro_size, rng);
      return {};  // chosen after training, by gradient norm
    }
    case PolicyKind::kStratified: {
      std::vector<NodeId> iid_ids, noniid_ids;
      for (const NodeDataset& node : data_.nodes) {
        (node.is_iid ? iid_ids : noniid_ids).push_back(node.node_id);
      }
      const int take_iid = m / 2;
      const int take_rest = m - take_iid;
      if (static_cast<int>(iid_ids.size()) < take_iid ||
          static_cast<int>(noniid_ids.size()) < take_rest) {
        throw std::runtime_error(
            "stratified selection needs enough iid and non-iid nodes");
      }
      std::set<NodeId> chosen;
      auto draw = [&rng, &chosen](std::vector<NodeId>& ids, int count) {
        for (int i = 0; i < count; ++i) {
          const std::size_t j = static_cast<std::size_t>(rng.below(ids.size()));
          chosen.insert(ids[j]);
          std::swap(ids[j], ids.back());
          ids.pop_back();
        }
      };
      draw(iid_ids, take_iid);
      draw(noniid_ids, take_rest);
      return chosen;
    }
  }
  throw std::logic_error("unknown selection policy");
}

RoundRecord Experiment::run_round() {
  const int t = round_;
  const double eta = learning_rate(t);
  const int m = cfg_.selection.selection_count(cfg_.data.num_nodes);

  Rng select_rng = Rng::substream(cfg_.master_seed, Stream::kSelection,
                                  static_cast<std::uint64_t>(t));
  std::set<NodeId> macro;
  std::set<NodeId> selected = select_participants(t, select_rng, &macro);

  // Which nodes run local SGD this round.
  std::vector<NodeId> to_train;
  if (cfg_.track_divergence) {
    for (const NodeDataset& node : data_.nodes) to_train.push_back(node.node_id);
  } else if (cfg_.selection.policy == PolicyKind::kBn2) {
    to_train.assign(macro.begin(), macro.end());
  } else {
    to_train.assign(selected.begin(), selected.end());
  }

  TrainConfig round_train = cfg_.train;
  round_train.learning_rate = eta;
  std::vector<LocalTrainResult> results(to_train.size());
  parallel_for(static_cast<int>(to_train.size()), cfg_.threads, [&](int i) {
    const NodeId id = to_train[static_cast<std::size_t>(i)];
    Rng node_rng = Rng::substream(cfg_.master_seed, Stream::kLocalTrain,
                                  static_cast<std::uint64_t>(t),
                                  static_cast<std::uint64_t>(id));
    results[static_cast<std::size_t>(i)] =
        local_train(cfg_.model, global_, data_.nodes[id].train, round_train,
                    node_rng);
  });

  std::map<NodeId, double> grad_norms;
  for (std::size_t i = 0; i < to_train.size(); ++i) {
    grad_norms[to_train[i]] = norm(results[i].delta) / eta;
  }

  if (cfg_.selection.policy == PolicyKind::kBn2) {
    std::map<NodeId, double> macro_norms;
    for (NodeId id : macro) macro_norms[id] = grad_norms.at(id);
    selected = select_bn2(macro_norms, m);
  }

  RoundUpdates updates;
  updates.global = global_;
  updates.learning_rate = eta;
  for (std::size_t i = 0; i < to_train.size(); ++i) {
    if (selected.contains(to_train[i])) {
      updates.deltas.emplace(to_train[i], results[i].delta);
    }
  }

  RoundRecord record;
  record.round = t;
  record.selected = selected;
  record.eta = eta;

  ParamVector new_model;
  if (cfg_.aggregation == AggregationMode::kFedAvg) {
    new_model = average_updates(updates.deltas, global_);
  } else {
    Rng eval_rng = Rng::substream(cfg_.master_seed, Stream::kEvalBatch,
                                  static_cast<std::uint64_t>(t));
    const PairEvaluator evaluator = make_eval_batch_loss(
        cfg_.model, data_.test_pool, cfg_.eval_batch_size, eval_rng);
    AggregationOutcome outcome =
        optimal_aggregation(updates, cfg_.min_retained_fraction, evaluator);
    record.labeled = outcome.labeled;
    record.excluded = outcome.excluded;
    record.expectation_trace = std::move(outcome.expectation_trace);
    new_model = std::move(outcome.new_model);
  }

  for (NodeId id : selected) ++stats_.times_selected[id];
  for (NodeId id : record.labeled) ++stats_.times_labeled[id];
  for (NodeId id : record.excluded) ++stats_.times_excluded[id];

  if (cfg_.selection.policy == PolicyKind::kFedPns && !record.labeled.empty()) {
    stats_ = update_probabilities(stats_, record.labeled, cfg_.selection.alpha,
                                  cfg_.selection.beta,
                                  cfg_.selection.probability_floor);
  }

  if (cfg_.track_divergence) {
    std::map<NodeId, ParamVector> all_deltas;
    for (std::size_t i = 0; i < to_train.size(); ++i) {
      all_deltas.emplace(to_train[i], results[i].delta);
    }
    const ParamVector w_tilde = average_updates(all_deltas, global_);
    const int steps =
        cfg_.train.local_steps(static_cast<int>(data_.nodes[0].train.size()));
    Rng central_rng = Rng::substream(cfg_.master_seed, Stream::kCentralized,
                                     static_cast<std::uint64_t>(t));
    const ParamVector v = centralized_step(cfg_.model, central_, w_tilde_prev_,
                                           eta, cfg_.train.batch_size, steps,
                                           central_rng);
    record.divergence = weight_divergence(new_model, v);
    w_tilde_prev_ = w_tilde;
  }

  global_ = std::move(new_model);
  record.train_loss = global_train_loss(cfg_.model, global_, data_.nodes);
  const EvalResult test = evaluate(cfg_.model, global_, data_.test_pool);
  record.test_loss = test.loss;
  record.test_accuracy = test.accuracy;
  if (cfg_.track_grad_norms) record.grad_norms = std::move(grad_norms);
  record.probabilities = stats_.probability;

  ++round_;
  return record;
}

std::vector<RoundRecord> Experiment::run_all() {
  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(cfg_.rounds));
  for (int t = 0; t < cfg_.rounds; ++t) records.push_back(run_round());
  return records;
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg) {
  Experiment experiment(cfg);
  return experiment.run_all();
}

}  // namespace fedsim
