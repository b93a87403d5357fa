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
#include "fedsim/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedsim/datasets.hpp"

namespace fedsim {

namespace {

// View over the current candidate set, kept in ascending node-id order.
using GradView = std::vector<std::pair<NodeId, const ParamVector*>>;

ParamVector mean_of(const GradView& grads) {
  ParamVector mean(grads.front().second->size());
  for (const auto& [id, g] : grads) {
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += (*g)[k];
  }
  const double inv = 1.0 / static_cast<double>(grads.size());
  for (double& v : mean.values) v *= inv;
  return mean;
}

// (1/|A|) sum_i <mean(A), g_i>, computed literally.
double expectation_over(const GradView& grads) {
  const ParamVector mean = mean_of(grads);
  double sum = 0.0;
  for (const auto& [id, g] : grads) sum += dot(mean, *g);
  return sum / static_cast<double>(grads.size());
}

std::vector<std::pair<NodeId, double>> leave_one_out_values(
    const GradView& grads) {
  if (grads.size() < 2) {
    throw std::invalid_argument(
        "check_expectation needs at least two participants");
  }
  std::vector<std::pair<NodeId, double>> values;
  values.reserve(grads.size());
  GradView reduced;
  reduced.reserve(grads.size() - 1);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    reduced.clear();
    for (std::size_t j = 0; j < grads.size(); ++j) {
      if (j != i) reduced.push_back(grads[j]);
    }
    values.emplace_back(grads[i].first, expectation_over(reduced));
  }
  return values;
}

ParamVector average_over(const std::map<NodeId, ParamVector>& deltas,
                         const std::set<NodeId>& ids, const ParamVector& w) {
  std::map<NodeId, ParamVector> subset;
  for (NodeId id : ids) subset.emplace(id, deltas.at(id));
  return average_updates(subset, w);
}

}  // namespace

ParamVector average_updates(const std::map<NodeId, ParamVector>& deltas,
                            const ParamVector& w) {
  if (deltas.empty()) {
    throw std::invalid_argument("average_updates: no updates to aggregate");
  }
  ParamVector sum(w.size());
  for (const auto& [id, delta] : deltas) {
    if (delta.size() != w.size()) {
      throw std::invalid_argument("update dimension mismatch for node " +
                                  std::to_string(id));
    }
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += delta[k];
  }
  const double inv = 1.0 / static_cast<double>(deltas.size());
  ParamVector out(w.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = w[k] + sum[k] * inv;
  return out;
}

std::map<NodeId, ParamVector> reconstruct_gradients(
    const RoundUpdates& updates) {
  if (!(updates.learning_rate > 0.0)) {
    throw std::invalid_argument(
        "gradient reconstruction requires a positive learning rate");
  }
  std::map<NodeId, ParamVector> grads;
  const double inv = -1.0 / updates.learning_rate;
  for (const auto& [id, delta] : updates.deltas) {
    ParamVector g(delta.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = delta[k] * inv;
    grads.emplace(id, std::move(g));
  }
  return grads;
}

double expectation_term(const std::map<NodeId, ParamVector>& grads) {
  if (grads.empty()) {
    throw std::invalid_argument("expectation_term: empty gradient set");
  }
  GradView view;
  view.reserve(grads.size());
  for (const auto& [id, g] : grads) view.emplace_back(id, &g);
  return expectation_over(view);
}

std::map<NodeId, double> check_expectation(
    const std::map<NodeId, ParamVector>& grads) {
  GradView view;
  view.reserve(grads.size());
  for (const auto& [id, g] : grads) view.emplace_back(id, &g);
  std::map<NodeId, double> out;
  for (const auto& [id, value] : leave_one_out_values(view)) out[id] = value;
  return out;
}

CheckLossResult check_loss(const ModelSpec& spec, const RoundUpdates& updates,
                           const std::set<NodeId>& retained, NodeId candidate,
                           std::span<const LabeledExample> eval_batch) {
  if (!retained.contains(candidate)) {
    throw std::invalid_argument("check_loss: candidate not in retained set");
  }
  if (retained.size() < 2) {
    throw std::invalid_argument("check_loss: reduced set would be empty");
  }
  std::set<NodeId> reduced = retained;
  reduced.erase(candidate);
  const ParamVector full_model =
      average_over(updates.deltas, retained, updates.global);
  const ParamVector reduced_model =
      average_over(updates.deltas, reduced, updates.global);
  return {evaluate(spec, full_model, eval_batch).loss,
          evaluate(spec, reduced_model, eval_batch).loss};
}

PairEvaluator make_eval_batch_loss(const ModelSpec& spec,
                                   std::span<const LabeledExample> test_pool,
                                   int batch_size, Rng& rng) {
  return [&spec, test_pool, batch_size, &rng](const ParamVector& full_model,
                                              const ParamVector& reduced_model) {
    const std::vector<LabeledExample> batch =
        sample_eval_batch(test_pool, batch_size, rng);
    return CheckLossResult{evaluate(spec, full_model, batch).loss,
                           evaluate(spec, reduced_model, batch).loss};
  };
}

AggregationOutcome optimal_aggregation(const RoundUpdates& updates,
                                       double min_retained_fraction,
                                       const PairEvaluator& evaluate_pair) {
  if (updates.deltas.empty()) {
    throw std::invalid_argument("optimal_aggregation: no participants");
  }
  if (!(min_retained_fraction > 0.0) || min_retained_fraction > 1.0) {
    throw std::invalid_argument(
        "min_retained_fraction must lie in (0, 1]");
  }

  const std::map<NodeId, ParamVector> grads = reconstruct_gradients(updates);

  AggregationOutcome outcome;
  for (const auto& [id, delta] : updates.deltas) outcome.retained.insert(id);

  const auto initial_size = outcome.retained.size();
  const auto min_retained = static_cast<std::size_t>(
      std::ceil(min_retained_fraction * static_cast<double>(initial_size)));

  GradView view;
  view.reserve(initial_size);
  for (const auto& [id, g] : grads) view.emplace_back(id, &g);

  double baseline = expectation_over(view);

  while (view.size() > std::max<std::size_t>(min_retained, 1) &&
         view.size() >= 2) {
    const auto values = leave_one_out_values(view);
    outcome.expectation_trace.push_back(values);

    // argmax, ties to the lowest node id (values are in ascending-id order).
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i].second > values[best].second) best = i;
    }
    // Equal values keep the node. The two sides are the same quantity summed
    // in different shapes, so equality is tested up to relative rounding
    // noise; a homogeneous round must not flag anyone.
    const double tolerance =
        1e-12 * std::max(std::abs(baseline), std::abs(values[best].second));
    if (!(values[best].second > baseline + tolerance)) break;

    const NodeId candidate = values[best].first;
    outcome.labeled.insert(candidate);

    std::set<NodeId> reduced = outcome.retained;
    reduced.erase(candidate);
    const ParamVector full_model =
        average_over(updates.deltas, outcome.retained, updates.global);
    const ParamVector reduced_model =
        average_over(updates.deltas, reduced, updates.global);
    const CheckLossResult ls = evaluate_pair(full_model, reduced_model);

    // Exclude only when dropping the candidate strictly lowers the loss.
    if (!(ls.reduced < ls.full)) break;

    outcome.excluded.insert(candidate);
    outcome.retained = std::move(reduced);
    view.erase(std::find_if(view.begin(), view.end(),
                            [candidate](const auto& e) {
                              return e.first == candidate;
                            }));
    baseline = values[best].second;
  }

  outcome.new_model =
      average_over(updates.deltas, outcome.retained, updates.global);
  return outcome;
}

}  // namespace fedsim
