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

#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "fedsim/models.hpp"

namespace fedsim {

using NodeId = int;

/// One round's uploaded updates: delta_i = w_i - w^t for every participant,
/// plus the round-start global model and the round's (decayed) learning rate.
struct RoundUpdates {
  ParamVector global;
  double learning_rate = 0.0;
  std::map<NodeId, ParamVector> deltas;
};

struct AggregationOutcome {
  std::set<NodeId> retained;
  std::set<NodeId> labeled;   // flagged by the expectation check
  std::set<NodeId> excluded;  // flagged and then confirmed by the loss check
  ParamVector new_model;
  /// Per greedy iteration: every candidate's leave-one-out expectation value.
  std::vector<std::vector<std::pair<NodeId, double>>> expectation_trace;
};

/// w^t + unweighted mean of the deltas.
ParamVector average_updates(const std::map<NodeId, ParamVector>& deltas,
                            const ParamVector& w);

/// Gradient reconstruction: grad_i = -delta_i / eta_t.
std::map<NodeId, ParamVector> reconstruct_gradients(const RoundUpdates& updates);

/// Mean inner product between the set's mean gradient and each member:
/// (1/|A|) sum_i <mean(A), g_i>.
double expectation_term(const std::map<NodeId, ParamVector>& grads);

/// For each i in S, the expectation term over S \ {i}. Requires |S| >= 2.
std::map<NodeId, double> check_expectation(
    const std::map<NodeId, ParamVector>& grads);

struct CheckLossResult {
  double full = 0.0;     // loss of the model aggregated over all retained
  double reduced = 0.0;  // loss without the candidate
};

/// Builds the full and candidate-free aggregates and evaluates both on the
/// same batch.
CheckLossResult check_loss(const ModelSpec& spec, const RoundUpdates& updates,
                           const std::set<NodeId>& retained, NodeId candidate,
                           std::span<const LabeledExample> eval_batch);

/// Loss comparison hook for the greedy loop: both candidate aggregates are
/// evaluated on one fresh batch per call.
using PairEvaluator =
    std::function<CheckLossResult(const ParamVector& full_model,
                                  const ParamVector& reduced_model)>;

/// Standard evaluator: draws batch_size examples from test_pool per call and
/// scores both models with evaluate().
PairEvaluator make_eval_batch_loss(const ModelSpec& spec,
                                   std::span<const LabeledExample> test_pool,
                                   int batch_size, Rng& rng);

/// The greedy exclusion loop. Starting from all participants, repeatedly
/// flags the candidate whose removal maximizes the leave-one-out expectation
/// term (ties to the lowest id); stops when the best value does not exceed
/// the running baseline. A flagged candidate is excluded only when the
/// reduced aggregate's evaluation loss is strictly lower; otherwise the loop
/// stops with the candidate labeled but kept. Never retains fewer than
/// ceil(min_retained_fraction * |S_t|) nodes. Returns the retained set's
/// average as the new model.
AggregationOutcome optimal_aggregation(const RoundUpdates& updates,
                                       double min_retained_fraction,
                                       const PairEvaluator& evaluate_pair);

}  // namespace fedsim
