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
#include <map>
#include <set>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

/// Per-node selection probabilities and the counters that drive them.
struct NodeStats {
  std::vector<double> probability;
  std::vector<std::int64_t> times_selected;
  std::vector<std::int64_t> times_labeled;
  std::vector<std::int64_t> times_excluded;

  static NodeStats uniform(int num_nodes);
  int size() const { return static_cast<int>(probability.size()); }

  bool operator==(const NodeStats&) const = default;
};

enum class PolicyKind {
  kRandom,
  kFedPns,
  kBn2,
  /// Half the draw from IID nodes, half from non-IID nodes. Used by paired
  /// aggregation experiments; not accepted by the config parser.
  kStratified,
};

struct SelectionPolicyConfig {
  PolicyKind policy = PolicyKind::kRandom;
  int alpha = 2;
  double beta = 0.7;
  double fraction = 0.2;  // c: |S_t| = round(c * |K|)
  int macro_size = 20;    // BN2 |M|
  double probability_floor = 0.0;

  int selection_count(int num_nodes) const;
  void validate(int num_nodes) const;

  bool operator==(const SelectionPolicyConfig&) const = default;
};

/// min((x + beta)^alpha, 1) for a labeled ratio x in (0, 1].
double decrement_factor(double x, int alpha, double beta);

/// Applies the probability decrement to every labeled node (ratio x_i =
/// times_labeled_i / times_selected_i, counters already covering this round)
/// and spreads the removed mass equally over all other nodes. Clipping at
/// `floor` redistributes only the mass actually removed, so the simplex sum
/// is preserved.
NodeStats update_probabilities(const NodeStats& stats,
                               const std::set<NodeId>& labeled, int alpha,
                               double beta, double floor);

/// Sequential weighted sampling without replacement: draw proportional to the
/// remaining probabilities, remove, repeat m times.
std::set<NodeId> sample_nodes(const NodeStats& stats, int m, Rng& rng);

/// The m nodes with the largest gradient norm; ties to the lowest id.
std::set<NodeId> select_bn2(const std::map<NodeId, double>& grad_norms, int m);

/// Uniform selection without replacement over [0, num_nodes).
std::set<NodeId> select_random(int num_nodes, int m, Rng& rng);

}  // namespace fedsim
