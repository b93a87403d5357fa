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
#include "fedsim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedsim {

NodeStats NodeStats::uniform(int num_nodes) {
  if (num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  NodeStats s;
  s.probability.assign(num_nodes, 1.0 / static_cast<double>(num_nodes));
  s.times_selected.assign(num_nodes, 0);
  s.times_labeled.assign(num_nodes, 0);
  s.times_excluded.assign(num_nodes, 0);
  return s;
}

int SelectionPolicyConfig::selection_count(int num_nodes) const {
  return static_cast<int>(std::lround(fraction * num_nodes));
}

void SelectionPolicyConfig::validate(int num_nodes) const {
  if (alpha < 1) throw std::invalid_argument("alpha must be a positive integer");
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("beta must lie in [0, 1]");
  }
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("fraction must lie in (0, 1]");
  }
  if (probability_floor < 0.0) {
    throw std::invalid_argument("probability_floor must be >= 0");
  }
  const int m = selection_count(num_nodes);
  if (m < 1) {
    throw std::invalid_argument("fraction selects zero nodes from " +
                                std::to_string(num_nodes));
  }
  if (policy == PolicyKind::kBn2 && macro_size < m) {
    throw std::invalid_argument("macro_size must be >= the selection count");
  }
  if (policy == PolicyKind::kBn2 && macro_size > num_nodes) {
    throw std::invalid_argument("macro_size must be <= num_nodes");
  }
}

double decrement_factor(double x, int alpha, double beta) {
  if (!(x > 0.0) || x > 1.0) {
    throw std::invalid_argument("labeled ratio x must lie in (0, 1]");
  }
  if (alpha < 1) throw std::invalid_argument("alpha must be a positive integer");
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("beta must lie in [0, 1]");
  }
  return std::min(std::pow(x + beta, static_cast<double>(alpha)), 1.0);
}

NodeStats update_probabilities(const NodeStats& stats,
                               const std::set<NodeId>& labeled, int alpha,
                               double beta, double floor) {
  const int n = stats.size();
  if (static_cast<int>(labeled.size()) >= n) {
    throw std::invalid_argument(
        "cannot redistribute: every node was labeled");
  }
  if (floor < 0.0) throw std::invalid_argument("floor must be >= 0");

  NodeStats out = stats;
  if (labeled.empty()) return out;

  double removed_total = 0.0;
  for (NodeId id : labeled) {
    if (id < 0 || id >= n) {
      throw std::invalid_argument("labeled node id out of range");
    }
    if (stats.times_selected[id] <= 0 || stats.times_labeled[id] <= 0) {
      throw std::invalid_argument(
          "labeled node " + std::to_string(id) +
          " has no selection/label counts for this round");
    }
    const double x = static_cast<double>(stats.times_labeled[id]) /
                     static_cast<double>(stats.times_selected[id]);
    const double decrement =
        stats.probability[id] * decrement_factor(x, alpha, beta);
    const double updated = std::max(stats.probability[id] - decrement, floor);
    removed_total += stats.probability[id] - updated;
    out.probability[id] = updated;
  }

  const double share =
      removed_total / static_cast<double>(n - static_cast<int>(labeled.size()));
  for (int id = 0; id < n; ++id) {
    if (!labeled.contains(id)) out.probability[id] += share;
  }
  return out;
}

std::set<NodeId> sample_nodes(const NodeStats& stats, int m, Rng& rng) {
  const int n = stats.size();
  if (m < 1) throw std::invalid_argument("selection count must be >= 1");
  int positive = 0;
  for (double p : stats.probability) {
    if (p < 0.0) throw std::invalid_argument("negative selection probability");
    if (p > 0.0) ++positive;
  }
  if (positive < m) {
    throw std::invalid_argument(
        "cannot draw " + std::to_string(m) + " nodes: only " +
        std::to_string(positive) + " have positive probability");
  }

  std::vector<NodeId> candidates;
  std::vector<double> weights;
  candidates.reserve(n);
  for (int id = 0; id < n; ++id) {
    if (stats.probability[id] > 0.0) {
      candidates.push_back(id);
      weights.push_back(stats.probability[id]);
    }
  }

  std::set<NodeId> chosen;
  for (int draw = 0; draw < m; ++draw) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = rng.uniform01() * total;
    double cum = 0.0;
    std::size_t pick = weights.size() - 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cum += weights[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    chosen.insert(candidates[pick]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return chosen;
}

std::set<NodeId> select_bn2(const std::map<NodeId, double>& grad_norms, int m) {
  if (m < 0 || static_cast<std::size_t>(m) > grad_norms.size()) {
    throw std::invalid_argument("selection count exceeds macro set size");
  }
  std::vector<std::pair<NodeId, double>> ranked(grad_norms.begin(),
                                                grad_norms.end());
  // Descending norm; stable keeps the lowest id first among ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  std::set<NodeId> chosen;
  for (int i = 0; i < m; ++i) chosen.insert(ranked[i].first);
  return chosen;
}

std::set<NodeId> select_random(int num_nodes, int m, Rng& rng) {
  NodeStats uniform = NodeStats::uniform(num_nodes);
  return sample_nodes(uniform, m, rng);
}

}  // namespace fedsim
