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

#include <iosfwd>
#include <string>
#include <vector>

#include "fedsim/orchestrator.hpp"

namespace fedsim {

/// One run's rows, flattened for export.
struct MetricsTable {
  std::string policy;
  std::uint64_t seed = 0;
  int num_nodes = 0;
  std::vector<RoundRecord> rows;
};

/// Fixed column schema:
///   round,policy,seed,train_loss,test_loss,test_acc,eta,n_labeled,
///   n_excluded,selected_ids,labeled_ids,excluded_ids,divergence,
///   p_0,...,p_{K-1}
/// Id lists are semicolon-joined ascending; divergence is empty when the
/// diagnostic is off.
std::string csv_header(int num_nodes);

void write_metrics_csv(std::ostream& out, const MetricsTable& table);

/// Column values for plotting. Valid names: train_loss, test_loss, test_acc,
/// eta, n_labeled, n_excluded, divergence. Anything else throws with the
/// valid list in the message.
std::vector<double> metric_values(const MetricsTable& table,
                                  const std::string& metric);

/// Canonical label for a (selection, aggregation) pair: fedavg, optagg,
/// fedpns, bn2, or "<selection>+<aggregation>" for other combinations.
std::string policy_label(const ExperimentConfig& cfg);

}  // namespace fedsim
