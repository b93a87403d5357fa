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
#include "fedsim/metrics_io.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fedsim/format.hpp"

namespace fedsim {

namespace {

std::string join_ids(const std::set<NodeId>& ids) {
  std::ostringstream out;
  bool first = true;
  for (NodeId id : ids) {
    if (!first) out << ';';
    out << id;
    first = false;
  }
  return out.str();
}

}  // namespace

std::string csv_header(int num_nodes) {
  std::ostringstream out;
  out << "round,policy,seed,train_loss,test_loss,test_acc,eta,n_labeled,"
         "n_excluded,selected_ids,labeled_ids,excluded_ids,divergence";
  for (int i = 0; i < num_nodes; ++i) out << ",p_" << i;
  return out.str();
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << csv_header(table.num_nodes) << "\n";
  for (const RoundRecord& r : table.rows) {
    out << r.round << ',' << table.policy << ',' << table.seed << ','
        << format_double(r.train_loss) << ',' << format_double(r.test_loss)
        << ',' << format_double(r.test_accuracy) << ','
        << format_double(r.eta) << ',' << r.labeled.size() << ','
        << r.excluded.size() << ',' << join_ids(r.selected) << ','
        << join_ids(r.labeled) << ',' << join_ids(r.excluded) << ',';
    if (r.divergence.has_value()) out << format_double(*r.divergence);
    for (double p : r.probabilities) out << ',' << format_double(p);
    out << "\n";
  }
}

std::vector<double> metric_values(const MetricsTable& table,
                                  const std::string& metric) {
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (const RoundRecord& r : table.rows) {
    if (metric == "train_loss") values.push_back(r.train_loss);
    else if (metric == "test_loss") values.push_back(r.test_loss);
    else if (metric == "test_acc") values.push_back(r.test_accuracy);
    else if (metric == "eta") values.push_back(r.eta);
    else if (metric == "n_labeled") {
      values.push_back(static_cast<double>(r.labeled.size()));
    } else if (metric == "n_excluded") {
      values.push_back(static_cast<double>(r.excluded.size()));
    } else if (metric == "divergence") {
      values.push_back(r.divergence.value_or(0.0));
    } else {
      throw std::invalid_argument(
          "unknown metric '" + metric +
          "'; valid metrics: train_loss, test_loss, test_acc, eta, "
          "n_labeled, n_excluded, divergence");
    }
  }
  return values;
}

std::string policy_label(const ExperimentConfig& cfg) {
  const bool opt = cfg.aggregation == AggregationMode::kOptimalAggregation;
  switch (cfg.selection.policy) {
    case PolicyKind::kRandom: return opt ? "optagg" : "fedavg";
    case PolicyKind::kFedPns: return opt ? "fedpns" : "fedpns+fedavg";
    case PolicyKind::kBn2: return opt ? "bn2+optagg" : "bn2";
    case PolicyKind::kStratified:
      return opt ? "stratified+optagg" : "stratified+fedavg";
  }
  return "unknown";
}

}  // namespace fedsim
