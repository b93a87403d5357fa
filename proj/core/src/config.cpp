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
#include "fedsim/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fedsim/format.hpp"

namespace fedsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

struct KeyContext {
  const std::string& origin;
  int line;
  const std::string& section;
  const std::string& key;

  [[noreturn]] void fail(const std::string& why) const {
    std::ostringstream msg;
    msg << origin << ":" << line << ": " << why << " for key '" << key
        << "' in [" << section << "]";
    throw ConfigError(msg.str(), line);
  }
};

long long parse_int(const KeyContext& ctx, std::string_view value) {
  long long out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    ctx.fail("expected an integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_real(const KeyContext& ctx, std::string_view value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    ctx.fail("expected a real number, got '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(const KeyContext& ctx, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  ctx.fail("expected true or false, got '" + std::string(value) + "'");
}

std::uint64_t parse_u64(const KeyContext& ctx, std::string_view value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    ctx.fail("expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text,
                                   const std::string& origin) {
  ExperimentConfig cfg;  // field initializers carry the standard defaults
  std::string section;
  int line_no = 0;

  std::string_view rest = text;
  while (!rest.empty()) {
    const std::size_t eol = rest.find('\n');
    std::string_view raw =
        eol == std::string_view::npos ? rest : rest.substr(0, eol);
    rest = eol == std::string_view::npos ? std::string_view{}
                                         : rest.substr(eol + 1);
    ++line_no;

    std::string_view line = raw;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": unterminated section header",
                          line_no);
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "experiment" && section != "data" && section != "model" &&
          section != "train" && section != "policy") {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": unknown section [" + section + "]",
                          line_no);
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                            ": expected key = value",
                        line_no);
    }
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                            ": key outside any section",
                        line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const KeyContext ctx{origin, line_no, section, key};

    if (section == "experiment") {
      if (key == "rounds") cfg.rounds = static_cast<int>(parse_int(ctx, value));
      else if (key == "seed") cfg.master_seed = parse_u64(ctx, value);
      else if (key == "aggregation") {
        if (value == "fedavg") cfg.aggregation = AggregationMode::kFedAvg;
        else if (value == "optagg") cfg.aggregation = AggregationMode::kOptimalAggregation;
        else ctx.fail("expected fedavg or optagg, got '" + value + "'");
      } else if (key == "min_retained_fraction") {
        cfg.min_retained_fraction = parse_real(ctx, value);
      } else if (key == "eval_batch_size") {
        cfg.eval_batch_size = static_cast<int>(parse_int(ctx, value));
      } else if (key == "track_divergence") {
        cfg.track_divergence = parse_bool(ctx, value);
      } else if (key == "track_grad_norms") {
        cfg.track_grad_norms = parse_bool(ctx, value);
      } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_int(ctx, value));
      } else ctx.fail("unknown key");
    } else if (section == "data") {
      if (key == "kind") {
        if (value == "synthetic") cfg.data.kind = DataKind::kSynthetic;
        else if (value == "skew_synthetic") cfg.data.kind = DataKind::kSkewSynthetic;
        else if (value == "skew_idx") cfg.data.kind = DataKind::kSkewIdx;
        else ctx.fail("expected synthetic, skew_synthetic or skew_idx");
      } else if (key == "num_nodes") {
        cfg.data.num_nodes = static_cast<int>(parse_int(ctx, value));
      } else if (key == "iid_fraction") {
        cfg.data.iid_fraction = parse_real(ctx, value);
      } else if (key == "heterogeneity") {
        cfg.data.heterogeneity = parse_real(ctx, value);
      } else if (key == "samples_per_node") {
        cfg.data.samples_per_node = static_cast<int>(parse_int(ctx, value));
      } else if (key == "feature_dim") {
        cfg.data.feature_dim = static_cast<int>(parse_int(ctx, value));
      } else if (key == "num_classes") {
        cfg.data.num_classes = static_cast<int>(parse_int(ctx, value));
      } else if (key == "labels_per_node") {
        cfg.data.labels_per_node = static_cast<int>(parse_int(ctx, value));
      } else if (key == "pool_size") {
        cfg.data.pool_size = static_cast<int>(parse_int(ctx, value));
      } else if (key == "test_pool_size") {
        cfg.data.test_pool_size = static_cast<int>(parse_int(ctx, value));
      } else if (key == "train_images") cfg.data.train_images = value;
      else if (key == "train_labels") cfg.data.train_labels = value;
      else if (key == "test_images") cfg.data.test_images = value;
      else if (key == "test_labels") cfg.data.test_labels = value;
      else ctx.fail("unknown key");
    } else if (section == "model") {
      if (key == "kind") {
        if (value == "mlr") cfg.model.kind = ModelKind::kMlr;
        else if (value == "mlp") cfg.model.kind = ModelKind::kMlp;
        else ctx.fail("expected mlr or mlp");
      } else if (key == "hidden_dim") {
        cfg.model.hidden_dim = static_cast<int>(parse_int(ctx, value));
      } else if (key == "init") {
        if (value == "normal") cfg.model.init = InitKind::kNormal;
        else if (value == "zero") cfg.model.init = InitKind::kZero;
        else ctx.fail("expected normal or zero");
      } else if (key == "init_scale") {
        cfg.model.init_scale = parse_real(ctx, value);
      } else ctx.fail("unknown key");
    } else if (section == "train") {
      if (key == "epochs") cfg.train.epochs = static_cast<int>(parse_int(ctx, value));
      else if (key == "batch_size") {
        cfg.train.batch_size = static_cast<int>(parse_int(ctx, value));
      } else if (key == "learning_rate") {
        cfg.train.learning_rate = parse_real(ctx, value);
      } else if (key == "lr_decay") cfg.lr_decay = parse_real(ctx, value);
      else ctx.fail("unknown key");
    } else if (section == "policy") {
      if (key == "name") {
        if (value == "random") cfg.selection.policy = PolicyKind::kRandom;
        else if (value == "fedpns") cfg.selection.policy = PolicyKind::kFedPns;
        else if (value == "bn2") cfg.selection.policy = PolicyKind::kBn2;
        else ctx.fail("expected random, fedpns or bn2");
      } else if (key == "alpha") {
        cfg.selection.alpha = static_cast<int>(parse_int(ctx, value));
      } else if (key == "beta") cfg.selection.beta = parse_real(ctx, value);
      else if (key == "fraction") cfg.selection.fraction = parse_real(ctx, value);
      else if (key == "macro_size") {
        cfg.selection.macro_size = static_cast<int>(parse_int(ctx, value));
      } else if (key == "probability_floor") {
        cfg.selection.probability_floor = parse_real(ctx, value);
      } else ctx.fail("unknown key");
    }
  }

  // Model input width follows the data section unless the file pinned it; the
  // two must agree, so derive the model dims from the data config here.
  cfg.model.input_dim = cfg.data.feature_dim;
  cfg.model.num_classes = cfg.data.num_classes;

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": invalid configuration: " + e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "rounds = " << cfg.rounds << "\n";
  out << "seed = " << cfg.master_seed << "\n";
  out << "aggregation = "
      << (cfg.aggregation == AggregationMode::kFedAvg ? "fedavg" : "optagg")
      << "\n";
  out << "min_retained_fraction = " << format_double(cfg.min_retained_fraction)
      << "\n";
  out << "eval_batch_size = " << cfg.eval_batch_size << "\n";
  out << "track_divergence = " << (cfg.track_divergence ? "true" : "false")
      << "\n";
  out << "track_grad_norms = " << (cfg.track_grad_norms ? "true" : "false")
      << "\n";
  out << "threads = " << cfg.threads << "\n";

  out << "\n[data]\n";
  out << "kind = ";
  switch (cfg.data.kind) {
    case DataKind::kSynthetic: out << "synthetic"; break;
    case DataKind::kSkewSynthetic: out << "skew_synthetic"; break;
    case DataKind::kSkewIdx: out << "skew_idx"; break;
  }
  out << "\n";
  out << "num_nodes = " << cfg.data.num_nodes << "\n";
  out << "iid_fraction = " << format_double(cfg.data.iid_fraction) << "\n";
  out << "heterogeneity = " << format_double(cfg.data.heterogeneity) << "\n";
  out << "samples_per_node = " << cfg.data.samples_per_node << "\n";
  out << "feature_dim = " << cfg.data.feature_dim << "\n";
  out << "num_classes = " << cfg.data.num_classes << "\n";
  out << "labels_per_node = " << cfg.data.labels_per_node << "\n";
  out << "pool_size = " << cfg.data.pool_size << "\n";
  out << "test_pool_size = " << cfg.data.test_pool_size << "\n";
  out << "train_images = " << cfg.data.train_images << "\n";
  out << "train_labels = " << cfg.data.train_labels << "\n";
  out << "test_images = " << cfg.data.test_images << "\n";
  out << "test_labels = " << cfg.data.test_labels << "\n";

  out << "\n[model]\n";
  out << "kind = " << (cfg.model.kind == ModelKind::kMlr ? "mlr" : "mlp")
      << "\n";
  out << "hidden_dim = " << cfg.model.hidden_dim << "\n";
  out << "init = " << (cfg.model.init == InitKind::kNormal ? "normal" : "zero")
      << "\n";
  out << "init_scale = " << format_double(cfg.model.init_scale) << "\n";

  out << "\n[train]\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
  out << "lr_decay = " << format_double(cfg.lr_decay) << "\n";

  out << "\n[policy]\n";
  out << "name = ";
  switch (cfg.selection.policy) {
    case PolicyKind::kRandom: out << "random"; break;
    case PolicyKind::kFedPns: out << "fedpns"; break;
    case PolicyKind::kBn2: out << "bn2"; break;
    case PolicyKind::kStratified:
      throw std::invalid_argument(
          "the stratified selector is not a configurable policy");
  }
  out << "\n";
  out << "alpha = " << cfg.selection.alpha << "\n";
  out << "beta = " << format_double(cfg.selection.beta) << "\n";
  out << "fraction = " << format_double(cfg.selection.fraction) << "\n";
  out << "macro_size = " << cfg.selection.macro_size << "\n";
  out << "probability_floor = "
      << format_double(cfg.selection.probability_floor) << "\n";
  return out.str();
}

}  // namespace fedsim
