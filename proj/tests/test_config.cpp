#include <doctest.h>

#include <string>

#include "fedsim/config.hpp"
#include "fedsim/manifest.hpp"

using namespace fedsim;

namespace {

const char* kMinimal = R"(
[data]
kind = synthetic
num_nodes = 20
feature_dim = 12
num_classes = 5
samples_per_node = 50

[policy]
)";

}  // namespace

TEST_CASE("missing keys take the standard defaults") {
  const ExperimentConfig cfg = parse_config_text(kMinimal, "test");
  CHECK(cfg.selection.policy == PolicyKind::kRandom);  // empty policy section
  CHECK(cfg.selection.fraction == 0.2);
  CHECK(cfg.selection.alpha == 2);
  CHECK(cfg.selection.beta == 0.7);
  CHECK(cfg.train.batch_size == 20);
  CHECK(cfg.train.learning_rate == 0.01);
  CHECK(cfg.lr_decay == 0.995);
  CHECK(cfg.min_retained_fraction == 0.7);
  CHECK(cfg.eval_batch_size == 128);
  CHECK(cfg.rounds == 200);
  CHECK(cfg.model.input_dim == 12);   // follows the data section
  CHECK(cfg.model.num_classes == 5);
}

TEST_CASE("alpha = 0 violates the positive-integer constraint") {
  const std::string text = std::string(kMinimal) + "\n[policy]\nalpha = 0\n";
  CHECK_THROWS_AS(parse_config_text(text, "test"), ConfigError);
}

TEST_CASE("unknown keys and sections are rejected with a line number") {
  const std::string text = "[data]\nkind = synthetic\nnonsense = 3\n";
  try {
    parse_config_text(text, "cfg.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("cfg.ini:3") != std::string::npos);
    CHECK(std::string(e.what()).find("nonsense") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[nope]\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[data]\nkind synthetic\n", "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("key = 1\n", "t"), ConfigError);
}

TEST_CASE("bad values name the key") {
  try {
    parse_config_text("[train]\nepochs = soon\n", "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epochs") != std::string::npos);
  }
}

TEST_CASE("serialize/parse round trip is exact") {
  ExperimentConfig cfg = parse_config_text(kMinimal, "test");
  cfg.selection.policy = PolicyKind::kFedPns;
  cfg.aggregation = AggregationMode::kOptimalAggregation;
  cfg.train.learning_rate = 0.0123456789012345;
  cfg.lr_decay = 0.995;
  cfg.master_seed = 0xdeadbeefcafeULL;
  cfg.data.kind = DataKind::kSkewSynthetic;
  cfg.data.labels_per_node = 2;
  cfg.data.pool_size = 4000;
  cfg.data.test_pool_size = 500;
  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config_text(text, "roundtrip");
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("comments and blank lines are ignored") {
  const std::string text =
      "# leading comment\n\n[data]\nkind = synthetic  # trailing\n"
      "num_nodes = 10\nsamples_per_node = 30\nfeature_dim = 6\n"
      "num_classes = 3\n; another comment\n";
  const ExperimentConfig cfg = parse_config_text(text, "test");
  CHECK(cfg.data.num_nodes == 10);
}

TEST_CASE("config digest is stable under key reordering") {
  const char* a =
      "[data]\nkind = synthetic\nnum_nodes = 20\nfeature_dim = 12\n"
      "num_classes = 5\nsamples_per_node = 50\n\n[train]\nepochs = 2\n"
      "batch_size = 10\n";
  const char* b =
      "[train]\nbatch_size = 10\nepochs = 2\n\n[data]\nsamples_per_node = 50\n"
      "num_classes = 5\nfeature_dim = 12\nnum_nodes = 20\nkind = synthetic\n";
  const auto ca = parse_config_text(a, "a");
  const auto cb = parse_config_text(b, "b");
  CHECK(ca == cb);
  CHECK(config_digest(ca) == config_digest(cb));
  CHECK(config_digest(ca).size() == 64);  // sha-256 hex

  ExperimentConfig changed = ca;
  changed.train.epochs = 3;
  CHECK(config_digest(changed) != config_digest(ca));
}
