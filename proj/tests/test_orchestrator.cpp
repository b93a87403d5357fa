#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fedsim/orchestrator.hpp"

using namespace fedsim;

namespace {

std::vector<LabeledExample> toy_examples(Rng& rng, int n, int dim,
                                         int classes) {
  std::vector<LabeledExample> out;
  for (int i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.features.resize(dim);
    for (double& f : ex.features) f = rng.normal();
    ex.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    out.push_back(std::move(ex));
  }
  return out;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.data.kind = DataKind::kSynthetic;
  cfg.data.num_nodes = 10;
  cfg.data.iid_fraction = 0.5;
  cfg.data.heterogeneity = 1.0;
  cfg.data.samples_per_node = 40;
  cfg.data.feature_dim = 8;
  cfg.data.num_classes = 4;
  cfg.model.kind = ModelKind::kMlr;
  cfg.model.input_dim = 8;
  cfg.model.num_classes = 4;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 8;
  cfg.train.learning_rate = 0.05;
  cfg.selection.fraction = 0.4;  // |S_t| = 4
  cfg.rounds = 5;
  cfg.eval_batch_size = 16;
  cfg.master_seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("global_train_loss is the equal-weight mean of node losses") {
  ModelSpec spec;
  spec.input_dim = 4;
  spec.num_classes = 3;
  Rng rng(1);
  const ParamVector w = init_params(spec, rng);

  std::vector<NodeDataset> nodes(2);
  nodes[0].node_id = 0;
  nodes[0].train = toy_examples(rng, 12, 4, 3);
  nodes[1].node_id = 1;
  nodes[1].train = toy_examples(rng, 12, 4, 3);

  const double a = evaluate(spec, w, nodes[0].train).loss;
  const double b = evaluate(spec, w, nodes[1].train).loss;
  CHECK(global_train_loss(spec, w, nodes) ==
        doctest::Approx((a + b) / 2.0).epsilon(1e-15));

  SUBCASE("single node reduces to its own loss") {
    std::vector<NodeDataset> one{nodes[0]};
    CHECK(global_train_loss(spec, w, one) == a);
  }
  SUBCASE("equal node sizes match the pooled-data mean cross entropy") {
    std::vector<LabeledExample> pooled = nodes[0].train;
    pooled.insert(pooled.end(), nodes[1].train.begin(), nodes[1].train.end());
    CHECK(global_train_loss(spec, w, nodes) ==
          doctest::Approx(evaluate(spec, w, pooled).loss).epsilon(1e-12));
  }
}

TEST_CASE("centralized_step") {
  ModelSpec spec;
  spec.input_dim = 3;
  spec.num_classes = 2;
  Rng rng(2);
  const ParamVector w0 = init_params(spec, rng);
  const auto data = toy_examples(rng, 12, 3, 2);

  SUBCASE("zero learning rate returns the synchronization point") {
    CentralizedReference ref;
    ref.pooled = data;
    Rng step_rng(3);
    const ParamVector v = centralized_step(spec, ref, w0, 0.0, 5, 6, step_rng);
    CHECK(v == w0);
  }
  SUBCASE("single-node pooling replays that node's SGD exactly") {
    CentralizedReference ref;
    ref.pooled = data;
    Rng r1(42);
    const ParamVector v = centralized_step(spec, ref, w0, 0.02, 5, 6, r1);

    ParamVector manual = w0;
    Rng r2(42);
    sgd_steps(spec, manual, data, 5, 0.02, 6, r2);
    CHECK(v == manual);

    TrainConfig cfg;
    cfg.epochs = 2;  // ceil(12/5) * 2 = 6 steps, matching above
    cfg.batch_size = 5;
    cfg.learning_rate = 0.02;
    Rng r3(42);
    const auto local = local_train(spec, w0, data, cfg, r3);
    for (std::size_t k = 0; k < v.size(); ++k) {
      CHECK(local.local_model[k] == doctest::Approx(v[k]).epsilon(1e-13));
    }
  }
  SUBCASE("symmetric replicas keep the divergence at the rounding floor") {
    // Three nodes with the same dataset and the same substream produce the
    // same local model; pooling the three copies gives the same full-batch
    // gradient, so the centralized trajectory coincides.
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 64;  // full batch for both sides
    cfg.learning_rate = 0.05;
    std::map<NodeId, ParamVector> deltas;
    for (int i = 0; i < 3; ++i) {
      Rng node_rng(99);
      deltas.emplace(i, local_train(spec, w0, data, cfg, node_rng).delta);
    }
    const ParamVector w_fl = average_updates(deltas, w0);

    CentralizedReference ref;
    for (int copy = 0; copy < 3; ++copy) {
      ref.pooled.insert(ref.pooled.end(), data.begin(), data.end());
    }
    Rng central_rng(100);
    const ParamVector v =
        centralized_step(spec, ref, w0, 0.05, 64, 2, central_rng);
    CHECK(weight_divergence(w_fl, v) <= 1e-12);
  }
}

TEST_CASE("weight_divergence") {
  CHECK(weight_divergence(ParamVector(3), ParamVector(3)) == 0.0);
  ParamVector a(2), b(2);
  b[0] = 3.0;
  b[1] = 4.0;
  CHECK(weight_divergence(a, b) == 5.0);
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    ParamVector x(4), y(4);
    for (std::size_t k = 0; k < 4; ++k) {
      x[k] = rng.normal();
      y[k] = rng.normal();
    }
    CHECK(weight_divergence(x, y) >= 0.0);
  }
}

TEST_CASE("random selection with plain averaging keeps probabilities uniform") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection.policy = PolicyKind::kRandom;
  cfg.aggregation = AggregationMode::kFedAvg;
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 5);
  for (const auto& r : records) {
    CHECK(r.labeled.empty());
    CHECK(r.excluded.empty());
    for (double p : r.probabilities) CHECK(p == 0.1);
  }
}

TEST_CASE("identical node datasets are never flagged") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection.policy = PolicyKind::kFedPns;
  cfg.aggregation = AggregationMode::kOptimalAggregation;
  cfg.train.batch_size = 64;  // full batch: per-node updates are bit-equal
  cfg.train.epochs = 1;
  cfg.rounds = 6;

  Rng rng(8);
  const auto shared = toy_examples(rng, 30, 8, 4);
  BuiltData data;
  data.nodes.resize(10);
  for (int i = 0; i < 10; ++i) {
    data.nodes[i].node_id = i;
    data.nodes[i].is_iid = true;
    data.nodes[i].train = shared;
    data.nodes[i].test = shared;
  }
  data.test_pool = shared;

  Experiment experiment(cfg, std::move(data));
  for (int t = 0; t < cfg.rounds; ++t) {
    const auto record = experiment.run_round();
    CHECK(record.labeled.empty());
    for (double p : record.probabilities) CHECK(p == 0.1);
  }
}

TEST_CASE("experiment boundaries and determinism") {
  SUBCASE("zero rounds are rejected") {
    ExperimentConfig cfg = tiny_config();
    cfg.rounds = 0;
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  }
  SUBCASE("one round returns exactly one record") {
    ExperimentConfig cfg = tiny_config();
    cfg.rounds = 1;
    CHECK(run_experiment(cfg).size() == 1);
  }
  SUBCASE("identical configs give bit-identical record sequences") {
    ExperimentConfig cfg = tiny_config();
    cfg.selection.policy = PolicyKind::kFedPns;
    cfg.aggregation = AggregationMode::kOptimalAggregation;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].train_loss == b[i].train_loss);
      CHECK(a[i].test_loss == b[i].test_loss);
      CHECK(a[i].test_accuracy == b[i].test_accuracy);
      CHECK(a[i].selected == b[i].selected);
      CHECK(a[i].labeled == b[i].labeled);
      CHECK(a[i].excluded == b[i].excluded);
      CHECK(a[i].probabilities == b[i].probabilities);
    }
  }
  SUBCASE("worker count does not change the records") {
    ExperimentConfig cfg = tiny_config();
    cfg.aggregation = AggregationMode::kOptimalAggregation;
    cfg.threads = 1;
    const auto a = run_experiment(cfg);
    cfg.threads = 4;
    const auto b = run_experiment(cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].train_loss == b[i].train_loss);
      CHECK(a[i].probabilities == b[i].probabilities);
    }
  }
}

TEST_CASE("paired runs share selections across aggregation modes") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection.policy = PolicyKind::kRandom;
  cfg.aggregation = AggregationMode::kFedAvg;
  const auto fedavg = run_experiment(cfg);
  cfg.aggregation = AggregationMode::kOptimalAggregation;
  const auto optagg = run_experiment(cfg);
  REQUIRE(fedavg.size() == optagg.size());
  for (std::size_t i = 0; i < fedavg.size(); ++i) {
    CHECK(fedavg[i].selected == optagg[i].selected);
  }
}

TEST_CASE("paired policies see the same data and learning-rate schedule") {
  ExperimentConfig cfg = tiny_config();
  Experiment a(cfg);
  ExperimentConfig cfg2 = cfg;
  cfg2.selection.policy = PolicyKind::kFedPns;
  cfg2.aggregation = AggregationMode::kOptimalAggregation;
  Experiment b(cfg2);
  REQUIRE(a.nodes().size() == b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    CHECK(a.nodes()[i].train == b.nodes()[i].train);
  }
  CHECK(a.global_model() == b.global_model());
  for (int t = 0; t < 10; ++t) {
    CHECK(a.learning_rate(t) ==
          cfg.train.learning_rate * std::pow(cfg.lr_decay, t));
  }
}

TEST_CASE("selection counters accumulate t * |S_t|") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection.policy = PolicyKind::kFedPns;
  cfg.aggregation = AggregationMode::kOptimalAggregation;
  cfg.rounds = 8;
  Experiment experiment(cfg);
  experiment.run_all();
  const auto& stats = experiment.stats();
  const std::int64_t total = std::accumulate(stats.times_selected.begin(),
                                             stats.times_selected.end(),
                                             std::int64_t{0});
  CHECK(total == 8 * 4);
  for (int i = 0; i < stats.size(); ++i) {
    CHECK(stats.times_labeled[i] <= stats.times_selected[i]);
    CHECK(stats.times_excluded[i] <= stats.times_labeled[i]);
  }
}

TEST_CASE("eta decays multiplicatively and is logged per round") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 6;
  const auto records = run_experiment(cfg);
  for (int t = 0; t < 6; ++t) {
    CHECK(records[t].eta ==
          cfg.train.learning_rate * std::pow(cfg.lr_decay, t));
  }
}

TEST_CASE("stratified selection takes half iid and half non-iid") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection.policy = PolicyKind::kStratified;
  cfg.data.iid_fraction = 0.5;
  Experiment experiment(cfg);
  for (int t = 0; t < 4; ++t) {
    const auto record = experiment.run_round();
    int iid = 0;
    for (NodeId id : record.selected) {
      if (id < 5) ++iid;  // the first half of the ids are the iid nodes
    }
    CHECK(iid == 2);
    CHECK(record.selected.size() == 4);
  }
}

TEST_CASE("bn2 trains the macro set and keeps the top norms") {
  ExperimentConfig cfg = tiny_config();
  cfg.selection.policy = PolicyKind::kBn2;
  cfg.selection.macro_size = 8;
  cfg.aggregation = AggregationMode::kFedAvg;
  Experiment experiment(cfg);
  const auto record = experiment.run_round();
  CHECK(record.selected.size() == 4);
  CHECK(record.grad_norms.size() == 8);  // the whole macro set trained
  double weakest_selected = 1e300;
  for (NodeId id : record.selected) {
    REQUIRE(record.grad_norms.contains(id));
    weakest_selected = std::min(weakest_selected, record.grad_norms.at(id));
  }
  for (const auto& [id, g] : record.grad_norms) {
    if (!record.selected.contains(id)) CHECK(g <= weakest_selected);
  }
}

TEST_CASE("divergence diagnostic produces finite values and trains all nodes") {
  ExperimentConfig cfg = tiny_config();
  cfg.track_divergence = true;
  cfg.rounds = 3;
  const auto records = run_experiment(cfg);
  for (const auto& r : records) {
    REQUIRE(r.divergence.has_value());
    CHECK(*r.divergence >= 0.0);
    CHECK(std::isfinite(*r.divergence));
    CHECK(r.grad_norms.size() == 10);  // every node trained
  }
}

TEST_CASE("skew-synthetic data wiring") {
  ExperimentConfig cfg = tiny_config();
  cfg.data.kind = DataKind::kSkewSynthetic;
  cfg.data.labels_per_node = 2;
  cfg.data.num_classes = 4;
  cfg.data.pool_size = 2000;
  cfg.data.test_pool_size = 300;
  Experiment experiment(cfg);
  CHECK(experiment.test_pool().size() == 300);
  for (const auto& node : experiment.nodes()) {
    CHECK(node.train.size() == 40);
    if (!node.is_iid) {
      std::set<int> labels;
      for (const auto& ex : node.train) labels.insert(ex.label);
      CHECK(labels.size() == 2);
    }
  }
}

TEST_CASE("model and data dimensions must agree") {
  ExperimentConfig cfg = tiny_config();
  cfg.model.input_dim = 9;  // data has 8 features
  CHECK_THROWS(Experiment{cfg});
}
