#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "fedsim/models.hpp"

using namespace fedsim;

namespace {

// Independent oracle: central finite differences of the batch loss.
ParamVector fd_gradient(const ModelSpec& spec, const ParamVector& w,
                        std::span<const LabeledExample> batch,
                        double step = 1e-6) {
  ParamVector g(w.size());
  ParamVector probe = w;
  for (std::size_t k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + step;
    const double up = loss_and_gradient(spec, probe, batch).loss;
    probe[k] = w[k] - step;
    const double down = loss_and_gradient(spec, probe, batch).loss;
    probe[k] = w[k];
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_relative_error(const ParamVector& a, const ParamVector& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double denom = std::max({1.0, std::abs(a[k]), std::abs(b[k])});
    worst = std::max(worst, std::abs(a[k] - b[k]) / denom);
  }
  return worst;
}

std::vector<LabeledExample> random_batch(Rng& rng, int n, int dim,
                                         int classes) {
  std::vector<LabeledExample> batch;
  for (int i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.features.resize(dim);
    for (double& f : ex.features) f = rng.normal();
    ex.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    batch.push_back(std::move(ex));
  }
  return batch;
}

}  // namespace

TEST_CASE("zero-weight MLR predicts the uniform distribution") {
  ModelSpec spec;
  spec.kind = ModelKind::kMlr;
  spec.input_dim = 4;
  spec.num_classes = 10;
  ParamVector w(spec.param_count());
  const std::vector<double> x{0.3, -1.0, 2.0, 0.0};
  const auto probs = predict_proba(spec, w, x);
  REQUIRE(probs.size() == 10);
  double sum = 0.0;
  for (double p : probs) {
    CHECK(p == doctest::Approx(0.1).epsilon(1e-12));
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("logits (0, ln 3) map to probabilities (0.25, 0.75)") {
  ModelSpec spec;
  spec.kind = ModelKind::kMlr;
  spec.input_dim = 1;
  spec.num_classes = 2;
  ParamVector w(spec.param_count());
  w[0] = 0.0;                      // weight row for class 0
  w[1] = 1.0986122886681098;       // ln 3, weight row for class 1
  const std::vector<double> x{1.0};
  const auto probs = predict_proba(spec, w, x);
  CHECK(probs[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax is invariant to a constant logit shift") {
  ModelSpec spec;
  spec.kind = ModelKind::kMlr;
  spec.input_dim = 3;
  spec.num_classes = 4;
  Rng rng(2);
  ParamVector w = init_params(spec, rng);
  ParamVector shifted = w;
  for (int c = 0; c < 4; ++c) shifted[3 * 4 + c] += 7.0;  // every bias
  const std::vector<double> x{0.5, -0.2, 1.5};
  const auto a = predict_proba(spec, w, x);
  const auto b = predict_proba(spec, shifted, x);
  for (int c = 0; c < 4; ++c) {
    CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
  }
}

TEST_CASE("predict_proba rejects non-finite features") {
  ModelSpec spec;
  spec.input_dim = 2;
  spec.num_classes = 2;
  ParamVector w(spec.param_count());
  const std::vector<double> x{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(predict_proba(spec, w, x), std::invalid_argument);
}

TEST_CASE("zero weights give loss ln C") {
  ModelSpec spec;
  spec.input_dim = 6;
  spec.num_classes = 10;
  ParamVector w(spec.param_count());
  Rng rng(4);
  const auto batch = random_batch(rng, 16, 6, 10);
  const auto lg = loss_and_gradient(spec, w, batch);
  CHECK(lg.loss == doctest::Approx(2.302585092994046).epsilon(1e-12));
}

TEST_CASE("a perfect prediction contributes no loss and no gradient") {
  ModelSpec spec;
  spec.input_dim = 1;
  spec.num_classes = 2;
  ParamVector w(spec.param_count());
  w[1] = 200.0;  // class-1 logit dwarfs class 0
  std::vector<LabeledExample> batch{{{1.0}, 1}};
  const auto lg = loss_and_gradient(spec, w, batch);
  CHECK(std::abs(lg.loss) <= 1e-12);
  for (std::size_t k = 0; k < lg.grad.size(); ++k) {
    CHECK(std::abs(lg.grad[k]) <= 1e-12);
  }
}

TEST_CASE("analytic gradients match finite differences (MLR and MLP)") {
  Rng rng(100);
  for (int trial = 0; trial < 12; ++trial) {
    ModelSpec spec;
    spec.kind = ModelKind::kMlr;
    spec.input_dim = 2 + static_cast<int>(rng.below(4));
    spec.num_classes = 2 + static_cast<int>(rng.below(3));
    spec.init_scale = 0.3;
    ParamVector w = init_params(spec, rng);
    const auto batch =
        random_batch(rng, 3 + static_cast<int>(rng.below(5)), spec.input_dim,
                     spec.num_classes);
    const auto lg = loss_and_gradient(spec, w, batch);
    const auto fd = fd_gradient(spec, w, batch);
    CHECK(max_relative_error(lg.grad, fd) <= 1e-6);
  }
  for (int trial = 0; trial < 12; ++trial) {
    ModelSpec spec;
    spec.kind = ModelKind::kMlp;
    spec.input_dim = 2 + static_cast<int>(rng.below(3));
    spec.num_classes = 2 + static_cast<int>(rng.below(3));
    spec.hidden_dim = 2 + static_cast<int>(rng.below(4));
    spec.init_scale = 0.3;
    ParamVector w = init_params(spec, rng);
    const auto batch =
        random_batch(rng, 4, spec.input_dim, spec.num_classes);
    const auto lg = loss_and_gradient(spec, w, batch);
    const auto fd = fd_gradient(spec, w, batch);
    CHECK(max_relative_error(lg.grad, fd) <= 1e-6);
  }
}

TEST_CASE("MLR loss is convex along random segments") {
  ModelSpec spec;
  spec.input_dim = 5;
  spec.num_classes = 3;
  spec.init_scale = 0.5;
  Rng rng(7);
  const auto data = random_batch(rng, 32, 5, 3);
  for (int trial = 0; trial < 20; ++trial) {
    ParamVector w1 = init_params(spec, rng);
    ParamVector w2 = init_params(spec, rng);
    const double lambda = rng.uniform01();
    ParamVector mix(w1.size());
    for (std::size_t k = 0; k < mix.size(); ++k) {
      mix[k] = lambda * w1[k] + (1.0 - lambda) * w2[k];
    }
    const double f1 = loss_and_gradient(spec, w1, data).loss;
    const double f2 = loss_and_gradient(spec, w2, data).loss;
    const double fm = loss_and_gradient(spec, mix, data).loss;
    CHECK(fm <= lambda * f1 + (1.0 - lambda) * f2 + 1e-9);
  }
}

TEST_CASE("local_train with zero learning rate does not move") {
  ModelSpec spec;
  spec.input_dim = 3;
  spec.num_classes = 2;
  Rng rng(8);
  const ParamVector w = init_params(spec, rng);
  const auto data = random_batch(rng, 10, 3, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.0;
  Rng train_rng(1);
  const auto result = local_train(spec, w, data, cfg, train_rng);
  for (std::size_t k = 0; k < result.delta.size(); ++k) {
    CHECK(result.delta[k] == 0.0);
  }
}

TEST_CASE("single full-batch step equals -eta * gradient") {
  ModelSpec spec;
  spec.input_dim = 4;
  spec.num_classes = 3;
  spec.init_scale = 0.1;
  Rng rng(9);
  const ParamVector w = init_params(spec, rng);
  const auto data = random_batch(rng, 8, 4, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 64;  // >= |data| so the epoch is one batch
  cfg.learning_rate = 0.05;
  Rng train_rng(2);
  const auto result = local_train(spec, w, data, cfg, train_rng);
  const auto lg = loss_and_gradient(spec, w, data);
  for (std::size_t k = 0; k < result.delta.size(); ++k) {
    CHECK(result.delta[k] ==
          doctest::Approx(-cfg.learning_rate * lg.grad[k]).epsilon(1e-12));
  }
}

TEST_CASE("doubling epochs at a tiny rate roughly doubles the update") {
  ModelSpec spec;
  spec.input_dim = 4;
  spec.num_classes = 3;
  spec.init_scale = 0.1;
  Rng rng(10);
  const ParamVector w = init_params(spec, rng);
  const auto data = random_batch(rng, 12, 4, 3);
  TrainConfig one;
  one.epochs = 1;
  one.batch_size = 4;
  one.learning_rate = 1e-7;
  TrainConfig two = one;
  two.epochs = 2;
  Rng ra(3), rb(3);
  const auto da = local_train(spec, w, data, one, ra).delta;
  const auto db = local_train(spec, w, data, two, rb).delta;
  CHECK(norm(db) == doctest::Approx(2.0 * norm(da)).epsilon(0.05));
}

TEST_CASE("local_train is bit-deterministic and reconstructs exactly") {
  ModelSpec spec;
  spec.input_dim = 5;
  spec.num_classes = 4;
  Rng rng(11);
  const ParamVector w = init_params(spec, rng);
  const auto data = random_batch(rng, 23, 5, 4);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 5;
  cfg.learning_rate = 0.02;
  Rng ra(6), rb(6);
  const auto a = local_train(spec, w, data, cfg, ra);
  const auto b = local_train(spec, w, data, cfg, rb);
  CHECK(a.delta == b.delta);
  CHECK(a.local_model == b.local_model);
  CHECK(w + a.delta == a.local_model);  // exact by construction
}

TEST_CASE("evaluate matches the shared loss definition and counts argmax") {
  ModelSpec spec;
  spec.input_dim = 2;
  spec.num_classes = 2;
  ParamVector w(spec.param_count());

  SUBCASE("zero weights break ties toward class 0") {
    std::vector<LabeledExample> data{
        {{0.0, 0.0}, 0}, {{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}, {{1.0, 1.0}, 1}};
    const auto result = evaluate(spec, w, data);
    CHECK(result.accuracy == 0.5);  // class-0 prevalence
  }
  SUBCASE("three of four correct") {
    // Weight row for class 1 keys on the first feature.
    w[2] = 5.0;
    w[3] = 0.0;
    std::vector<LabeledExample> data{
        {{1.0, 0.0}, 1}, {{1.0, 0.0}, 1}, {{-1.0, 0.0}, 0}, {{1.0, 0.0}, 0}};
    const auto result = evaluate(spec, w, data);
    CHECK(result.accuracy == doctest::Approx(0.75));
  }
  SUBCASE("loss agrees with loss_and_gradient") {
    Rng rng(12);
    const auto data = random_batch(rng, 40, 2, 2);
    ParamVector wr = init_params(spec, rng);
    const double via_eval = evaluate(spec, wr, data).loss;
    const double via_grad = loss_and_gradient(spec, wr, data).loss;
    CHECK(via_eval == doctest::Approx(via_grad).epsilon(1e-12));
  }
  SUBCASE("empty data is an error") {
    std::vector<LabeledExample> empty;
    CHECK_THROWS_AS(evaluate(spec, w, empty), std::invalid_argument);
  }
}

TEST_CASE("MLP parameter count and layout") {
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.input_dim = 7;
  spec.num_classes = 3;
  spec.hidden_dim = 5;
  CHECK(spec.param_count() == 5 * 7 + 5 + 3 * 5 + 3);
  const auto layout = spec.layout();
  REQUIRE(layout.size() == 4);
  CHECK(layout[0].name == "hidden_weight");
  CHECK(layout[3].offset == 5 * 7 + 5 + 3 * 5);
}

TEST_CASE("param vector serialization round-trips bit-exactly") {
  ParamVector v(5);
  v[0] = 1.5;
  v[1] = -0.0;
  v[2] = 3.141592653589793;
  v[3] = 1e-300;
  v[4] = -7.25e100;
  std::stringstream buf;
  write_param_vector(buf, v);
  const ParamVector back = read_param_vector(buf);
  CHECK(back == v);
}
