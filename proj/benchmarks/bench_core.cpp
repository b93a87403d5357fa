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
#include <benchmark/benchmark.h>

#include "fedsim/aggregation.hpp"
#include "fedsim/models.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/selection.hpp"

using namespace fedsim;

namespace {

std::vector<LabeledExample> bench_batch(int n, int dim, int classes,
                                        std::uint64_t seed) {
  Rng rng(seed);
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

void BM_LossGradMlr(benchmark::State& state) {
  ModelSpec spec;
  spec.kind = ModelKind::kMlr;
  spec.input_dim = 60;
  spec.num_classes = 10;
  Rng rng(1);
  const ParamVector w = init_params(spec, rng);
  const auto batch = bench_batch(static_cast<int>(state.range(0)), 60, 10, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(spec, w, batch));
  }
}
BENCHMARK(BM_LossGradMlr)->Arg(20)->Arg(128);

void BM_LossGradMlp(benchmark::State& state) {
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.input_dim = 60;
  spec.num_classes = 10;
  spec.hidden_dim = 64;
  Rng rng(1);
  const ParamVector w = init_params(spec, rng);
  const auto batch = bench_batch(static_cast<int>(state.range(0)), 60, 10, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(spec, w, batch));
  }
}
BENCHMARK(BM_LossGradMlp)->Arg(20)->Arg(128);

void BM_LocalTrain(benchmark::State& state) {
  ModelSpec spec;
  spec.kind = ModelKind::kMlr;
  spec.input_dim = 60;
  spec.num_classes = 10;
  Rng rng(2);
  const ParamVector w = init_params(spec, rng);
  const auto data = bench_batch(200, 60, 10, 4);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 20;
  cfg.learning_rate = 0.01;
  for (auto _ : state) {
    Rng train_rng(5);
    benchmark::DoNotOptimize(local_train(spec, w, data, cfg, train_rng));
  }
}
BENCHMARK(BM_LocalTrain);

void BM_CheckExpectation(benchmark::State& state) {
  Rng rng(3);
  std::map<NodeId, ParamVector> grads;
  const int dim = 610;  // MLR 60x10 + 10
  for (int i = 0; i < state.range(0); ++i) {
    ParamVector g(dim);
    for (double& v : g.values) v = rng.normal();
    grads.emplace(i, std::move(g));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_expectation(grads));
  }
}
BENCHMARK(BM_CheckExpectation)->Arg(10)->Arg(20);

void BM_SampleNodes(benchmark::State& state) {
  NodeStats stats = NodeStats::uniform(50);
  Rng rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_nodes(stats, 10, rng));
  }
}
BENCHMARK(BM_SampleNodes);

void BM_Round(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.data.num_nodes = 50;
  cfg.data.iid_fraction = 0.2;
  cfg.data.samples_per_node = 200;
  cfg.selection.policy = PolicyKind::kFedPns;
  cfg.aggregation = AggregationMode::kOptimalAggregation;
  cfg.rounds = 1;
  for (auto _ : state) {
    state.PauseTiming();
    Experiment experiment(cfg);
    state.ResumeTiming();
    benchmark::DoNotOptimize(experiment.run_round());
  }
}
BENCHMARK(BM_Round)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
