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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/datasets.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

/// Flat vector of 64-bit model parameters (also used for gradients and
/// updates). The binding of ranges to tensors comes from ModelSpec::layout().
struct ParamVector {
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values(n, fill) {}

  std::size_t size() const { return values.size(); }
  double* data() { return values.data(); }
  const double* data() const { return values.data(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const ParamVector&) const = default;
};

ParamVector operator+(const ParamVector& a, const ParamVector& b);
ParamVector operator-(const ParamVector& a, const ParamVector& b);
/// y += alpha * x
void axpy(double alpha, const ParamVector& x, ParamVector& y);
double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);
bool all_finite(const ParamVector& a);

enum class ModelKind { kMlr, kMlp };
enum class InitKind { kNormal, kZero };

/// A named contiguous slice of the flat parameter vector.
struct TensorRange {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;  // 1 for bias vectors
};

struct ModelSpec {
  ModelKind kind = ModelKind::kMlr;
  int input_dim = 60;
  int num_classes = 10;
  int hidden_dim = 0;  // MLP only
  InitKind init = InitKind::kNormal;
  double init_scale = 0.01;

  std::size_t param_count() const;
  std::vector<TensorRange> layout() const;
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

/// Fresh parameters: N(0, init_scale^2) entries under the given stream, or
/// all zeros for InitKind::kZero.
ParamVector init_params(const ModelSpec& spec, Rng& rng);

/// Softmax class probabilities for a single feature vector. Logits are
/// max-shifted before exponentiation.
std::vector<double> predict_proba(const ModelSpec& spec, const ParamVector& w,
                                  std::span<const double> x);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean cross-entropy over the batch and its exact analytic gradient.
/// The loss uses the log-sum-exp form, so finite inputs never produce NaN.
LossGrad loss_and_gradient(const ModelSpec& spec, const ParamVector& w,
                           std::span<const LabeledExample> batch);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and argmax accuracy (ties to the lowest class index).
EvalResult evaluate(const ModelSpec& spec, const ParamVector& w,
                    std::span<const LabeledExample> data);

struct TrainConfig {
  int epochs = 1;
  int batch_size = 20;
  double learning_rate = 0.01;

  /// Local step count per round: ceil(D/B) * E.
  int local_steps(int dataset_size) const {
    return ((dataset_size + batch_size - 1) / batch_size) * epochs;
  }

  bool operator==(const TrainConfig&) const = default;
};

struct LocalTrainResult {
  ParamVector delta;        // w_local - w_global
  ParamVector local_model;  // w_global + delta, exactly
};

/// Runs `steps` mini-batch SGD steps in place. Batches come from epoch-wise
/// seeded shuffles of [0, |data|): each epoch is a fresh shuffle split into
/// ceil(|data|/B) consecutive batches, the last possibly short. A new epoch
/// starts whenever the previous one is exhausted.
void sgd_steps(const ModelSpec& spec, ParamVector& w,
               std::span<const LabeledExample> data, int batch_size, double lr,
               int steps, Rng& rng);

/// E epochs of mini-batch SGD from w_global (short final batches kept).
LocalTrainResult local_train(const ModelSpec& spec, const ParamVector& w_global,
                             std::span<const LabeledExample> data,
                             const TrainConfig& cfg, Rng& rng);

/// Serialization used by checkpoint files: u64 little-endian length prefix,
/// then each value as a little-endian 64-bit real.
void write_param_vector(std::ostream& out, const ParamVector& v);
ParamVector read_param_vector(std::istream& in);

}  // namespace fedsim
