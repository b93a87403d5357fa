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
#include "fedsim/models.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace fedsim {

namespace {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

void check_dims(const ModelSpec& spec, const ParamVector& w) {
  if (w.size() != spec.param_count()) {
    throw std::invalid_argument("parameter vector length " +
                                std::to_string(w.size()) +
                                " does not match model parameter count " +
                                std::to_string(spec.param_count()));
  }
}

Matrix gather_features(std::span<const LabeledExample> data,
                       std::span<const int> idx, int input_dim) {
  Matrix x(static_cast<Eigen::Index>(idx.size()), input_dim);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& f = data[idx[i]].features;
    if (static_cast<int>(f.size()) != input_dim) {
      throw std::invalid_argument("feature length " + std::to_string(f.size()) +
                                  " does not match input_dim " +
                                  std::to_string(input_dim));
    }
    std::memcpy(x.row(static_cast<Eigen::Index>(i)).data(), f.data(),
                sizeof(double) * f.size());
  }
  return x;
}

// Row-wise softmax statistics: per-row max and log-sum-exp, probabilities in
// place of logits afterwards.
void softmax_rows(Matrix& z, Eigen::VectorXd& lse) {
  const Eigen::VectorXd row_max = z.rowwise().maxCoeff();
  z.colwise() -= row_max;
  z = z.array().exp();
  const Eigen::VectorXd row_sum = z.rowwise().sum();
  lse = row_max.array() + row_sum.array().log();
  z.array().colwise() /= row_sum.array();
}

struct Forward {
  Matrix probs;           // n x C
  Eigen::VectorXd logit_true;  // z_{i, y_i} before softmax shift
  Eigen::VectorXd lse;
  Matrix hidden;          // MLP only: post-ReLU activations
};

Forward forward_pass(const ModelSpec& spec, const ParamVector& w,
                     const Matrix& x, std::span<const LabeledExample> data,
                     std::span<const int> idx) {
  Forward fwd;
  const int c = spec.num_classes;
  const int d = spec.input_dim;
  Matrix z;
  if (spec.kind == ModelKind::kMlr) {
    ConstMatrixMap weight(w.data(), c, d);
    ConstVectorMap bias(w.data() + static_cast<std::size_t>(c) * d, c);
    z.noalias() = x * weight.transpose();
    z.rowwise() += bias.transpose();
  } else {
    const int h = spec.hidden_dim;
    const double* p = w.data();
    ConstMatrixMap w1(p, h, d);
    ConstVectorMap b1(p + static_cast<std::size_t>(h) * d, h);
    ConstMatrixMap w2(p + static_cast<std::size_t>(h) * d + h, c, h);
    ConstVectorMap b2(p + static_cast<std::size_t>(h) * d + h +
                          static_cast<std::size_t>(c) * h,
                      c);
    fwd.hidden.noalias() = x * w1.transpose();
    fwd.hidden.rowwise() += b1.transpose();
    fwd.hidden = fwd.hidden.cwiseMax(0.0);
    z.noalias() = fwd.hidden * w2.transpose();
    z.rowwise() += b2.transpose();
  }
  fwd.logit_true.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int label = data[idx[i]].label;
    if (label < 0 || label >= c) {
      throw std::invalid_argument("label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(c) + ")");
    }
    fwd.logit_true[static_cast<Eigen::Index>(i)] =
        z(static_cast<Eigen::Index>(i), label);
  }
  softmax_rows(z, fwd.lse);
  fwd.probs = std::move(z);
  return fwd;
}

LossGrad loss_and_gradient_indexed(const ModelSpec& spec, const ParamVector& w,
                                   std::span<const LabeledExample> data,
                                   std::span<const int> idx) {
  check_dims(spec, w);
  if (idx.empty()) throw std::invalid_argument("batch must be nonempty");

  const int c = spec.num_classes;
  const int d = spec.input_dim;
  const auto n = static_cast<Eigen::Index>(idx.size());
  const Matrix x = gather_features(data, idx, d);
  Forward fwd = forward_pass(spec, w, x, data, idx);

  LossGrad out;
  out.loss = (fwd.lse - fwd.logit_true).mean();

  // dZ = (P - onehot(y)) / n
  Matrix dz = std::move(fwd.probs);
  for (Eigen::Index i = 0; i < n; ++i) {
    dz(i, data[idx[i]].label) -= 1.0;
  }
  dz /= static_cast<double>(n);

  out.grad = ParamVector(spec.param_count());
  double* g = out.grad.data();
  if (spec.kind == ModelKind::kMlr) {
    MatrixMap gw(g, c, d);
    VectorMap gb(g + static_cast<std::size_t>(c) * d, c);
    gw.noalias() = dz.transpose() * x;
    gb = dz.colwise().sum();
  } else {
    const int h = spec.hidden_dim;
    const double* p = w.data();
    ConstMatrixMap w2(p + static_cast<std::size_t>(h) * d + h, c, h);
    MatrixMap gw1(g, h, d);
    VectorMap gb1(g + static_cast<std::size_t>(h) * d, h);
    MatrixMap gw2(g + static_cast<std::size_t>(h) * d + h, c, h);
    VectorMap gb2(g + static_cast<std::size_t>(h) * d + h +
                      static_cast<std::size_t>(c) * h,
                  c);
    gw2.noalias() = dz.transpose() * fwd.hidden;
    gb2 = dz.colwise().sum();
    Matrix dh = dz * w2;
    // ReLU subgradient: 0 at 0.
    dh = (fwd.hidden.array() > 0.0).select(dh, 0.0);
    gw1.noalias() = dh.transpose() * x;
    gb1 = dh.colwise().sum();
  }
  return out;
}

}  // namespace

ParamVector operator+(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ParamVector operator-(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

bool all_finite(const ParamVector& a) {
  for (double v : a.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::size_t ModelSpec::param_count() const {
  const auto c = static_cast<std::size_t>(num_classes);
  const auto d = static_cast<std::size_t>(input_dim);
  if (kind == ModelKind::kMlr) return c * d + c;
  const auto h = static_cast<std::size_t>(hidden_dim);
  return h * d + h + c * h + c;
}

std::vector<TensorRange> ModelSpec::layout() const {
  std::vector<TensorRange> ranges;
  const auto c = static_cast<std::size_t>(num_classes);
  const auto d = static_cast<std::size_t>(input_dim);
  if (kind == ModelKind::kMlr) {
    ranges.push_back({"weight", 0, num_classes, input_dim});
    ranges.push_back({"bias", c * d, num_classes, 1});
  } else {
    const auto h = static_cast<std::size_t>(hidden_dim);
    ranges.push_back({"hidden_weight", 0, hidden_dim, input_dim});
    ranges.push_back({"hidden_bias", h * d, hidden_dim, 1});
    ranges.push_back({"output_weight", h * d + h, num_classes, hidden_dim});
    ranges.push_back({"output_bias", h * d + h + c * h, num_classes, 1});
  }
  return ranges;
}

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (kind == ModelKind::kMlp && hidden_dim < 1) {
    throw std::invalid_argument("hidden_dim must be >= 1 for the MLP");
  }
  if (init_scale < 0.0) throw std::invalid_argument("init_scale must be >= 0");
}

ParamVector init_params(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  ParamVector w(spec.param_count());
  if (spec.init == InitKind::kNormal) {
    for (double& v : w.values) v = rng.normal(0.0, spec.init_scale);
  }
  return w;
}

std::vector<double> predict_proba(const ModelSpec& spec, const ParamVector& w,
                                  std::span<const double> x) {
  check_dims(spec, w);
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw std::invalid_argument("feature length does not match input_dim");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite input feature");
    }
  }
  LabeledExample ex;
  ex.features.assign(x.begin(), x.end());
  ex.label = 0;
  const std::vector<LabeledExample> data{ex};
  const int idx[] = {0};
  const Matrix xm = gather_features(data, idx, spec.input_dim);
  Forward fwd = forward_pass(spec, w, xm, data, idx);
  return {fwd.probs.data(), fwd.probs.data() + spec.num_classes};
}

LossGrad loss_and_gradient(const ModelSpec& spec, const ParamVector& w,
                           std::span<const LabeledExample> batch) {
  std::vector<int> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  return loss_and_gradient_indexed(spec, w, batch, idx);
}

EvalResult evaluate(const ModelSpec& spec, const ParamVector& w,
                    std::span<const LabeledExample> data) {
  check_dims(spec, w);
  if (data.empty()) throw std::invalid_argument("evaluation data is empty");

  EvalResult result;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  // Chunked so large pools do not materialize one giant matrix.
  constexpr std::size_t kChunk = 4096;
  std::vector<int> idx;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, data.size() - start);
    idx.resize(len);
    std::iota(idx.begin(), idx.end(), static_cast<int>(start));
    const Matrix x = gather_features(data, idx, spec.input_dim);
    Forward fwd = forward_pass(spec, w, x, data, idx);
    for (std::size_t i = 0; i < len; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      loss_sum += fwd.lse[row] - fwd.logit_true[row];
      int best = 0;
      for (int c = 1; c < spec.num_classes; ++c) {
        if (fwd.probs(row, c) > fwd.probs(row, best)) best = c;
      }
      if (best == data[start + i].label) ++correct;
    }
  }
  result.loss = loss_sum / static_cast<double>(data.size());
  result.accuracy =
      static_cast<double>(correct) / static_cast<double>(data.size());
  return result;
}

void sgd_steps(const ModelSpec& spec, ParamVector& w,
               std::span<const LabeledExample> data, int batch_size, double lr,
               int steps, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("training data is empty");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (lr < 0.0) throw std::invalid_argument("learning_rate must be >= 0");

  const int n = static_cast<int>(data.size());
  const int batches_per_epoch = (n + batch_size - 1) / batch_size;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int cursor = batches_per_epoch;  // forces a shuffle before the first step
  for (int step = 0; step < steps; ++step) {
    if (cursor == batches_per_epoch) {
      rng.shuffle(order);
      cursor = 0;
    }
    const int lo = cursor * batch_size;
    const int hi = std::min(lo + batch_size, n);
    const std::span<const int> batch(order.data() + lo,
                                     static_cast<std::size_t>(hi - lo));
    const LossGrad lg = loss_and_gradient_indexed(spec, w, data, batch);
    axpy(-lr, lg.grad, w);
    ++cursor;
  }
}

LocalTrainResult local_train(const ModelSpec& spec, const ParamVector& w_global,
                             std::span<const LabeledExample> data,
                             const TrainConfig& cfg, Rng& rng) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  ParamVector w = w_global;
  sgd_steps(spec, w, data, cfg.batch_size, cfg.learning_rate,
            cfg.local_steps(static_cast<int>(data.size())), rng);

  LocalTrainResult result;
  result.delta = w - w_global;
  // Reconstructed so that w_global + delta == local_model holds bit-exactly.
  result.local_model = w_global + result.delta;
  return result;
}

void write_param_vector(std::ostream& out, const ParamVector& v) {
  auto put_u64 = [&out](std::uint64_t x) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(x >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
  };
  put_u64(v.size());
  for (double d : v.values) put_u64(std::bit_cast<std::uint64_t>(d));
}

ParamVector read_param_vector(std::istream& in) {
  auto get_u64 = [&in]() {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) {
      throw std::runtime_error("truncated parameter vector");
    }
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | buf[i];
    return x;
  };
  const std::uint64_t n = get_u64();
  ParamVector v(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = std::bit_cast<double>(get_u64());
  }
  return v;
}

}  // namespace fedsim
