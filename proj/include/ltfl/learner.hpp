// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "ltfl/data.hpp"
#include "ltfl/domain.hpp"
#include "ltfl/rng.hpp"

namespace ltfl {

struct TrainerConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::int64_t batch_size = 32;
  std::int64_t epochs_per_round = 1;

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learner.learning_rate", "must be > 0");
    if (!(momentum >= 0 && momentum < 1)) throw ConfigError("learner.momentum", "must lie in [0, 1)");
    if (batch_size < 1) throw ConfigError("learner.batch_size", "must be >= 1");
    if (epochs_per_round < 1) throw ConfigError("learner.epochs_per_round", "must be >= 1");
  }
};

// Multinomial logistic regression with its momentum buffer. The optimizer
// state travels with the weights, since a single model circulates.
struct LogisticModel {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // classes x dim, row-major
  std::vector<double> bias;     // classes
  std::vector<double> velocity_w;
  std::vector<double> velocity_b;

  static LogisticModel zeros(std::size_t classes, std::size_t dim) {
    LogisticModel m;
    m.classes = classes;
    m.dim = dim;
    m.weights.assign(classes * dim, 0.0);
    m.bias.assign(classes, 0.0);
    m.velocity_w.assign(classes * dim, 0.0);
    m.velocity_b.assign(classes, 0.0);
    return m;
  }

  // Logits into `out` (size classes).
  void logits(std::span<const float> x, std::span<double> out) const {
    for (std::size_t k = 0; k < classes; ++k) {
      const double* w = weights.data() + k * dim;
      double z = bias[k];
      for (std::size_t j = 0; j < dim; ++j) z += w[j] * static_cast<double>(x[j]);
      out[k] = z;
    }
  }
};

struct Gradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

namespace detail {

// Softmax in place; returns log-sum-exp of the input.
inline double softmax(std::span<double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (auto& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return peak + std::log(sum);
}

}  // namespace detail

// Mean cross-entropy over `rows` of `data` and its gradient.
inline double loss_and_gradient(const LogisticModel& m, const Dataset& data, std::span<const std::size_t> rows,
                                Gradient* grad) {
  if (grad) {
    grad->weights.assign(m.weights.size(), 0.0);
    grad->bias.assign(m.bias.size(), 0.0);
  }
  std::vector<double> z(m.classes);
  double loss = 0;
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto r : rows) {
    const auto x = data.row(r);
    const std::size_t y = data.labels[r];
    m.logits(x, z);
    const double zy = z[y];
    const double lse = detail::softmax(z);
    loss += lse - zy;
    if (!grad) continue;
    for (std::size_t k = 0; k < m.classes; ++k) {
      const double delta = (z[k] - (k == y ? 1.0 : 0.0)) * inv;
      double* g = grad->weights.data() + k * m.dim;
      for (std::size_t j = 0; j < m.dim; ++j) g[j] += delta * static_cast<double>(x[j]);
      grad->bias[k] += delta;
    }
  }
  return loss * inv;
}

// One momentum-SGD step on a minibatch: v <- momentum * v + g; w <- w - lr * v.
// Returns the batch loss before the update.
inline double sgd_step(LogisticModel& m, const Dataset& data, std::span<const std::size_t> rows,
                       const TrainerConfig& config) {
  Gradient g;
  const double loss = loss_and_gradient(m, data, rows, &g);
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    m.velocity_w[i] = config.momentum * m.velocity_w[i] + g.weights[i];
    m.weights[i] -= config.learning_rate * m.velocity_w[i];
  }
  for (std::size_t k = 0; k < m.bias.size(); ++k) {
    m.velocity_b[k] = config.momentum * m.velocity_b[k] + g.bias[k];
    m.bias[k] -= config.learning_rate * m.velocity_b[k];
  }
  return loss;
}

// Draws counts[c] distinct samples of each label from the node's pools
// (partial Fisher-Yates, ascending label order) and shuffles them together.
inline std::vector<std::size_t> draw_round_samples(const PartitionedDataset& data, NodeId node, const Counts& counts,
                                                   Rng& rng) {
  const auto& pools = data.pools.at(node.index);
  if (counts.size() != pools.size()) throw ContractError("count vector size does not match label count");
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 0 || static_cast<std::size_t>(counts[c]) > pools[c].size())
      throw ContractError("node " + std::to_string(node.index) + " asked for " + std::to_string(counts[c]) +
                          " samples of label " + std::to_string(c) + " but holds " +
                          std::to_string(pools[c].size()));
    std::vector<std::size_t> pool = pools[c];
    const auto take = static_cast<std::size_t>(counts[c]);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      chosen.push_back(pool[i]);
    }
  }
  rng.shuffle(std::span<std::size_t>(chosen));
  return chosen;
}

// Trains on exactly the drawn samples; returns the per-batch losses.
inline std::vector<double> train_round(LogisticModel& m, const PartitionedDataset& data, NodeId node,
                                       const Counts& counts, const TrainerConfig& config, Rng& rng) {
  const auto chosen = draw_round_samples(data, node, counts, rng);
  std::vector<double> losses;
  if (chosen.empty()) return losses;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (std::int64_t epoch = 0; epoch < config.epochs_per_round; ++epoch) {
    for (std::size_t start = 0; start < chosen.size(); start += batch) {
      const std::size_t len = std::min(batch, chosen.size() - start);
      losses.push_back(sgd_step(m, *data.train, std::span(chosen).subspan(start, len), config));
    }
  }
  return losses;
}

struct Evaluation {
  double accuracy = 0;
  double loss = 0;
};

// Accuracy (argmax, ties to the lowest class) and mean cross-entropy.
inline Evaluation evaluate(const LogisticModel& m, const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ContractError("cannot evaluate on an empty test set");
  std::vector<double> z(m.classes);
  std::size_t correct = 0;
  double loss = 0;
  for (auto r : rows) {
    m.logits(data.row(r), z);
    const std::size_t y = data.labels[r];
    const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == y) ++correct;
    const double zy = z[y];
    loss += detail::softmax(z) - zy;
  }
  const double n = static_cast<double>(rows.size());
  return {static_cast<double>(correct) / n, loss / n};
}

inline Evaluation evaluate(const LogisticModel& m, const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return evaluate(m, data, rows);
}

// Scheduler-only stand-in for a trained model: accuracy saturates in the
// smallest cumulative per-label usage,
//   acc = base + (ceiling - base) * (1 - exp(-min_c usage_c / scale)),
// with base = 1/|C|. Loss is reported as -ln(acc).
struct SurrogateState {
  std::vector<double> usage;
  double ceiling = 0.95;
  double scale = 2000.0;

  static SurrogateState fresh(std::size_t labels, double ceiling, double scale) {
    return SurrogateState{std::vector<double>(labels, 0.0), ceiling, scale};
  }

  double accuracy_over(std::span<const std::size_t> labels) const {
    const double base = 1.0 / static_cast<double>(usage.size());
    if (labels.empty()) return base;
    double least = std::numeric_limits<double>::infinity();
    for (auto c : labels) least = std::min(least, usage[c]);
    return base + (ceiling - base) * (1.0 - std::exp(-least / scale));
  }

  double accuracy() const {
    std::vector<std::size_t> all(usage.size());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
    return accuracy_over(all);
  }
};

inline SurrogateState surrogate_train(SurrogateState s, const Counts& counts) {
  for (std::size_t c = 0; c < counts.size(); ++c) s.usage[c] += static_cast<double>(counts[c]);
  return s;
}

// Metrics recorded after each round.
struct RoundMetrics {
  double accuracy = 0;
  double global_loss = 0;
  double local_loss = 0;  // on the test samples of labels the node holds
};

// Training backend driven by the simulator.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual void train(NodeId node, const Counts& counts, Rng& rng) = 0;
  virtual RoundMetrics metrics(NodeId local_node) const = 0;
};

class LogisticLearner final : public Learner {
 public:
  LogisticLearner(std::shared_ptr<const PartitionedDataset> data, TrainerConfig config)
      : data_(std::move(data)), config_(config), model_(LogisticModel::zeros(data_->classes(), data_->train->dim)) {
    if (data_->test.size() == 0) throw ConfigError("dataset", "test set is empty");
    all_rows_.resize(data_->test.size());
    for (std::size_t i = 0; i < all_rows_.size(); ++i) all_rows_[i] = i;
    local_rows_.resize(data_->nodes());
    for (std::size_t n = 0; n < data_->nodes(); ++n)
      for (std::size_t i = 0; i < data_->test.size(); ++i)
        if (!data_->pools[n][data_->test.labels[i]].empty()) local_rows_[n].push_back(i);
  }

  void train(NodeId node, const Counts& counts, Rng& rng) override {
    train_round(model_, *data_, node, counts, config_, rng);
  }

  RoundMetrics metrics(NodeId local_node) const override {
    const auto global = evaluate(model_, data_->test, all_rows_);
    const auto& local = local_rows_.at(local_node.index);
    const double local_loss = local.empty() ? global.loss : evaluate(model_, data_->test, local).loss;
    return {global.accuracy, global.loss, local_loss};
  }

  const LogisticModel& model() const { return model_; }

 private:
  std::shared_ptr<const PartitionedDataset> data_;
  TrainerConfig config_;
  LogisticModel model_;
  std::vector<std::size_t> all_rows_;
  std::vector<std::vector<std::size_t>> local_rows_;
};

class SurrogateLearner final : public Learner {
 public:
  SurrogateLearner(std::vector<NodeProfile> profiles, double ceiling, double scale)
      : profiles_(std::move(profiles)),
        state_(SurrogateState::fresh(profiles_.front().label_counts.size(), ceiling, scale)) {}

  void train(NodeId, const Counts& counts, Rng&) override { state_ = surrogate_train(std::move(state_), counts); }

  RoundMetrics metrics(NodeId local_node) const override {
    std::vector<std::size_t> held;
    const auto& counts = profiles_.at(local_node.index).label_counts;
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] > 0) held.push_back(c);
    const double acc = state_.accuracy();
    return {acc, -std::log(acc), -std::log(state_.accuracy_over(held))};
  }

  const SurrogateState& state() const { return state_; }

 private:
  std::vector<NodeProfile> profiles_;
  SurrogateState state_;
};

}  // namespace ltfl
