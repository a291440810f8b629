// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

// Core value types for load-aware model-circulation scheduling.
//
// Labels and nodes are dense indices, so every per-label or per-node map is a
// std::vector indexed by the id. A scenario has |C| >= 2 labels and |I| >= 2
// nodes; node i holds label_counts[c] samples of label c.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ltfl/error.hpp"

namespace ltfl {

struct LabelId {
  std::size_t index = 0;
  friend auto operator<=>(const LabelId&, const LabelId&) = default;
};

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

using Counts = std::vector<std::int64_t>;

struct NodeProfile {
  Counts label_counts;           // samples per label
  double baseline_compute = 0;   // FLOPS

  std::int64_t total() const {
    return std::accumulate(label_counts.begin(), label_counts.end(), std::int64_t{0});
  }
  std::int64_t count(LabelId c) const { return label_counts.at(c.index); }
};

// Symmetric baseline bandwidth matrix in bits/second; the diagonal is unused.
class LinkProfile {
 public:
  LinkProfile() = default;

  // Same bandwidth on every link.
  static LinkProfile uniform(std::size_t nodes, double bits_per_sec) {
    LinkProfile links;
    links.n_ = nodes;
    links.bw_.assign(nodes * nodes, bits_per_sec);
    links.validate();
    return links;
  }

  static LinkProfile from_matrix(std::vector<std::vector<double>> m) {
    LinkProfile links;
    links.n_ = m.size();
    links.bw_.assign(links.n_ * links.n_, 0.0);
    for (std::size_t i = 0; i < links.n_; ++i) {
      if (m[i].size() != links.n_) throw ConfigError("link_bandwidth_bits_per_sec", "matrix must be square");
      for (std::size_t j = 0; j < links.n_; ++j) links.bw_[i * links.n_ + j] = m[i][j];
    }
    links.validate();
    return links;
  }

  std::size_t nodes() const { return n_; }
  double bandwidth(NodeId a, NodeId b) const { return bw_.at(a.index * n_ + b.index); }

 private:
  void validate() const {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (i == j) continue;
        double v = bw_[i * n_ + j];
        if (!(v > 0) || !std::isfinite(v))
          throw ConfigError("link_bandwidth_bits_per_sec", "bandwidth must be positive and finite");
        if (v != bw_[j * n_ + i]) throw ConfigError("link_bandwidth_bits_per_sec", "bandwidth must be symmetric");
      }
    }
  }

  std::size_t n_ = 0;
  std::vector<double> bw_;
};

struct ModelSpec {
  double flops_per_sample = 0;  // M, FLOPs
  double model_bits = 0;        // D_M, bits

  void validate() const {
    if (!(flops_per_sample > 0)) throw ConfigError("model.flops_per_sample", "must be > 0");
    if (!(model_bits > 0)) throw ConfigError("model.model_size_bits", "must be > 0");
  }
};

struct SchedulerConstants {
  double variance_bound = 10000.0;  // V, samples^2
  double idle_wait = 1.0;           // H, seconds
  std::int64_t total_rounds = 1;    // K

  void validate() const {
    if (!(variance_bound >= 0) || !std::isfinite(variance_bound))
      throw ConfigError("scheduler.variance_bound_samples_sq", "must be >= 0");
    if (!(idle_wait > 0) || !std::isfinite(idle_wait)) throw ConfigError("scheduler.idle_wait_sec", "must be > 0");
    if (total_rounds < 0) throw ConfigError("scheduler.total_rounds", "must be >= 0");
  }

  // Feasibility slack on the variance constraint.
  double variance_slack() const { return 1e-6 * std::max(1.0, variance_bound); }
};

// Per-label fraction of a node's pool used in one round; entries in [0, 1].
struct AllocationVector {
  std::vector<double> fractions;

  double samples(const NodeProfile& profile) const {
    double s = 0;
    for (std::size_t c = 0; c < fractions.size(); ++c)
      s += static_cast<double>(profile.label_counts[c]) * fractions[c];
    return s;
  }
};

inline double mean_of(std::span<const double> y) {
  double sum = 0;
  for (double v : y) sum += v;
  return sum / static_cast<double>(y.size());
}

// Population variance (divides by |C|).
inline double variance_of(std::span<const double> y) {
  const double mu = mean_of(y);
  double acc = 0;
  for (double v : y) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(y.size());
}

// Cumulative bookkeeping owned by the simulation loop.
struct ScheduleState {
  std::vector<double> label_usage;  // samples used per label so far
  double cumulative_samples = 0;    // S_total
  double cumulative_time = 0;       // T_total, seconds
  NodeId holder;                    // node currently holding the model
  std::int64_t round_index = 0;     // rounds committed so far

  static ScheduleState fresh(std::size_t labels, NodeId holder) {
    ScheduleState s;
    s.label_usage.assign(labels, 0.0);
    s.holder = holder;
    return s;
  }

  std::size_t labels() const { return label_usage.size(); }

  // Usage after adding `candidate` (same length as label_usage).
  std::vector<double> combined(std::span<const double> candidate) const {
    std::vector<double> y(label_usage);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += candidate[c];
    return y;
  }

  void commit_train(NodeId node, const Counts& counts, double round_time) {
    for (std::size_t c = 0; c < label_usage.size(); ++c) {
      label_usage[c] += static_cast<double>(counts[c]);
      cumulative_samples += static_cast<double>(counts[c]);
    }
    cumulative_time += round_time;
    holder = node;
    ++round_index;
  }

  void commit_skip(double round_time) {
    cumulative_time += round_time;
    ++round_index;
  }
};

// Mean per-label usage including a candidate round.
inline double mu(const ScheduleState& state, std::span<const double> candidate) {
  return mean_of(state.combined(candidate));
}

inline double label_variance(const ScheduleState& state, std::span<const double> candidate) {
  return variance_of(state.combined(candidate));
}

inline double label_variance(const ScheduleState& state) { return variance_of(state.label_usage); }

struct Train {
  NodeId node;
  AllocationVector allocation;
  Counts counts;

  std::int64_t samples() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }
};

struct Skip {};

using RoundDecision = std::variant<Train, Skip>;

inline bool is_skip(const RoundDecision& d) { return std::holds_alternative<Skip>(d); }

// Checks a Train decision against the node's pool.
inline void check_decision(const RoundDecision& d, const std::vector<NodeProfile>& profiles) {
  if (const auto* t = std::get_if<Train>(&d)) {
    if (t->node.index >= profiles.size()) throw ContractError("decision names an unknown node");
    const auto& p = profiles[t->node.index];
    if (t->counts.size() != p.label_counts.size()) throw ContractError("decision count vector has wrong size");
    for (std::size_t c = 0; c < t->counts.size(); ++c)
      if (t->counts[c] < 0 || t->counts[c] > p.label_counts[c])
        throw ContractError("decision uses more samples than node holds for label " + std::to_string(c));
    if (t->samples() < 1) throw ContractError("Train decision must use at least one sample");
  }
}

// Structural checks on a scenario: sizes, positivity, every label learnable.
inline void validate_profiles(const std::vector<NodeProfile>& profiles, const LinkProfile& links) {
  if (profiles.size() < 2) throw ConfigError("nodes", "need at least 2 nodes");
  const std::size_t labels = profiles.front().label_counts.size();
  if (labels < 2) throw ConfigError("labels", "need at least 2 labels");
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (profiles[i].label_counts.size() != labels)
      throw ConfigError(where + ".label_counts", "expected " + std::to_string(labels) + " entries");
    for (auto v : profiles[i].label_counts)
      if (v < 0) throw ConfigError(where + ".label_counts", "counts must be nonnegative");
    if (!(profiles[i].baseline_compute > 0) || !std::isfinite(profiles[i].baseline_compute))
      throw ConfigError(where + ".baseline_compute_flops", "must be > 0");
  }
  for (std::size_t c = 0; c < labels; ++c) {
    bool held = std::any_of(profiles.begin(), profiles.end(),
                            [c](const NodeProfile& p) { return p.label_counts[c] > 0; });
    if (!held) throw ConfigError("nodes", "label " + std::to_string(c) + " is held by no node");
  }
  if (links.nodes() != profiles.size())
    throw ConfigError("link_bandwidth_bits_per_sec", "link matrix size does not match node count");
}

}  // namespace ltfl
