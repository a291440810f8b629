// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltfl/domain.hpp"
#include "ltfl/resources.hpp"
#include "ltfl/rng.hpp"
#include "ltfl/scheduler.hpp"
#include "ltfl/timing.hpp"

namespace ltfl {

enum class StrategyKind { kLoadAware, kRandom, kTimeFirst, kVarianceFirst };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::kLoadAware, StrategyKind::kRandom,
                                                  StrategyKind::kTimeFirst, StrategyKind::kVarianceFirst};

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kLoadAware: return "load-aware";
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kTimeFirst: return "time-first";
    case StrategyKind::kVarianceFirst: return "variance-first";
  }
  return "?";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view s) {
  for (auto k : kAllStrategies)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Everything a strategy sees when deciding one round.
struct RoundContext {
  const ScheduleState& state;
  const std::vector<NodeProfile>& profiles;
  const RoundResources& resources;
  const ModelSpec& model;
  const SchedulerConstants& constants;
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual StrategyKind kind() const = 0;
  virtual RoundDecision decide(const RoundContext& ctx, Rng& rng) = 0;
};

class LoadAwareStrategy final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::kLoadAware; }
  RoundDecision decide(const RoundContext& ctx, Rng&) override {
    return decide_round(ctx.state, ctx.profiles, ctx.resources, ctx.model, ctx.constants);
  }
};

// Uniform node, per-label fraction uniform on [0, max_fraction], floored.
class RandomStrategy final : public Strategy {
 public:
  static constexpr double kMaxFraction = 0.1;

  StrategyKind kind() const override { return StrategyKind::kRandom; }
  RoundDecision decide(const RoundContext& ctx, Rng& rng) override {
    const std::size_t node = static_cast<std::size_t>(rng.below(ctx.profiles.size()));
    const auto& profile = ctx.profiles[node];
    Train t;
    t.node = NodeId{node};
    t.allocation.fractions.resize(ctx.state.labels());
    t.counts.resize(ctx.state.labels());
    for (std::size_t c = 0; c < ctx.state.labels(); ++c) {
      t.allocation.fractions[c] = rng.uniform(0.0, kMaxFraction);
      t.counts[c] = static_cast<std::int64_t>(
          std::floor(static_cast<double>(profile.label_counts[c]) * t.allocation.fractions[c]));
    }
    if (t.samples() < 1) return Skip{};
    return t;
  }
};

// Fixed 10% of every label; picks the node with the shortest round.
class TimeFirstStrategy final : public Strategy {
 public:
  static constexpr double kFraction = 0.1;

  StrategyKind kind() const override { return StrategyKind::kTimeFirst; }

  static Counts fixed_counts(const NodeProfile& p) {
    Counts counts(p.label_counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
      counts[c] = static_cast<std::int64_t>(std::floor(static_cast<double>(p.label_counts[c]) * kFraction));
    return counts;
  }

  static RoundTiming candidate_timing(const RoundContext& ctx, NodeId node) {
    const Counts counts = fixed_counts(ctx.profiles[node.index]);
    double s = 0;
    for (auto v : counts) s += static_cast<double>(v);
    const double bw = node == ctx.state.holder ? 1.0 : ctx.resources.bandwidth_between(ctx.state.holder, node);
    return round_timing(s, node, ctx.state.holder, ctx.resources.compute_of(node), bw, ctx.model, ctx.constants);
  }

  RoundDecision decide(const RoundContext& ctx, Rng&) override {
    std::size_t best = 0;
    double best_time = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ctx.profiles.size(); ++i) {
      const double t = candidate_timing(ctx, NodeId{i}).total();
      if (t < best_time) {
        best_time = t;
        best = i;
      }
    }
    Train t;
    t.node = NodeId{best};
    t.counts = fixed_counts(ctx.profiles[best]);
    t.allocation.fractions.assign(ctx.state.labels(), kFraction);
    if (t.samples() < 1) return Skip{};
    return t;
  }
};

// Visits nodes in ascending cyclic order, one per round whether or not it
// trains, and sizes each round with the load-aware subproblem.
class VarianceFirstStrategy final : public Strategy {
 public:
  // The first visited node is `first`.
  explicit VarianceFirstStrategy(NodeId first, std::size_t nodes)
      : previous_((first.index + nodes - 1) % nodes) {}

  StrategyKind kind() const override { return StrategyKind::kVarianceFirst; }
  NodeId previous() const { return NodeId{previous_}; }

  RoundDecision decide(const RoundContext& ctx, Rng&) override {
    const std::size_t node = (previous_ + 1) % ctx.profiles.size();
    previous_ = node;
    const auto e = evaluate_candidate(NodeId{node}, ctx.profiles[node], ctx.state, ctx.resources, ctx.model,
                                      ctx.constants);
    return decision_from(e);
  }

 private:
  std::size_t previous_;
};

inline std::unique_ptr<Strategy> make_strategy(StrategyKind kind, NodeId initial_holder, std::size_t nodes) {
  switch (kind) {
    case StrategyKind::kLoadAware: return std::make_unique<LoadAwareStrategy>();
    case StrategyKind::kRandom: return std::make_unique<RandomStrategy>();
    case StrategyKind::kTimeFirst: return std::make_unique<TimeFirstStrategy>();
    case StrategyKind::kVarianceFirst: return std::make_unique<VarianceFirstStrategy>(initial_holder, nodes);
  }
  return nullptr;
}

}  // namespace ltfl
