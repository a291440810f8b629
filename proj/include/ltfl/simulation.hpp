// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ltfl/domain.hpp"
#include "ltfl/learner.hpp"
#include "ltfl/resources.hpp"
#include "ltfl/rng.hpp"
#include "ltfl/strategies.hpp"
#include "ltfl/timing.hpp"

namespace ltfl {

// Fully resolved, validated inputs of one run (no dataset).
struct SimulationSetup {
  std::vector<NodeProfile> profiles;
  LinkProfile links;
  UtilizationDistribution compute_dist;
  UtilizationDistribution bandwidth_dist;
  ModelSpec model;
  SchedulerConstants constants;
  StrategyKind strategy = StrategyKind::kLoadAware;
  std::vector<double> thresholds;
  std::uint64_t seed = 0;

  std::size_t labels() const { return profiles.front().label_counts.size(); }
};

struct RoundRecord {
  std::int64_t round = 0;  // 1-based
  RoundDecision decision;
  RoundTiming timing;
  double cumulative_time = 0;
  double cumulative_samples = 0;
  std::vector<double> label_usage;
  double accuracy = 0;
  double global_loss = 0;
  double local_loss = 0;
  double variance = 0;

  // Samples trained this round per label (zeros on skip).
  Counts round_counts(std::size_t labels) const {
    if (const auto* t = std::get_if<Train>(&decision)) return t->counts;
    return Counts(labels, 0);
  }
};

struct ThresholdTime {
  double threshold = 0;
  std::optional<double> seconds;  // nullopt: never reached
};

struct RunSummary {
  std::vector<ThresholdTime> time_to_accuracy;
  double final_accuracy = 0;
  std::int64_t rounds = 0;
};

struct SimulationResult {
  NodeId initial_holder;
  std::vector<RoundRecord> records;
  RunSummary summary;
};

// Cumulative time of the first round whose accuracy reaches `threshold`.
inline std::optional<double> time_to_accuracy(const std::vector<RoundRecord>& trace, double threshold) {
  for (const auto& r : trace)
    if (r.accuracy >= threshold) return r.cumulative_time;
  return std::nullopt;
}

inline RunSummary summarize(const std::vector<RoundRecord>& trace, const std::vector<double>& thresholds) {
  RunSummary s;
  for (double th : thresholds) s.time_to_accuracy.push_back({th, time_to_accuracy(trace, th)});
  s.rounds = static_cast<std::int64_t>(trace.size());
  s.final_accuracy = trace.empty() ? 0.0 : trace.back().accuracy;
  return s;
}

using StrategyFactory = std::function<std::unique_ptr<Strategy>(NodeId initial_holder)>;

// Runs the circulation loop for K rounds: sample resources, let the strategy
// decide, then either wait H or move the model, train, and evaluate.
inline SimulationResult run_simulation(const SimulationSetup& setup, Learner& learner,
                                       const StrategyFactory& factory) {
  const std::size_t n = setup.profiles.size();
  Rng placement = make_stream(setup.seed, Stream::kPlacement);
  Rng resources_rng = make_stream(setup.seed, Stream::kResources);
  Rng strategy_rng = make_stream(setup.seed, Stream::kStrategy);
  Rng learner_rng = make_stream(setup.seed, Stream::kLearner);

  SimulationResult out;
  out.initial_holder = NodeId{static_cast<std::size_t>(placement.below(n))};
  ScheduleState state = ScheduleState::fresh(setup.labels(), out.initial_holder);
  auto strategy = factory(out.initial_holder);

  std::optional<RoundMetrics> last;
  for (std::int64_t k = 1; k <= setup.constants.total_rounds; ++k) {
    const RoundResources res =
        sample_round(setup.profiles, setup.links, setup.compute_dist, setup.bandwidth_dist, resources_rng);
    const RoundContext ctx{state, setup.profiles, res, setup.model, setup.constants};
    RoundDecision decision = strategy->decide(ctx, strategy_rng);
    check_decision(decision, setup.profiles);

    RoundRecord rec;
    rec.round = k;
    if (const auto* t = std::get_if<Train>(&decision)) {
      const auto s = static_cast<double>(t->samples());
      const double bw = t->node == state.holder ? 1.0 : res.bandwidth_between(state.holder, t->node);
      rec.timing = round_timing(s, t->node, state.holder, res.compute_of(t->node), bw, setup.model, setup.constants);
      learner.train(t->node, t->counts, learner_rng);
      state.commit_train(t->node, t->counts, rec.timing.total());
      last = learner.metrics(t->node);
    } else {
      rec.timing = skip_timing(setup.constants);
      state.commit_skip(rec.timing.total());
      if (!last) last = learner.metrics(state.holder);
    }
    rec.decision = std::move(decision);
    rec.cumulative_time = state.cumulative_time;
    rec.cumulative_samples = state.cumulative_samples;
    rec.label_usage = state.label_usage;
    rec.variance = label_variance(state);
    rec.accuracy = last->accuracy;
    rec.global_loss = last->global_loss;
    rec.local_loss = last->local_loss;
    out.records.push_back(std::move(rec));
  }
  out.summary = summarize(out.records, setup.thresholds);
  return out;
}

inline SimulationResult run_simulation(const SimulationSetup& setup, Learner& learner) {
  const std::size_t n = setup.profiles.size();
  return run_simulation(setup, learner,
                        [&](NodeId holder) { return make_strategy(setup.strategy, holder, n); });
}

// Trailing moving average used for smoothed loss curves.
inline std::vector<double> moving_average(std::span<const double> values, std::size_t window = 10) {
  std::vector<double> out(values.size());
  double sum = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace ltfl
