// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

// Per-round greedy scheduler.
//
// For every candidate node the scheduler finds the largest number of samples
// the node can train this round while keeping the variance of cumulative
// per-label usage within V, scores that choice with the efficiency ratio
//
//   O3(s) = (s + S_total) / (T_round(s) + T_total + 1),
//
// compares it with O3(0) (skip), and finally picks the best node.
//
// Max-samples subproblem. With y_c = prior_c + l_c * x_c the problem is
//
//   maximize sum_c y_c  s.t.  prior_c <= y_c <= prior_c + l_c,  Var(y) <= V.
//
// Stationarity gives y_c - mean(y) = |C| / (2 lambda) for every label whose box
// is not active, so the optimum is y_c = clamp(t, lo_c, hi_c) for a single
// water level t. The slope of n * Var(clamp(t)) is 2 * #free * (t - mean), and
// t - mean(clamp(t)) is nondecreasing, so the variance falls up to the level
// t0 where t equals the mean and rises after. Var at t0 is at most the prior
// variance, so the feasible levels form an interval around t0 and the optimum
// is its right end. Both t0 and that end are found by bisection.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "ltfl/domain.hpp"
#include "ltfl/resources.hpp"
#include "ltfl/timing.hpp"

namespace ltfl {

struct P4Result {
  double s_star = 0;
  AllocationVector allocation;
  bool prior_infeasible = false;  // no allocation brings the variance within V + slack
  bool used_fallback = false;     // bisection stalled; coordinate ascent used
  int iterations = 0;
};

namespace detail {

inline double clamp_sum(double t, const std::vector<double>& lo, const std::vector<double>& hi,
                        std::vector<double>& y) {
  double s = 0;
  for (std::size_t c = 0; c < lo.size(); ++c) {
    y[c] = std::clamp(t, lo[c], hi[c]);
    s += y[c];
  }
  return s;
}

// Water level of least variance: the sign change of t - mean(clamp(t)).
// Leaves clamp(level) in y and returns the level.
inline double least_variance_level(const std::vector<double>& lo, const std::vector<double>& hi,
                                   std::vector<double>& y) {
  double a = *std::min_element(lo.begin(), lo.end());
  double b = *std::max_element(hi.begin(), hi.end());
  for (int it = 0; it < 200 && b - a > 1e-12 * (1 + std::abs(b)); ++it) {
    const double mid = 0.5 * (a + b);
    const double sum = clamp_sum(mid, lo, hi, y);
    if (mid * static_cast<double>(lo.size()) < sum) a = mid;
    else b = mid;
  }
  clamp_sum(a, lo, hi, y);
  return a;
}

inline AllocationVector allocation_from_usage(const std::vector<double>& y, const std::vector<double>& prior,
                                              const NodeProfile& profile) {
  AllocationVector a;
  a.fractions.assign(y.size(), 0.0);
  for (std::size_t c = 0; c < y.size(); ++c) {
    const auto l = profile.label_counts[c];
    if (l > 0) a.fractions[c] = std::clamp((y[c] - prior[c]) / static_cast<double>(l), 0.0, 1.0);
  }
  return a;
}

// Largest y_c in [y[c], hi] keeping variance(y) <= bound, others fixed.
inline double coordinate_max(std::vector<double>& y, std::size_t c, double hi, double bound) {
  // n*Var as a function of v = y_c is a*v^2 + b*v + k with a = (n-1)/n.
  const double n = static_cast<double>(y.size());
  double others = 0, others_sq = 0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j == c) continue;
    others += y[j];
    others_sq += y[j] * y[j];
  }
  const double a = (n - 1) / n;
  const double b = -2.0 * others / n;
  const double k = others_sq - others * others / n - n * bound;
  const double disc = b * b - 4 * a * k;
  if (disc < 0) return y[c];
  const double root = (-b + std::sqrt(disc)) / (2 * a);
  return std::clamp(root, y[c], hi);
}

}  // namespace detail

// Projected coordinate ascent for the max-samples subproblem. Only reached if
// the water-level bisection fails; it can stop short of the optimum when the
// variance constraint couples several labels.
inline P4Result solve_p4_coordinate_ascent(const NodeProfile& profile, const ScheduleState& state,
                                           const SchedulerConstants& constants) {
  const std::size_t n = state.labels();
  P4Result r;
  r.used_fallback = true;
  r.allocation.fractions.assign(n, 0.0);
  std::vector<double> lo = state.label_usage, hi(n), y(n);
  for (std::size_t c = 0; c < n; ++c) hi[c] = lo[c] + static_cast<double>(profile.label_counts[c]);
  detail::least_variance_level(lo, hi, y);
  const double least_var = variance_of(y);
  if (least_var > constants.variance_bound + constants.variance_slack()) {
    r.prior_infeasible = true;
    return r;
  }
  const double bound = std::max(constants.variance_bound, least_var);
  y = lo;
  double objective = std::accumulate(y.begin(), y.end(), 0.0);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    ++r.iterations;
    for (std::size_t c = 0; c < n; ++c) y[c] = detail::coordinate_max(y, c, hi[c], bound);
    double next = 0;
    for (double v : y) next += v;
    const bool done = next - objective < 1e-9 * (1 + std::abs(next));
    objective = next;
    if (done) break;
  }
  // Coordinate moves cannot always reach the feasible set from an over-bound prior.
  if (variance_of(y) > bound * (1 + 1e-12) + 1e-12) return r;
  r.allocation = detail::allocation_from_usage(y, lo, profile);
  r.s_star = r.allocation.samples(profile);
  return r;
}

// Largest feasible number of samples node `profile` can train this round.
inline P4Result solve_p4(const NodeProfile& profile, const ScheduleState& state, const SchedulerConstants& constants) {
  const std::size_t n = state.labels();
  P4Result r;
  r.allocation.fractions.assign(n, 0.0);

  std::vector<double> lo = state.label_usage, hi(n), y(n);
  for (std::size_t c = 0; c < n; ++c) hi[c] = lo[c] + static_cast<double>(profile.label_counts[c]);

  const double a = detail::least_variance_level(lo, hi, y);
  double obj_lo = std::accumulate(y.begin(), y.end(), 0.0);
  const double least_var = variance_of(y);
  if (least_var > constants.variance_bound + constants.variance_slack()) {
    r.prior_infeasible = true;
    return r;
  }
  // Aim at V itself; a state whose best reachable variance sits in the slack band keeps that as the cap.
  const double bound = std::max(constants.variance_bound, least_var);

  if (variance_of(hi) <= bound) {
    for (std::size_t c = 0; c < n; ++c) r.allocation.fractions[c] = profile.label_counts[c] > 0 ? 1.0 : 0.0;
    r.s_star = static_cast<double>(profile.total());
    return r;
  }

  double t_lo = a;
  double t_hi = *std::max_element(hi.begin(), hi.end());
  double obj_hi = detail::clamp_sum(t_hi, lo, hi, y);
  bool converged = false;
  for (int it = 0; it < 400; ++it) {
    r.iterations = it + 1;
    if (obj_hi - obj_lo < 1e-9 * (1 + std::abs(obj_lo))) {
      converged = true;
      break;
    }
    const double t_mid = 0.5 * (t_lo + t_hi);
    if (!(t_mid > t_lo && t_mid < t_hi)) break;
    const double obj_mid = detail::clamp_sum(t_mid, lo, hi, y);
    if (variance_of(y) <= bound) {
      t_lo = t_mid;
      obj_lo = obj_mid;
    } else {
      t_hi = t_mid;
      obj_hi = obj_mid;
    }
  }
  if (!converged || !std::isfinite(obj_lo)) {
    return solve_p4_coordinate_ascent(profile, state, constants);
  }
  detail::clamp_sum(t_lo, lo, hi, y);
  r.allocation = detail::allocation_from_usage(y, lo, profile);
  r.s_star = r.allocation.samples(profile);
  return r;
}

// Efficiency score of training `s_round` samples at `node` this round.
inline double evaluate_o3(NodeId node, double s_round, const ScheduleState& state, const RoundResources& resources,
                          const ModelSpec& model, const SchedulerConstants& constants) {
  const double bandwidth = node == state.holder ? 1.0 : resources.bandwidth_between(state.holder, node);
  const RoundTiming t =
      round_timing(s_round, node, state.holder, resources.compute_of(node), bandwidth, model, constants);
  return (s_round + state.cumulative_samples) / (t.total() + state.cumulative_time + 1.0);
}

// Whole-sample counts for a real allocation, repaired to stay within V + slack.
inline Counts integerize(const AllocationVector& allocation, const NodeProfile& profile, const ScheduleState& state,
                         const SchedulerConstants& constants) {
  const std::size_t n = state.labels();
  Counts counts(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    const auto l = profile.label_counts[c];
    // The 1e-9 absorbs the round trip (y - prior) / l * l landing just below an integer.
    const double real = static_cast<double>(l) * allocation.fractions[c];
    counts[c] = std::clamp(static_cast<std::int64_t>(std::floor(real + 1e-9)), std::int64_t{0}, l);
  }
  const double limit = constants.variance_bound + constants.variance_slack();
  std::vector<double> y(n);
  auto refresh = [&] {
    for (std::size_t c = 0; c < n; ++c) y[c] = state.label_usage[c] + static_cast<double>(counts[c]);
  };
  refresh();
  while (variance_of(y) > limit) {
    const double m = mean_of(y);
    std::optional<std::size_t> worst;
    for (std::size_t c = 0; c < n; ++c) {
      if (counts[c] == 0 || y[c] <= m) continue;
      if (!worst || y[c] - m > y[*worst] - m) worst = c;
    }
    if (!worst) {
      std::fill(counts.begin(), counts.end(), 0);
      break;
    }
    --counts[*worst];
    y[*worst] -= 1.0;
  }
  return counts;
}

struct CandidateEvaluation {
  NodeId node;
  double s_star = 0;
  AllocationVector allocation;
  Counts counts;                  // integerized allocation
  double objective_at_star = 0;   // O3(S*)
  double objective_committed = 0; // O3 of the integerized counts
  double objective_at_zero = 0;   // O3(0)
  bool train = false;
  bool prior_infeasible = false;

  std::int64_t committed_samples() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  }
};

// Solves the subproblem for one node and applies the train-or-skip rule. The
// comparison uses the integerized counts, which are what would be committed.
inline CandidateEvaluation evaluate_candidate(NodeId node, const NodeProfile& profile, const ScheduleState& state,
                                              const RoundResources& resources, const ModelSpec& model,
                                              const SchedulerConstants& constants) {
  CandidateEvaluation e;
  e.node = node;
  const P4Result p4 = solve_p4(profile, state, constants);
  e.s_star = p4.s_star;
  e.allocation = p4.allocation;
  e.prior_infeasible = p4.prior_infeasible;
  e.objective_at_zero = evaluate_o3(node, 0.0, state, resources, model, constants);
  e.objective_at_star = evaluate_o3(node, e.s_star, state, resources, model, constants);
  e.counts.assign(state.labels(), 0);
  if (e.s_star < 1.0) {
    e.objective_committed = e.objective_at_zero;
    return e;
  }
  e.counts = integerize(e.allocation, profile, state, constants);
  const auto s_int = e.committed_samples();
  if (s_int < 1) {
    e.objective_committed = e.objective_at_zero;
    return e;
  }
  e.objective_committed = evaluate_o3(node, static_cast<double>(s_int), state, resources, model, constants);
  e.train = e.objective_committed >= e.objective_at_zero;
  if (!e.train) {
    std::fill(e.counts.begin(), e.counts.end(), 0);
    e.objective_committed = e.objective_at_zero;
  }
  return e;
}

inline RoundDecision decision_from(const CandidateEvaluation& e) {
  if (!e.train) return Skip{};
  return Train{e.node, e.allocation, e.counts};
}

struct ScheduleOutcome {
  RoundDecision decision;
  std::vector<CandidateEvaluation> candidates;
};

// Evaluates every node and keeps the best training candidate; ties go to the
// lower id. Skips when no node prefers training over waiting.
inline ScheduleOutcome schedule_round(const ScheduleState& state, const std::vector<NodeProfile>& profiles,
                                      const RoundResources& resources, const ModelSpec& model,
                                      const SchedulerConstants& constants) {
  ScheduleOutcome out{Skip{}, {}};
  out.candidates.reserve(profiles.size());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out.candidates.push_back(evaluate_candidate(NodeId{i}, profiles[i], state, resources, model, constants));
    const auto& e = out.candidates.back();
    if (e.train && (!best || e.objective_committed > out.candidates[*best].objective_committed)) best = i;
  }
  if (best) out.decision = decision_from(out.candidates[*best]);
  return out;
}

inline RoundDecision decide_round(const ScheduleState& state, const std::vector<NodeProfile>& profiles,
                                  const RoundResources& resources, const ModelSpec& model,
                                  const SchedulerConstants& constants) {
  return schedule_round(state, profiles, resources, model, constants).decision;
}

}  // namespace ltfl
