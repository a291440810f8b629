// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ltfl/domain.hpp"
#include "ltfl/rng.hpp"

using Catch::Approx;
using namespace ltfl;

namespace {

ScheduleState with_usage(std::vector<double> usage) {
  ScheduleState s = ScheduleState::fresh(usage.size(), NodeId{0});
  s.label_usage = std::move(usage);
  for (double v : s.label_usage) s.cumulative_samples += v;
  return s;
}

}  // namespace

TEST_CASE("mu averages cumulative plus candidate usage over all labels", "[domain]") {
  const std::vector<double> zero2{0, 0};
  CHECK(mu(with_usage({0, 0}), zero2) == 0.0);
  CHECK(mu(with_usage({10, 20}), zero2) == 15.0);
  const std::vector<double> cand{2, 1, 3};
  CHECK(mu(with_usage({10, 20, 0}), cand) == 12.0);
}

TEST_CASE("labelVariance examples", "[domain]") {
  const std::vector<double> zero3{0, 0, 0};
  CHECK(label_variance(with_usage({7, 7, 7}), zero3) == 0.0);
  const std::vector<double> cand{10, 0};
  CHECK(label_variance(with_usage({0, 0}), cand) == 25.0);
  const std::vector<double> zero2{0, 0};
  CHECK(label_variance(with_usage({100, 100}), zero2) == 0.0);
}

TEST_CASE("labelVariance is shift invariant, nonnegative, and zero only at equality", "[domain][property]") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    std::vector<double> usage(n), cand(n, 0.0);
    for (auto& v : usage) v = static_cast<double>(rng.below(1000));
    const double var = label_variance(with_usage(usage), cand);
    CHECK(var >= 0.0);

    const double shift = static_cast<double>(rng.below(10000));
    std::vector<double> shifted(usage);
    for (auto& v : shifted) v += shift;
    CHECK(label_variance(with_usage(shifted), cand) == Approx(var).margin(1e-9).epsilon(1e-12));

    const bool all_equal = std::all_of(usage.begin(), usage.end(), [&](double v) { return v == usage[0]; });
    CHECK((var <= 1e-12) == all_equal);
  }
}

TEST_CASE("variance within V bounds every label's deviation by sqrt(V*|C|)", "[domain][property]") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    std::vector<double> usage(n);
    for (auto& v : usage) v = rng.uniform(0, 500);
    const double var = variance_of(usage);
    const double m = mean_of(usage);
    for (double v : usage) CHECK(std::abs(v - m) <= std::sqrt(var * static_cast<double>(n)) + 1e-9);
  }
}

TEST_CASE("committing a round keeps samples equal to the sum of label usage", "[domain]") {
  ScheduleState s = ScheduleState::fresh(3, NodeId{1});
  s.commit_train(NodeId{2}, Counts{3, 0, 4}, 1.5);
  s.commit_skip(1.0);
  s.commit_train(NodeId{0}, Counts{1, 1, 1}, 0.25);
  CHECK(s.cumulative_samples == 10.0);
  CHECK(s.label_usage == std::vector<double>{4, 1, 5});
  CHECK(s.cumulative_time == 2.75);
  CHECK(s.holder == NodeId{0});
  CHECK(s.round_index == 3);
}

TEST_CASE("decision and scenario checks", "[domain]") {
  std::vector<NodeProfile> profiles{{{5, 0}, 1e12}, {{0, 3}, 1e12}};
  auto links = LinkProfile::uniform(2, 1e6);
  CHECK_NOTHROW(validate_profiles(profiles, links));
  CHECK_NOTHROW(check_decision(Train{NodeId{0}, {}, Counts{5, 0}}, profiles));
  CHECK_THROWS_AS(check_decision(Train{NodeId{0}, {}, Counts{6, 0}}, profiles), ContractError);
  CHECK_THROWS_AS(check_decision(Train{NodeId{1}, {}, Counts{0, 0}}, profiles), ContractError);
  CHECK_NOTHROW(check_decision(Skip{}, profiles));

  profiles[1].label_counts = {4, 0};
  CHECK_THROWS_AS(validate_profiles(profiles, links), ConfigError);

  CHECK_THROWS_AS(LinkProfile::from_matrix({{0, 1}, {2, 0}}), ConfigError);
  CHECK_THROWS_AS(LinkProfile::from_matrix({{0, -1}, {-1, 0}}), ConfigError);
  CHECK_THROWS_AS((SchedulerConstants{-1.0, 1.0, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SchedulerConstants{1.0, 0.0, 1}.validate()), ConfigError);
}
