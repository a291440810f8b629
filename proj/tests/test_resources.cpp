// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "ltfl/resources.hpp"

using namespace ltfl;

namespace {

std::vector<NodeProfile> three_nodes(double compute) {
  return {{{1, 1}, compute}, {{1, 1}, compute}, {{1, 1}, compute}};
}

}  // namespace

TEST_CASE("degenerate utilization gives exact capacities", "[resources]") {
  Rng rng(1);
  const auto profiles = three_nodes(10e12);
  const auto links = LinkProfile::uniform(3, 200e6);
  const auto r = sample_round(profiles, links, {1, 1}, {0.5, 0.5}, rng);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.compute_of(NodeId{i}) == 10e12);
  CHECK(r.bandwidth_between(NodeId{0}, NodeId{2}) == 100e6);
  CHECK(r.bandwidth_between(NodeId{2}, NodeId{1}) == 100e6);
}

TEST_CASE("compute utilization mean matches the uniform mean within 3 sigma", "[resources]") {
  Rng rng(99);
  const double r_i = 10e12;
  const std::vector<NodeProfile> profiles{{{1, 1}, r_i}, {{1, 1}, r_i}};
  const auto links = LinkProfile::uniform(2, 200e6);
  const int draws = 10000;
  double sum = 0;
  for (int k = 0; k < draws; ++k)
    sum += sample_round(profiles, links, {0.01, 1}, {0.005, 1}, rng).compute_of(NodeId{0});
  const double mean = sum / draws;
  const double sigma = (0.99 / std::sqrt(12.0)) * r_i / std::sqrt(static_cast<double>(draws));
  CHECK(std::abs(mean - 0.505 * r_i) <= 3 * sigma);
}

TEST_CASE("sampling is deterministic, bounded, and symmetric", "[resources][property]") {
  const auto profiles = three_nodes(7e12);
  const auto links = LinkProfile::from_matrix({{0, 1e8, 2e8}, {1e8, 0, 3e8}, {2e8, 3e8, 0}});
  const UtilizationDistribution cd{0.01, 1}, bd{0.005, 1};
  Rng a(5), b(5);
  for (int k = 0; k < 200; ++k) {
    const auto ra = sample_round(profiles, links, cd, bd, a);
    const auto rb = sample_round(profiles, links, cd, bd, b);
    CHECK(ra.compute == rb.compute);
    CHECK(ra.bandwidth == rb.bandwidth);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(ra.compute[i] >= 0.01 * 7e12);
      CHECK(ra.compute[i] <= 7e12);
      for (std::size_t j = 0; j < 3; ++j) {
        if (i == j) continue;
        const double base = links.bandwidth(NodeId{i}, NodeId{j});
        const double bw = ra.bandwidth_between(NodeId{i}, NodeId{j});
        CHECK(bw == ra.bandwidth_between(NodeId{j}, NodeId{i}));
        CHECK(bw >= 0.005 * base);
        CHECK(bw <= base);
      }
    }
  }
}

TEST_CASE("invalid utilization ranges are rejected", "[resources]") {
  CHECK_THROWS_AS((UtilizationDistribution{0.5, 0.2}.validate("u")), ConfigError);
  CHECK_THROWS_AS((UtilizationDistribution{-0.1, 1}.validate("u")), ConfigError);
  CHECK_THROWS_AS((UtilizationDistribution{0, 0}.validate("u")), ConfigError);
  CHECK_NOTHROW((UtilizationDistribution{0.005, 1}.validate("u")));
}
