// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ltfl/domain.hpp"
#include "ltfl/rng.hpp"

namespace ltfl {

// Share of a baseline capacity left over for training, drawn uniformly from
// [lower, upper] each round.
struct UtilizationDistribution {
  double lower = 1.0;
  double upper = 1.0;

  void validate(const std::string& field) const {
    if (!(lower >= 0 && lower <= 1)) throw ConfigError(field + ".lower", "must lie in [0, 1]");
    if (!(upper > 0 && upper <= 1)) throw ConfigError(field + ".upper", "must lie in (0, 1]");
    if (lower > upper) throw ConfigError(field, "lower must not exceed upper");
  }

  double draw(Rng& rng) const { return rng.uniform(lower, upper); }
};

// Available compute and bandwidth for one round, known exactly to the scheduler.
struct RoundResources {
  std::vector<double> compute;    // FLOPS per node
  std::size_t nodes = 0;
  std::vector<double> bandwidth;  // bits/s, row-major nodes x nodes, symmetric

  double compute_of(NodeId i) const { return compute.at(i.index); }
  double bandwidth_between(NodeId a, NodeId b) const { return bandwidth.at(a.index * nodes + b.index); }

  // Multiplies every capacity by `factor`.
  RoundResources scaled(double factor) const {
    RoundResources r = *this;
    for (auto& v : r.compute) v *= factor;
    for (auto& v : r.bandwidth) v *= factor;
    return r;
  }
};

// Draws one utilization per node (ascending id), then one per unordered link
// (i < j, lexicographic), and applies each link draw to both directions.
inline RoundResources sample_round(const std::vector<NodeProfile>& profiles, const LinkProfile& links,
                                   const UtilizationDistribution& compute_dist,
                                   const UtilizationDistribution& bandwidth_dist, Rng& rng) {
  const std::size_t n = profiles.size();
  RoundResources r;
  r.nodes = n;
  r.compute.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.compute[i] = profiles[i].baseline_compute * compute_dist.draw(rng);
  r.bandwidth.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double b = links.bandwidth(NodeId{i}, NodeId{j}) * bandwidth_dist.draw(rng);
      r.bandwidth[i * n + j] = b;
      r.bandwidth[j * n + i] = b;
    }
  }
  return r;
}

}  // namespace ltfl
