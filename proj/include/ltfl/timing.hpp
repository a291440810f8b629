// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ltfl/domain.hpp"

namespace ltfl {

struct RoundTiming {
  double comp = 0;  // seconds
  double comm = 0;
  double idle = 0;

  double total() const { return comp + comm + idle; }
};

// Seconds to train `samples` samples at `compute` FLOPS.
inline double comp_time(double samples, const ModelSpec& model, double compute) {
  if (!(compute > 0)) throw InvalidResource("compute capacity must be positive");
  return model.flops_per_sample * samples / compute;
}

// Seconds to move the model from `from` to `to`; zero when it stays put.
inline double comm_time(NodeId from, NodeId to, const ModelSpec& model, double bandwidth) {
  if (!(bandwidth > 0)) throw InvalidResource("bandwidth must be positive");
  if (from == to) return 0.0;
  return model.model_bits / bandwidth;
}

// Waiting time charged when less than one sample is trained.
inline double idle_time(double samples, const SchedulerConstants& constants) {
  return samples < 1.0 ? constants.idle_wait : 0.0;
}

// Timing of a round that trains `samples` at `node` after the model sat at `holder`.
// Transmission is charged only when training actually happens.
inline RoundTiming round_timing(double samples, NodeId node, NodeId holder, double compute, double bandwidth,
                                const ModelSpec& model, const SchedulerConstants& constants) {
  RoundTiming t;
  t.idle = idle_time(samples, constants);
  if (samples >= 1.0) {
    t.comp = comp_time(samples, model, compute);
    t.comm = node == holder ? 0.0 : comm_time(holder, node, model, bandwidth);
  } else {
    t.comp = samples > 0 ? comp_time(samples, model, compute) : 0.0;
  }
  return t;
}

inline RoundTiming skip_timing(const SchedulerConstants& constants) {
  RoundTiming t;
  t.idle = constants.idle_wait;
  return t;
}

}  // namespace ltfl
