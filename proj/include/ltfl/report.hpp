// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

// CSV outputs. Reals are written in shortest round-trip form (std::to_chars),
// so a trace is byte-stable for a fixed (config, seed) and parses back to the
// exact recorded doubles.
//
// trace.csv    round,node_or_skip,samples_label_0..samples_label_{C-1},t_comp,
//              t_comm,t_idle,t_total_cum,s_total_cum,accuracy,local_loss,
//              global_loss,variance
// summary.csv  strategy,seed,threshold,time_to_accuracy
// comparison.csv
//              kind,strategy,seed,threshold,time_to_accuracy,median,q1,q3,iqr,unreached
//              kind is "run" (one row per run and threshold) or "aggregate"
//              (one row per strategy and threshold). Unreached times print as
//              "unreached"; a median/quartile that lands on one is unreached too.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ltfl/simulation.hpp"
#include "ltfl/strategies.hpp"

namespace ltfl {

inline constexpr std::string_view kUnreached = "unreached";

inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string format_time(std::optional<double> t) {
  return t ? format_real(*t) : std::string(kUnreached);
}

inline std::optional<double> parse_time(std::string_view s) {
  if (s == kUnreached) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string> trace_columns(std::size_t labels) {
  std::vector<std::string> cols{"round", "node_or_skip"};
  for (std::size_t c = 0; c < labels; ++c) cols.push_back("samples_label_" + std::to_string(c));
  for (const char* c : {"t_comp", "t_comm", "t_idle", "t_total_cum", "s_total_cum", "accuracy", "local_loss",
                        "global_loss", "variance"})
    cols.emplace_back(c);
  return cols;
}

inline void write_trace_csv(std::ostream& out, const std::vector<RoundRecord>& trace, std::size_t labels) {
  const auto cols = trace_columns(labels);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : trace) {
    out << r.round << ',';
    if (const auto* t = std::get_if<Train>(&r.decision)) out << t->node.index;
    else out << "skip";
    for (auto v : r.round_counts(labels)) out << ',' << v;
    for (double v : {r.timing.comp, r.timing.comm, r.timing.idle, r.cumulative_time, r.cumulative_samples, r.accuracy,
                     r.local_loss, r.global_loss, r.variance})
      out << ',' << format_real(v);
    out << '\n';
  }
}

// One parsed trace.csv row.
struct TraceRow {
  std::int64_t round = 0;
  std::optional<std::size_t> node;  // nullopt on skip
  Counts samples;
  double t_comp = 0, t_comm = 0, t_idle = 0, t_total_cum = 0, s_total_cum = 0;
  double accuracy = 0, local_loss = 0, global_loss = 0, variance = 0;
};

inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty trace");
  const auto header = split_csv_line(line);
  if (header.size() < 11) throw FormatError("trace header too short");
  const std::size_t labels = header.size() - 11;
  if (header != trace_columns(labels)) throw FormatError("unexpected trace header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw FormatError("trace row has wrong field count");
    TraceRow r;
    r.round = std::stoll(f[0]);
    if (f[1] != "skip") r.node = static_cast<std::size_t>(std::stoull(f[1]));
    for (std::size_t c = 0; c < labels; ++c) r.samples.push_back(std::stoll(f[2 + c]));
    double* reals[] = {&r.t_comp, &r.t_comm, &r.t_idle, &r.t_total_cum, &r.s_total_cum,
                       &r.accuracy, &r.local_loss, &r.global_loss, &r.variance};
    for (std::size_t k = 0; k < 9; ++k) *reals[k] = *parse_time(f[2 + labels + k]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_summary_header(std::ostream& out) { out << "strategy,seed,threshold,time_to_accuracy\n"; }

inline void write_summary_rows(std::ostream& out, StrategyKind strategy, std::uint64_t seed, const RunSummary& s) {
  for (const auto& t : s.time_to_accuracy)
    out << to_string(strategy) << ',' << seed << ',' << format_real(t.threshold) << ',' << format_time(t.seconds)
        << '\n';
}

// ---------------------------------------------------------------- aggregation

// Unreached runs count as +infinity.
inline double as_real(std::optional<double> t) {
  return t ? *t : std::numeric_limits<double>::infinity();
}

// Linear-interpolation quantile on sorted data (the "type 7" rule).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::infinity();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi || sorted[lo] == sorted[hi]) return sorted[lo];
  if (std::isinf(sorted[hi])) return sorted[hi];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Aggregate {
  double median = 0, q1 = 0, q3 = 0, iqr = 0;
  std::size_t unreached = 0;
};

inline Aggregate aggregate_times(const std::vector<std::optional<double>>& times) {
  std::vector<double> v;
  Aggregate a;
  for (auto t : times) {
    v.push_back(as_real(t));
    if (!t) ++a.unreached;
  }
  std::sort(v.begin(), v.end());
  a.median = quantile_sorted(v, 0.5);
  a.q1 = quantile_sorted(v, 0.25);
  a.q3 = quantile_sorted(v, 0.75);
  a.iqr = std::isinf(a.q3) ? a.q3 : a.q3 - a.q1;
  return a;
}

inline std::optional<double> finite_or_unreached(double v) {
  return std::isinf(v) ? std::nullopt : std::optional<double>(v);
}

struct RunOutcome {
  StrategyKind strategy;
  std::uint64_t seed = 0;
  RunSummary summary;
};

inline void write_comparison_csv(std::ostream& out, const std::vector<RunOutcome>& runs,
                                 const std::vector<StrategyKind>& strategies, const std::vector<double>& thresholds) {
  out << "kind,strategy,seed,threshold,time_to_accuracy,median,q1,q3,iqr,unreached\n";
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (const auto& r : runs)
      out << "run," << to_string(r.strategy) << ',' << r.seed << ',' << format_real(thresholds[t]) << ','
          << format_time(r.summary.time_to_accuracy[t].seconds) << ",,,,,\n";
    for (auto k : strategies) {
      std::vector<std::optional<double>> times;
      for (const auto& r : runs)
        if (r.strategy == k) times.push_back(r.summary.time_to_accuracy[t].seconds);
      const auto a = aggregate_times(times);
      out << "aggregate," << to_string(k) << ",," << format_real(thresholds[t]) << ",,"
          << format_time(finite_or_unreached(a.median)) << ',' << format_time(finite_or_unreached(a.q1)) << ','
          << format_time(finite_or_unreached(a.q3)) << ',' << format_time(finite_or_unreached(a.iqr)) << ','
          << a.unreached << '\n';
    }
  }
}

}  // namespace ltfl
