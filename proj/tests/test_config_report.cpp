// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ltfl/config.hpp"
#include "ltfl/report.hpp"

using Catch::Matchers::ContainsSubstring;
using namespace ltfl;

namespace {

std::string config_error_field(const nlohmann::json& j) {
  try {
    resolve_setup(config_from_json(j));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

nlohmann::json preset_json(const std::string& name) { return config_to_json(*presets::find(name)); }

// Median with +inf for missing values, computed directly.
double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2) return v[n / 2];
  if (std::isinf(v[n / 2])) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) rows.push_back(split_csv_line(line));
  return rows;
}

}  // namespace

TEST_CASE("every preset resolves and round-trips through JSON", "[config]") {
  for (const auto& name : presets::names()) {
    INFO(name);
    const auto cfg = *presets::find(name);
    CHECK_NOTHROW(resolve_setup(cfg));
    const auto j = config_to_json(cfg);
    CHECK(config_to_json(config_from_json(j)) == j);
  }
  CHECK_FALSE(presets::find("mnist-7").has_value());
  CHECK_FALSE(presets::find("imagenet-5").has_value());
}

TEST_CASE("preset label tables match the reconstructed assignments", "[config]") {
  const auto cfg = *presets::find("mnist-5-uneven");
  Counts total(10, 0);
  for (const auto& n : cfg.nodes)
    for (std::size_t c = 0; c < 10; ++c) total[c] += n.label_counts[c];
  CHECK(total == presets::kMnistClassCounts);
  CHECK(cfg.nodes[4].label_counts == Counts{0, 0, 0, 0, 0, presets::kMnistClassCounts[5] / 3 + 0, 0, 0, 0, 0});
  for (std::size_t c = 0; c < 10; ++c) CHECK(cfg.nodes[0].label_counts[c] > 0);
}

TEST_CASE("checked-in preset files match the built-in presets", "[config]") {
  for (const auto& name : presets::names()) {
    INFO(name);
    std::ifstream in(std::string(LTFL_PRESETS_DIR) + "/" + name + ".json");
    REQUIRE(in);
    CHECK(nlohmann::json::parse(in) == preset_json(name));
  }
}

TEST_CASE("config errors name the offending field", "[config]") {
  auto j = preset_json("mnist-3");
  SECTION("negative variance bound") {
    j["scheduler"]["variance_bound_samples_sq"] = -1;
    CHECK(config_error_field(j) == "scheduler.variance_bound_samples_sq");
  }
  SECTION("label held by nobody") {
    for (auto& n : j["nodes"]) n["label_counts"][9] = 0;
    CHECK(config_error_field(j) == "nodes");
  }
  SECTION("unknown key") {
    j["learner"]["warmup"] = 3;
    CHECK(config_error_field(j) == "learner.warmup");
  }
  SECTION("wrong type") {
    j["nodes"][1]["baseline_compute_flops"] = "fast";
    CHECK(config_error_field(j) == "nodes[1].baseline_compute_flops");
  }
  SECTION("unknown strategy") {
    j["strategy"] = "greedy";
    CHECK(config_error_field(j) == "strategy");
  }
  SECTION("ragged label counts") {
    j["nodes"][2]["label_counts"] = {1, 2, 3};
    CHECK(config_error_field(j) == "nodes[2].label_counts");
  }
  SECTION("inverted utilization range") {
    j["compute_utilization"] = {{"lower", 0.9}, {"upper", 0.1}};
    CHECK_THAT(config_error_field(j), ContainsSubstring("compute_utilization"));
  }
}

TEST_CASE("trace CSV round-trips every real exactly", "[report]") {
  auto cfg = *presets::find("cifar-5");
  cfg.scheduler.total_rounds = 60;
  cfg.seed = 4;
  const auto r = run_config(cfg);
  std::stringstream buf;
  write_trace_csv(buf, r.records, 10);
  const auto rows = read_trace_csv(buf);
  REQUIRE(rows.size() == r.records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& rec = r.records[i];
    CHECK(rows[i].round == rec.round);
    CHECK(rows[i].samples == rec.round_counts(10));
    CHECK(rows[i].node.has_value() == !is_skip(rec.decision));
    CHECK(rows[i].t_comp == rec.timing.comp);
    CHECK(rows[i].t_comm == rec.timing.comm);
    CHECK(rows[i].t_idle == rec.timing.idle);
    CHECK(rows[i].t_total_cum == rec.cumulative_time);
    CHECK(rows[i].accuracy == rec.accuracy);
    CHECK(rows[i].variance == rec.variance);
  }

  // The summary is recomputable from the trace alone.
  for (const auto& t : r.summary.time_to_accuracy) {
    std::optional<double> first;
    for (const auto& row : rows)
      if (row.accuracy >= t.threshold) {
        first = row.t_total_cum;
        break;
      }
    CHECK(first == t.seconds);
  }
}

TEST_CASE("reals format in shortest round-trip form", "[report]") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 992.893858653616, 0.0}) CHECK(*parse_time(format_real(v)) == v);
  CHECK(format_time(std::nullopt) == "unreached");
  CHECK_FALSE(parse_time("unreached").has_value());
  CHECK_THROWS_AS(parse_time("12x"), FormatError);
}

TEST_CASE("quantiles follow linear interpolation", "[report]") {
  const auto a = aggregate_times({4.0, 1.0, 3.0, 2.0});
  CHECK(a.median == 2.5);
  CHECK(a.q1 == 1.75);
  CHECK(a.q3 == 3.25);
  CHECK(a.unreached == 0);
  const auto b = aggregate_times({1.0, std::nullopt, std::nullopt});
  CHECK(std::isinf(b.median));
  CHECK(b.unreached == 2);
}

TEST_CASE("comparison CSV holds every run and one aggregate per strategy", "[report]") {
  std::vector<RunOutcome> runs;
  const std::vector<double> thresholds{0.5, 0.9};
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> by_strategy;
  Rng rng(17);
  for (auto k : kAllStrategies) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RunSummary s;
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::optional<double> v;
        if (rng.uniform01() < 0.8) v = rng.uniform(1, 100);
        s.time_to_accuracy.push_back({thresholds[t], v});
        by_strategy[{std::string(to_string(k)), t}].push_back(as_real(v));
      }
      runs.push_back({k, seed, s});
    }
  }
  std::stringstream out;
  write_comparison_csv(out, runs, {std::begin(kAllStrategies), std::end(kAllStrategies)}, thresholds);
  const auto rows = csv_rows(out.str());
  REQUIRE(rows.size() == 1 + 2 * (40 + 4));
  CHECK(rows[0][0] == "kind");
  std::size_t run_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    REQUIRE(row.size() == 10);
    if (row[0] == "run") {
      ++run_rows;
      continue;
    }
    const std::size_t t = row[3] == "0.5" ? 0 : 1;
    const auto& times = by_strategy.at({row[1], t});
    const double expected = median_of(times);
    CHECK(as_real(parse_time(row[5])) == Catch::Approx(expected));
    CHECK(std::stoul(row[9]) == static_cast<std::size_t>(std::count_if(times.begin(), times.end(), [](double v) {
            return std::isinf(v);
          })));
  }
  CHECK(run_rows == 80);
}

TEST_CASE("an all-skip comparison reports every cell unreached", "[report]") {
  std::vector<RunOutcome> runs;
  RunSummary never;
  never.time_to_accuracy = {{0.7, std::nullopt}};
  for (std::uint64_t seed = 0; seed < 3; ++seed) runs.push_back({StrategyKind::kRandom, seed, never});
  std::stringstream out;
  write_comparison_csv(out, runs, {StrategyKind::kRandom}, {0.7});
  const auto rows = csv_rows(out.str());
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i <= 3; ++i) CHECK(rows[i][4] == "unreached");
  for (std::size_t c = 5; c <= 8; ++c) CHECK(rows[4][c] == "unreached");
  CHECK(rows[4][9] == "3");
}
