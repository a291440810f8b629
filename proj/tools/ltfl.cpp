// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// ltfl run|compare|validate: scenario runner for load-aware circulation scheduling.

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ltfl/ltfl.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::ofstream open_output(const fs::path& dir, const char* name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ltfl::IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw ltfl::IoError("cannot write " + (dir / name).string());
  return out;
}

ltfl::StrategyKind strategy_or_throw(const std::string& s) {
  if (auto k = ltfl::parse_strategy(s)) return *k;
  throw ltfl::ConfigError("strategy", "unknown strategy '" + s + "'");
}

int run_cmd(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            const std::string& strategy) {
  auto cfg = ltfl::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (!strategy.empty()) cfg.strategy = strategy_or_throw(strategy);
  const auto result = ltfl::run_config(cfg);

  auto trace = open_output(out_dir, "trace.csv");
  ltfl::write_trace_csv(trace, result.records, static_cast<std::size_t>(cfg.labels));
  auto summary = open_output(out_dir, "summary.csv");
  ltfl::write_summary_header(summary);
  ltfl::write_summary_rows(summary, cfg.strategy, cfg.seed, result.summary);
  if (!trace || !summary) throw ltfl::IoError("write failed in " + out_dir);
  std::cout << ltfl::to_string(cfg.strategy) << " seed " << cfg.seed << ": " << result.records.size()
            << " rounds, final accuracy " << result.summary.final_accuracy << ", T_total "
            << (result.records.empty() ? 0.0 : result.records.back().cumulative_time) << " s\n";
  return 0;
}

int compare_cmd(const std::string& config_path, const std::vector<std::string>& names, std::uint64_t seeds,
                const std::string& out_dir, unsigned jobs) {
  const auto base = ltfl::load_config(config_path);
  std::vector<ltfl::StrategyKind> strategies;
  if (names.empty()) strategies.assign(std::begin(ltfl::kAllStrategies), std::end(ltfl::kAllStrategies));
  for (const auto& n : names) strategies.push_back(strategy_or_throw(n));
  ltfl::resolve_setup(base);

  struct Job {
    ltfl::StrategyKind strategy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs_list;
  for (std::uint64_t s = 0; s < seeds; ++s)
    for (auto k : strategies) jobs_list.push_back({k, base.seed + s});

  // Datasets depend only on the seed; build each once and share it.
  std::map<std::uint64_t, std::shared_ptr<const ltfl::PartitionedDataset>> data;
  if (base.learner.kind == ltfl::LearnerKind::kLogistic)
    for (std::uint64_t s = 0; s < seeds; ++s) data[base.seed + s] = ltfl::load_dataset(base, base.seed + s);

  std::vector<ltfl::RunOutcome> outcomes(jobs_list.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs_list.size(); i = next++) {
      try {
        auto cfg = base;
        cfg.strategy = jobs_list[i].strategy;
        cfg.seed = jobs_list[i].seed;
        const auto setup = ltfl::resolve_setup(cfg);
        auto learner = ltfl::make_learner(cfg, setup, data.count(cfg.seed) ? data.at(cfg.seed) : nullptr);
        const auto result = ltfl::run_simulation(setup, *learner);
        outcomes[i] = {cfg.strategy, cfg.seed, result.summary};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::max(1u, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  auto out = open_output(out_dir, "comparison.csv");
  ltfl::write_comparison_csv(out, outcomes, strategies, base.accuracy_thresholds);
  if (!out) throw ltfl::IoError("write failed in " + out_dir);
  std::cout << outcomes.size() << " runs written to " << (fs::path(out_dir) / "comparison.csv").string() << "\n";
  return 0;
}

int validate_cmd(const std::string& config_path) {
  const auto cfg = ltfl::load_config(config_path);
  ltfl::resolve_setup(cfg);
  if (cfg.learner.kind == ltfl::LearnerKind::kLogistic) ltfl::load_dataset(cfg, cfg.seed);
  std::cout << ltfl::config_to_json(cfg).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load-aware scheduling simulator for model-circulation federated learning"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", strategy;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run one simulation and write trace.csv and summary.csv");
  run->add_option("config", config, "Preset name or JSON config path")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out-dir", out_dir, "Output directory");
  run->add_option("--strategy", strategy, "load-aware | random | time-first | variance-first");

  std::vector<std::string> strategies;
  std::uint64_t seeds = 10;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* compare = app.add_subcommand("compare", "Run strategies x seeds and write comparison.csv");
  compare->add_option("config", config, "Preset name or JSON config path")->required();
  compare->add_option("--strategies", strategies, "Strategies to compare (default: all)")->delimiter(',');
  compare->add_option("--seeds", seeds, "Number of seeds, starting at the config seed");
  compare->add_option("--out-dir", out_dir, "Output directory");
  compare->add_option("--jobs", jobs, "Parallel runs");

  auto* validate = app.add_subcommand("validate", "Check a config and print its normalized form");
  validate->add_option("config", config, "Preset name or JSON config path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_cmd(config, seed, out_dir, strategy);
    if (compare->parsed()) return compare_cmd(config, strategies, seeds, out_dir, jobs);
    if (validate->parsed()) return validate_cmd(config);
  } catch (const ltfl::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ltfl::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ltfl::FormatError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
