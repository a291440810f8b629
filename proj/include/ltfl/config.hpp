// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

// Scenario configuration: JSON schema, named presets, and resolution into a
// runnable setup plus learner. Keys carry their units in the name.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltfl/data.hpp"
#include "ltfl/domain.hpp"
#include "ltfl/learner.hpp"
#include "ltfl/simulation.hpp"
#include "ltfl/strategies.hpp"

namespace ltfl {

enum class LearnerKind { kLogistic, kSurrogate };
enum class DatasetKind { kBlobs, kIdx, kNone };

struct NodeConfig {
  Counts label_counts;
  double baseline_compute_flops = 10e12;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kLogistic;
  TrainerConfig trainer;
  double surrogate_ceiling = 0.95;
  double surrogate_scale_samples = 2000.0;
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kBlobs;
  // blobs
  std::int64_t dim = 16;
  double separation = 5.0;
  std::int64_t test_per_class = 200;
  // idx; relative paths resolve against $LTFL_DATA_DIR when it is set
  std::string train_images, train_labels, test_images, test_labels;
  std::int64_t test_limit = 0;
  bool shared_label_pools = false;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::int64_t labels = 10;
  std::vector<NodeConfig> nodes;
  double baseline_bandwidth_bits_per_sec = 200e6;
  std::optional<std::vector<std::vector<double>>> link_bandwidth_bits_per_sec;
  UtilizationDistribution compute_utilization{0.01, 1.0};
  UtilizationDistribution bandwidth_utilization{0.005, 1.0};
  ModelSpec model{71.57e6, 38.42e6};
  SchedulerConstants scheduler{10000.0, 1.0, 500};
  StrategyKind strategy = StrategyKind::kLoadAware;
  LearnerConfig learner;
  DatasetConfig dataset;
  std::vector<double> accuracy_thresholds{0.7, 0.9};
  std::uint64_t seed = 0;
};

inline constexpr const char* kDataDirEnv = "LTFL_DATA_DIR";

// ---------------------------------------------------------------- JSON

namespace detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!j_.contains(key)) throw ConfigError(field(key), "is required");
    get(key, out);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline UtilizationDistribution read_range(const json* j, const std::string& path, UtilizationDistribution def) {
  if (!j) return def;
  Reader r(*j, path);
  r.get("lower", def.lower);
  r.get("upper", def.upper);
  r.reject_unknown();
  return def;
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::Reader;
  ScenarioConfig cfg;
  Reader root(j, "");
  root.get("name", cfg.name);
  root.require("labels", cfg.labels);

  const auto* nodes = root.child("nodes");
  if (!nodes || !nodes->is_array()) throw ConfigError("nodes", "is required and must be an array");
  for (std::size_t i = 0; i < nodes->size(); ++i) {
    Reader r((*nodes)[i], "nodes[" + std::to_string(i) + "]");
    NodeConfig n;
    r.require("label_counts", n.label_counts);
    r.get("baseline_compute_flops", n.baseline_compute_flops);
    r.reject_unknown();
    cfg.nodes.push_back(std::move(n));
  }

  root.get("baseline_bandwidth_bits_per_sec", cfg.baseline_bandwidth_bits_per_sec);
  if (const auto* m = root.child("link_bandwidth_bits_per_sec")) {
    try {
      cfg.link_bandwidth_bits_per_sec = m->get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("link_bandwidth_bits_per_sec", "must be a matrix of numbers");
    }
  }
  cfg.compute_utilization = detail::read_range(root.child("compute_utilization"), "compute_utilization",
                                               cfg.compute_utilization);
  cfg.bandwidth_utilization = detail::read_range(root.child("bandwidth_utilization"), "bandwidth_utilization",
                                                 cfg.bandwidth_utilization);

  if (const auto* m = root.child("model")) {
    Reader r(*m, "model");
    r.get("flops_per_sample", cfg.model.flops_per_sample);
    r.get("model_size_bits", cfg.model.model_bits);
    r.reject_unknown();
  }
  if (const auto* s = root.child("scheduler")) {
    Reader r(*s, "scheduler");
    r.get("variance_bound_samples_sq", cfg.scheduler.variance_bound);
    r.get("idle_wait_sec", cfg.scheduler.idle_wait);
    r.get("total_rounds", cfg.scheduler.total_rounds);
    r.reject_unknown();
  }
  std::string strategy = std::string(to_string(cfg.strategy));
  root.get("strategy", strategy);
  if (auto k = parse_strategy(strategy)) {
    cfg.strategy = *k;
  } else {
    throw ConfigError("strategy", "unknown strategy '" + strategy + "'");
  }

  if (const auto* l = root.child("learner")) {
    Reader r(*l, "learner");
    std::string kind = "logistic";
    r.get("kind", kind);
    if (kind == "logistic") cfg.learner.kind = LearnerKind::kLogistic;
    else if (kind == "surrogate") cfg.learner.kind = LearnerKind::kSurrogate;
    else throw ConfigError("learner.kind", "unknown learner '" + kind + "'");
    r.get("learning_rate", cfg.learner.trainer.learning_rate);
    r.get("momentum", cfg.learner.trainer.momentum);
    r.get("batch_size", cfg.learner.trainer.batch_size);
    r.get("epochs_per_round", cfg.learner.trainer.epochs_per_round);
    r.get("surrogate_ceiling", cfg.learner.surrogate_ceiling);
    r.get("surrogate_scale_samples", cfg.learner.surrogate_scale_samples);
    r.reject_unknown();
  }
  if (const auto* d = root.child("dataset")) {
    Reader r(*d, "dataset");
    std::string kind = "blobs";
    r.get("kind", kind);
    if (kind == "blobs") cfg.dataset.kind = DatasetKind::kBlobs;
    else if (kind == "idx") cfg.dataset.kind = DatasetKind::kIdx;
    else if (kind == "none") cfg.dataset.kind = DatasetKind::kNone;
    else throw ConfigError("dataset.kind", "unknown dataset kind '" + kind + "'");
    r.get("dim", cfg.dataset.dim);
    r.get("separation", cfg.dataset.separation);
    r.get("test_per_class", cfg.dataset.test_per_class);
    r.get("train_images", cfg.dataset.train_images);
    r.get("train_labels", cfg.dataset.train_labels);
    r.get("test_images", cfg.dataset.test_images);
    r.get("test_labels", cfg.dataset.test_labels);
    r.get("test_limit", cfg.dataset.test_limit);
    r.get("shared_label_pools", cfg.dataset.shared_label_pools);
    r.reject_unknown();
  }
  root.get("accuracy_thresholds", cfg.accuracy_thresholds);
  root.get("seed", cfg.seed);
  root.reject_unknown();
  return cfg;
}

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["labels"] = cfg.labels;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : cfg.nodes)
    j["nodes"].push_back({{"label_counts", n.label_counts}, {"baseline_compute_flops", n.baseline_compute_flops}});
  j["baseline_bandwidth_bits_per_sec"] = cfg.baseline_bandwidth_bits_per_sec;
  if (cfg.link_bandwidth_bits_per_sec) j["link_bandwidth_bits_per_sec"] = *cfg.link_bandwidth_bits_per_sec;
  j["compute_utilization"] = {{"lower", cfg.compute_utilization.lower}, {"upper", cfg.compute_utilization.upper}};
  j["bandwidth_utilization"] = {{"lower", cfg.bandwidth_utilization.lower},
                                {"upper", cfg.bandwidth_utilization.upper}};
  j["model"] = {{"flops_per_sample", cfg.model.flops_per_sample}, {"model_size_bits", cfg.model.model_bits}};
  j["scheduler"] = {{"variance_bound_samples_sq", cfg.scheduler.variance_bound},
                    {"idle_wait_sec", cfg.scheduler.idle_wait},
                    {"total_rounds", cfg.scheduler.total_rounds}};
  j["strategy"] = std::string(to_string(cfg.strategy));
  const auto& l = cfg.learner;
  j["learner"] = {{"kind", l.kind == LearnerKind::kLogistic ? "logistic" : "surrogate"},
                  {"learning_rate", l.trainer.learning_rate},
                  {"momentum", l.trainer.momentum},
                  {"batch_size", l.trainer.batch_size},
                  {"epochs_per_round", l.trainer.epochs_per_round},
                  {"surrogate_ceiling", l.surrogate_ceiling},
                  {"surrogate_scale_samples", l.surrogate_scale_samples}};
  const auto& d = cfg.dataset;
  nlohmann::json dj;
  dj["kind"] = d.kind == DatasetKind::kBlobs ? "blobs" : d.kind == DatasetKind::kIdx ? "idx" : "none";
  if (d.kind == DatasetKind::kBlobs) {
    dj["dim"] = d.dim;
    dj["separation"] = d.separation;
    dj["test_per_class"] = d.test_per_class;
  } else if (d.kind == DatasetKind::kIdx) {
    dj["train_images"] = d.train_images;
    dj["train_labels"] = d.train_labels;
    dj["test_images"] = d.test_images;
    dj["test_labels"] = d.test_labels;
  }
  dj["test_limit"] = d.test_limit;
  dj["shared_label_pools"] = d.shared_label_pools;
  j["dataset"] = dj;
  j["accuracy_thresholds"] = cfg.accuracy_thresholds;
  j["seed"] = cfg.seed;
  return j;
}

// ---------------------------------------------------------------- presets

namespace presets {

// Per-class sizes of the MNIST training split.
inline const Counts kMnistClassCounts{5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949};
inline const Counts kCifarClassCounts(10, 5000);

// Reconstructed label assignments: which labels each node holds.
using LabelTable = std::vector<std::vector<std::size_t>>;

inline LabelTable three_nodes() { return {{0, 1, 2, 3}, {3, 4, 5, 6}, {6, 7, 8, 9}}; }
inline LabelTable five_nodes() { return {{0, 1, 2, 3}, {2, 3, 4, 5}, {4, 5, 6}, {6, 7, 8}, {8, 9, 0, 1}}; }
inline LabelTable ten_nodes() {
  LabelTable t;
  for (std::size_t i = 0; i < 10; ++i) {
    std::vector<std::size_t> held{i, (i + 1) % 10, (i + 2) % 10};
    if (i % 2 == 0) held.push_back((i + 3) % 10);
    t.push_back(held);
  }
  return t;
}
inline LabelTable five_nodes_uneven() {
  return {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {1, 2, 3, 4, 5, 6, 7}, {0, 8, 9}, {3, 6}, {5}};
}

// Splits each class evenly (remainder to lower node ids) among its holders.
inline std::vector<NodeConfig> split(const LabelTable& table, const Counts& class_counts, double compute) {
  std::vector<NodeConfig> nodes(table.size());
  for (auto& n : nodes) {
    n.label_counts.assign(class_counts.size(), 0);
    n.baseline_compute_flops = compute;
  }
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    std::vector<std::size_t> holders;
    for (std::size_t i = 0; i < table.size(); ++i)
      if (std::find(table[i].begin(), table[i].end(), c) != table[i].end()) holders.push_back(i);
    const auto k = static_cast<std::int64_t>(holders.size());
    for (std::int64_t h = 0; h < k; ++h)
      nodes[holders[static_cast<std::size_t>(h)]].label_counts[c] = class_counts[c] / k + (h < class_counts[c] % k);
  }
  return nodes;
}

inline Counts scaled(const Counts& counts, double factor) {
  Counts out;
  for (auto v : counts) out.push_back(static_cast<std::int64_t>(std::llround(static_cast<double>(v) * factor)));
  return out;
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"mnist-3",  "mnist-5",  "mnist-10",  "mnist-5-uneven",
                                          "cifar-3",  "cifar-5",  "cifar-10",  "cifar-5-uneven",
                                          "blobs-5",  "blobs-5-uneven"};
  return n;
}

inline std::optional<ScenarioConfig> find(const std::string& name) {
  LabelTable table;
  std::string shape = name.substr(name.find('-') + 1);
  if (shape == "3") table = three_nodes();
  else if (shape == "5") table = five_nodes();
  else if (shape == "10") table = ten_nodes();
  else if (shape == "5-uneven") table = five_nodes_uneven();
  else return std::nullopt;

  ScenarioConfig cfg;
  cfg.name = name;
  cfg.labels = 10;
  if (name.starts_with("mnist-")) {
    // CNN timing constants; the learner runs on a 10-class Gaussian stand-in
    // with MNIST's per-class sizes unless the dataset is switched to idx.
    cfg.model = {71.57e6, 38.42e6};
    cfg.nodes = split(table, kMnistClassCounts, 10e12);
    cfg.accuracy_thresholds = {0.7, 0.9};
  } else if (name.starts_with("cifar-")) {
    cfg.model = {10.65e9, 358.38e6};
    cfg.nodes = split(table, kCifarClassCounts, 10e12);
    cfg.learner.kind = LearnerKind::kSurrogate;
    cfg.dataset.kind = DatasetKind::kNone;
    cfg.accuracy_thresholds = {0.6, 0.8};
  } else if (name.starts_with("blobs-")) {
    // Desk-scale comparison scenario: a tenth of MNIST's class sizes.
    cfg.model = {71.57e6, 38.42e6};
    cfg.nodes = split(table, scaled(kMnistClassCounts, 0.1), 10e12);
    cfg.scheduler.total_rounds = 300;
    cfg.accuracy_thresholds = {0.7, 0.9};
  } else {
    return std::nullopt;
  }
  return cfg;
}

}  // namespace presets

// Loads a config from a preset name or a JSON file. Parse failures are
// ConfigErrors; an unreadable file is an IoError.
inline ScenarioConfig load_config(const std::string& name_or_path) {
  if (auto p = presets::find(name_or_path); p && !std::filesystem::exists(name_or_path)) return *p;
  std::ifstream in(name_or_path);
  if (!in) throw IoError("cannot open config " + name_or_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(name_or_path, std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------- resolution

// Checks every invariant that does not need the dataset and builds the setup.
inline SimulationSetup resolve_setup(const ScenarioConfig& cfg) {
  if (cfg.labels < 2) throw ConfigError("labels", "need at least 2 labels");
  SimulationSetup s;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    if (static_cast<std::int64_t>(cfg.nodes[i].label_counts.size()) != cfg.labels)
      throw ConfigError("nodes[" + std::to_string(i) + "].label_counts",
                        "expected " + std::to_string(cfg.labels) + " entries");
    s.profiles.push_back({cfg.nodes[i].label_counts, cfg.nodes[i].baseline_compute_flops});
  }
  if (s.profiles.size() < 2) throw ConfigError("nodes", "need at least 2 nodes");
  if (cfg.link_bandwidth_bits_per_sec) {
    s.links = LinkProfile::from_matrix(*cfg.link_bandwidth_bits_per_sec);
  } else {
    if (!(cfg.baseline_bandwidth_bits_per_sec > 0))
      throw ConfigError("baseline_bandwidth_bits_per_sec", "must be > 0");
    s.links = LinkProfile::uniform(s.profiles.size(), cfg.baseline_bandwidth_bits_per_sec);
  }
  validate_profiles(s.profiles, s.links);
  cfg.compute_utilization.validate("compute_utilization");
  cfg.bandwidth_utilization.validate("bandwidth_utilization");
  cfg.model.validate();
  cfg.scheduler.validate();
  cfg.learner.trainer.validate();
  if (cfg.learner.kind == LearnerKind::kLogistic && cfg.dataset.kind == DatasetKind::kNone)
    throw ConfigError("dataset.kind", "the logistic learner needs a dataset");
  if (!(cfg.learner.surrogate_ceiling > 1.0 / static_cast<double>(cfg.labels) && cfg.learner.surrogate_ceiling <= 1))
    throw ConfigError("learner.surrogate_ceiling", "must lie in (1/labels, 1]");
  if (!(cfg.learner.surrogate_scale_samples > 0)) throw ConfigError("learner.surrogate_scale_samples", "must be > 0");
  if (cfg.dataset.kind == DatasetKind::kBlobs) {
    if (cfg.dataset.dim < 1) throw ConfigError("dataset.dim", "must be >= 1");
    if (cfg.dataset.test_per_class < 1) throw ConfigError("dataset.test_per_class", "must be >= 1");
  }
  if (cfg.dataset.test_limit < 0) throw ConfigError("dataset.test_limit", "must be >= 0");
  for (double t : cfg.accuracy_thresholds)
    if (!(t >= 0)) throw ConfigError("accuracy_thresholds", "thresholds must be >= 0");
  s.compute_dist = cfg.compute_utilization;
  s.bandwidth_dist = cfg.bandwidth_utilization;
  s.model = cfg.model;
  s.constants = cfg.scheduler;
  s.strategy = cfg.strategy;
  s.thresholds = cfg.accuracy_thresholds;
  s.seed = cfg.seed;
  return s;
}

inline std::filesystem::path resolve_data_path(const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) return std::filesystem::path(dir) / path;
  }
  return path;
}

// Builds the partitioned dataset (nullptr for dataset kind none). Pool sizes
// always equal the configured label counts.
inline std::shared_ptr<const PartitionedDataset> load_dataset(const ScenarioConfig& cfg, std::uint64_t seed) {
  const auto& d = cfg.dataset;
  if (d.kind == DatasetKind::kNone) return nullptr;
  Rng rng = make_stream(seed, Stream::kData);
  std::vector<Counts> demand;
  for (const auto& n : cfg.nodes) demand.push_back(n.label_counts);
  PartitionOptions opts{d.shared_label_pools, static_cast<std::size_t>(d.test_limit)};

  std::shared_ptr<PartitionedDataset> out;
  if (d.kind == DatasetKind::kBlobs) {
    Counts per_class(static_cast<std::size_t>(cfg.labels), d.test_per_class);
    for (const auto& row : demand)
      for (std::size_t c = 0; c < per_class.size(); ++c)
        per_class[c] = d.shared_label_pools ? std::max(per_class[c], row[c] + d.test_per_class)
                                            : per_class[c] + row[c];
    auto raw = std::make_shared<const Dataset>(
        generate_blobs(per_class, static_cast<std::size_t>(d.dim), d.separation, rng));
    out = std::make_shared<PartitionedDataset>(partition(raw, demand, rng, opts));
  } else {
    for (auto [key, value] : {std::pair{"dataset.train_images", &d.train_images},
                              std::pair{"dataset.train_labels", &d.train_labels}})
      if (value->empty()) throw ConfigError(key, "is required for idx datasets");
    auto raw = std::make_shared<Dataset>(load_idx(resolve_data_path(d.train_images), resolve_data_path(d.train_labels)));
    std::optional<Dataset> test;
    if (!d.test_images.empty() || !d.test_labels.empty())
      test = load_idx(resolve_data_path(d.test_images), resolve_data_path(d.test_labels));
    if (raw->classes < static_cast<std::size_t>(cfg.labels)) raw->classes = static_cast<std::size_t>(cfg.labels);
    if (raw->classes != static_cast<std::size_t>(cfg.labels))
      throw ConfigError("labels", "dataset has " + std::to_string(raw->classes) + " classes");
    if (test) test->classes = raw->classes;
    out = std::make_shared<PartitionedDataset>(
        partition(std::shared_ptr<const Dataset>(raw), demand, rng, opts, test ? &*test : nullptr));
  }
  if (out->pool_sizes() != demand) throw ContractError("partitioned pool sizes differ from configured label counts");
  if (out->test.size() == 0) throw ConfigError("dataset", "no samples left for the test set");
  return out;
}

inline std::unique_ptr<Learner> make_learner(const ScenarioConfig& cfg, const SimulationSetup& setup,
                                             std::shared_ptr<const PartitionedDataset> data) {
  if (cfg.learner.kind == LearnerKind::kSurrogate)
    return std::make_unique<SurrogateLearner>(setup.profiles, cfg.learner.surrogate_ceiling,
                                              cfg.learner.surrogate_scale_samples);
  return std::make_unique<LogisticLearner>(std::move(data), cfg.learner.trainer);
}

// Resolves, loads data, and runs one simulation with the config's seed.
inline SimulationResult run_config(const ScenarioConfig& cfg) {
  const SimulationSetup setup = resolve_setup(cfg);
  std::shared_ptr<const PartitionedDataset> data;
  if (cfg.learner.kind == LearnerKind::kLogistic) data = load_dataset(cfg, cfg.seed);
  auto learner = make_learner(cfg, setup, data);
  return run_simulation(setup, *learner);
}

}  // namespace ltfl
