// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "ltfl/data.hpp"

using namespace ltfl;
namespace fs = std::filesystem;

namespace {

// Nearest-centroid accuracy, centroids estimated from the data itself.
double nearest_centroid_accuracy(const Dataset& d) {
  std::vector<std::vector<double>> mean(d.classes, std::vector<double>(d.dim, 0.0));
  const auto counts = d.class_counts();
  for (std::size_t s = 0; s < d.size(); ++s)
    for (std::size_t j = 0; j < d.dim; ++j) mean[d.labels[s]][j] += d.row(s)[j] / static_cast<double>(counts[d.labels[s]]);
  std::size_t hit = 0;
  for (std::size_t s = 0; s < d.size(); ++s) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < d.classes; ++c) {
      double dist = 0;
      for (std::size_t j = 0; j < d.dim; ++j) dist += (d.row(s)[j] - mean[c][j]) * (d.row(s)[j] - mean[c][j]);
      if (dist < best_d) best_d = dist, best = c;
    }
    hit += best == d.labels[s];
  }
  return static_cast<double>(hit) / static_cast<double>(d.size());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ltfl_data_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("blobs: class sizes and separation control difficulty", "[data]") {
  Rng rng(4);
  const Dataset d = generate_blobs(std::vector<std::int64_t>{30, 0, 70}, 3, 2.0, rng);
  CHECK(d.class_counts() == Counts{30, 0, 70});
  CHECK(d.features.size() == 100 * 3);

  Rng a(1), b(1);
  const Dataset far = generate_blobs(4, 300, 2, 10.0, a);
  CHECK(nearest_centroid_accuracy(far) >= 0.99);
  const Dataset none = generate_blobs(4, 300, 2, 0.0, b);
  // Fitted centroids overfit a little noise; stay near chance.
  CHECK(nearest_centroid_accuracy(none) < 0.4);

  Rng c(1);
  CHECK(generate_blobs(4, 300, 2, 10.0, c).features == far.features);
}

TEST_CASE("blobs: invalid shapes are rejected", "[data]") {
  Rng rng(0);
  CHECK_THROWS_AS(generate_blobs(1, 10, 2, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(generate_blobs(3, 10, 0, 1.0, rng), ConfigError);
}

TEST_CASE("idx: write then load round-trips at 8-bit precision", "[data]") {
  TempDir tmp;
  Dataset d;
  d.dim = 4;
  d.classes = 3;
  const float rows[3][4] = {{0, 1, 0.5f, 0.25f}, {1, 1, 1, 1}, {0, 0, 0, 0.2f}};
  d.push(rows[0], 2);
  d.push(rows[1], 0);
  d.push(rows[2], 1);
  write_idx(tmp.path / "img", tmp.path / "lab", d, 2, 2);
  const Dataset back = load_idx(tmp.path / "img", tmp.path / "lab");
  CHECK(back.dim == 4);
  CHECK(back.classes == 3);
  CHECK(back.labels == d.labels);
  for (std::size_t i = 0; i < d.features.size(); ++i) CHECK(std::abs(back.features[i] - d.features[i]) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("idx: malformed files raise format errors", "[data]") {
  TempDir tmp;
  Dataset d;
  d.dim = 1;
  d.classes = 2;
  const float x[1] = {0.5f};
  d.push(x, 0);
  d.push(x, 1);
  const auto img = tmp.path / "img", lab = tmp.path / "lab";
  write_idx(img, lab, d, 1, 1);

  auto expect_format = [&](const std::string& needle) {
    try {
      load_idx(img, lab);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(needle));
    }
  };

  SECTION("bad magic") {
    auto bytes = read_bytes(img);
    bytes[3] = 0x01;
    write_bytes(img, bytes);
    expect_format("bad magic");
  }
  SECTION("truncated labels") {
    auto bytes = read_bytes(lab);
    bytes.pop_back();
    write_bytes(lab, bytes);
    expect_format("label count mismatch");
  }
  SECTION("image and label counts disagree") {
    Dataset more = d;
    more.push(x, 1);
    write_idx(tmp.path / "img3", tmp.path / "lab3", more, 1, 1);
    fs::copy_file(tmp.path / "lab3", lab, fs::copy_options::overwrite_existing);
    expect_format("image/label count mismatch");
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_idx(tmp.path / "absent", lab), IoError);
  }
}

TEST_CASE("partition: disjoint pools sized by demand", "[data]") {
  Rng rng(8);
  auto raw = std::make_shared<const Dataset>(generate_blobs(4, 50, 2, 3.0, rng));
  const std::vector<Counts> demand{{20, 20, 0, 0}, {0, 25, 25, 0}, {0, 0, 25, 40}};
  const auto p = partition(raw, demand, rng);
  CHECK(p.pool_sizes() == demand);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (std::size_t i = 0; i < p.nodes(); ++i)
    for (std::size_t c = 0; c < 4; ++c)
      for (auto s : p.pools[i][c]) {
        CHECK(raw->labels[s] == c);
        seen.insert(s);
        ++total;
      }
  CHECK(seen.size() == total);
  CHECK(p.test.class_counts() == Counts{30, 5, 0, 10});
}

TEST_CASE("partition: shortfall names each short label", "[data]") {
  Rng rng(8);
  auto raw = std::make_shared<const Dataset>(generate_blobs(std::vector<std::int64_t>{10, 0, 10}, 2, 3.0, rng));
  try {
    partition(raw, {{5, 1, 0}, {8, 0, 3}}, rng);
    FAIL("expected a shortfall");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "nodes");
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("label 0 needs 13 has 10"));
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("label 1 needs 1 has 0"));
  }
}

TEST_CASE("partition: shared pools and test cap", "[data]") {
  Rng rng(2);
  auto raw = std::make_shared<const Dataset>(generate_blobs(2, 40, 2, 3.0, rng));
  PartitionOptions opts;
  opts.shared_label_pools = true;
  opts.test_limit = 7;
  const auto p = partition(raw, {{30, 0}, {20, 10}}, rng, opts);
  CHECK(p.pool_sizes() == std::vector<Counts>{{30, 0}, {20, 10}});
  // Shared: the second node's label-0 pool is a prefix of the first's.
  for (std::size_t i = 0; i < 20; ++i) CHECK(p.pools[1][0][i] == p.pools[0][0][i]);
  CHECK(p.test.size() == 7);
}
