// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ltfl/domain.hpp"
#include "ltfl/rng.hpp"

namespace ltfl {

// Dense labeled samples, features row-major.
struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<float> features;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const float> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

  void push(std::span<const float> x, std::uint8_t label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }

  std::vector<std::int64_t> class_counts() const {
    std::vector<std::int64_t> n(classes, 0);
    for (auto l : labels) ++n[l];
    return n;
  }
};

// Isotropic unit-variance Gaussian clusters, `per_class[c]` samples of class c,
// generated class by class. Any two centers are `separation` apart when
// dim >= classes (scaled simplex); otherwise adjacent centers on a circle
// (dim >= 2) or a line (dim == 1) are `separation` apart.
inline Dataset generate_blobs(const std::vector<std::int64_t>& per_class, std::size_t dim, double separation,
                              Rng& rng) {
  const std::size_t classes = per_class.size();
  if (classes < 2) throw ConfigError("dataset.classes", "need at least 2 classes");
  if (dim < 1) throw ConfigError("dataset.dim", "must be >= 1");
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  if (dim >= classes) {
    for (std::size_t c = 0; c < classes; ++c) centers[c][c] = separation / std::numbers::sqrt2;
  } else if (dim >= 2) {
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(classes)));
    for (std::size_t c = 0; c < classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
      centers[c][0] = radius * std::cos(angle);
      centers[c][1] = radius * std::sin(angle);
    }
  } else {
    for (std::size_t c = 0; c < classes; ++c) centers[c][0] = separation * static_cast<double>(c);
  }
  Dataset d;
  d.dim = dim;
  d.classes = classes;
  std::vector<float> x(dim);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::int64_t s = 0; s < per_class[c]; ++s) {
      for (std::size_t k = 0; k < dim; ++k) x[k] = static_cast<float>(centers[c][k] + rng.normal());
      d.push(x, static_cast<std::uint8_t>(c));
    }
  }
  return d;
}

inline Dataset generate_blobs(std::size_t classes, std::int64_t per_class, std::size_t dim, double separation,
                              Rng& rng) {
  return generate_blobs(std::vector<std::int64_t>(classes, per_class), dim, separation, rng);
}

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t offset) {
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Reads an IDX image/label pair (big-endian headers, u8 payload). Pixels are
// scaled to [0, 1]; the class count is 1 + the largest label.
inline Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);

  if (images.size() < 16) throw FormatError(images_path.string() + ": truncated image header");
  if (detail::read_be32(images, 0) != kIdxImagesMagic)
    throw FormatError(images_path.string() + ": bad magic (expected 0x00000803)");
  const std::size_t count = detail::read_be32(images, 4);
  const std::size_t rows = detail::read_be32(images, 8);
  const std::size_t cols = detail::read_be32(images, 12);
  if (images.size() != 16 + count * rows * cols)
    throw FormatError(images_path.string() + ": image count mismatch (header says " + std::to_string(count) +
                      " images of " + std::to_string(rows) + "x" + std::to_string(cols) + ")");

  if (labels.size() < 8) throw FormatError(labels_path.string() + ": truncated label header");
  if (detail::read_be32(labels, 0) != kIdxLabelsMagic)
    throw FormatError(labels_path.string() + ": bad magic (expected 0x00000801)");
  const std::size_t label_count = detail::read_be32(labels, 4);
  if (labels.size() != 8 + label_count)
    throw FormatError(labels_path.string() + ": label count mismatch (header says " + std::to_string(label_count) +
                      ", file holds " + std::to_string(labels.size() - 8) + ")");
  if (label_count != count)
    throw FormatError("image/label count mismatch: " + std::to_string(count) + " images vs " +
                      std::to_string(label_count) + " labels");

  Dataset d;
  d.dim = rows * cols;
  d.features.resize(count * d.dim);
  for (std::size_t i = 0; i < count * d.dim; ++i) d.features[i] = static_cast<float>(images[16 + i]) / 255.0f;
  d.labels.assign(labels.begin() + 8, labels.end());
  std::uint8_t max_label = 0;
  for (auto l : d.labels) max_label = std::max(max_label, l);
  d.classes = static_cast<std::size_t>(max_label) + 1;
  return d;
}

// Writes an IDX pair; used to build fixtures.
inline void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      const Dataset& d, std::uint32_t rows, std::uint32_t cols) {
  auto be32 = [](std::ofstream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                                static_cast<char>(v)};
    out.write(b.data(), 4);
  };
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw IoError("cannot write IDX files");
  be32(img, kIdxImagesMagic);
  be32(img, static_cast<std::uint32_t>(d.size()));
  be32(img, rows);
  be32(img, cols);
  for (float v : d.features) img.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0f))));
  be32(lab, kIdxLabelsMagic);
  be32(lab, static_cast<std::uint32_t>(d.size()));
  for (auto l : d.labels) lab.put(static_cast<char>(l));
}

// Per-node label pools (indices into `train`) plus a held-out test set.
struct PartitionedDataset {
  std::shared_ptr<const Dataset> train;
  std::vector<std::vector<std::vector<std::size_t>>> pools;  // [node][label] -> sample indices
  Dataset test;

  std::size_t nodes() const { return pools.size(); }
  std::size_t classes() const { return train->classes; }

  std::vector<Counts> pool_sizes() const {
    std::vector<Counts> sizes(pools.size());
    for (std::size_t i = 0; i < pools.size(); ++i)
      for (const auto& p : pools[i]) sizes[i].push_back(static_cast<std::int64_t>(p.size()));
    return sizes;
  }
};

struct PartitionOptions {
  bool shared_label_pools = false;  // nodes holding the same label draw from one pool
  std::size_t test_limit = 0;       // 0 keeps every held-out sample
};

// Assigns samples per the demand table `demand[node][label]`. Each label's
// samples are shuffled once (ascending label order) and handed out in node
// order; whatever is left joins `extra_test` to form the test set.
inline PartitionedDataset partition(std::shared_ptr<const Dataset> raw, const std::vector<Counts>& demand, Rng& rng,
                                    const PartitionOptions& options = {}, const Dataset* extra_test = nullptr) {
  const std::size_t classes = raw->classes;
  for (std::size_t i = 0; i < demand.size(); ++i)
    if (demand[i].size() != classes)
      throw ConfigError("nodes[" + std::to_string(i) + "].label_counts",
                        "expected " + std::to_string(classes) + " entries to match the dataset");

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t s = 0; s < raw->size(); ++s) by_class[raw->labels[s]].push_back(s);

  std::ostringstream shortfalls;
  bool short_any = false;
  for (std::size_t c = 0; c < classes; ++c) {
    std::int64_t need = 0;
    for (const auto& row : demand) need = options.shared_label_pools ? std::max(need, row[c]) : need + row[c];
    const auto have = static_cast<std::int64_t>(by_class[c].size());
    if (need > have) {
      shortfalls << (short_any ? "; " : "") << "label " << c << " needs " << need << " has " << have;
      short_any = true;
    }
  }
  if (short_any) throw ConfigError("nodes", "demand exceeds supply: " + shortfalls.str());

  PartitionedDataset out;
  out.pools.assign(demand.size(), std::vector<std::vector<std::size_t>>(classes));
  out.test.dim = raw->dim;
  out.test.classes = classes;
  std::vector<std::size_t> leftovers;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& ids = by_class[c];
    rng.shuffle(std::span<std::size_t>(ids));
    std::size_t cursor = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < demand.size(); ++i) {
      const auto n = static_cast<std::size_t>(demand[i][c]);
      const std::size_t start = options.shared_label_pools ? 0 : cursor;
      out.pools[i][c].assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                             ids.begin() + static_cast<std::ptrdiff_t>(start + n));
      cursor += n;
      used = std::max(used, start + n);
    }
    leftovers.insert(leftovers.end(), ids.begin() + static_cast<std::ptrdiff_t>(used), ids.end());
  }
  for (auto s : leftovers) out.test.push(raw->row(s), raw->labels[s]);
  if (extra_test) {
    if (extra_test->dim != raw->dim) throw ConfigError("dataset", "test set dimension differs from training set");
    for (std::size_t s = 0; s < extra_test->size(); ++s) out.test.push(extra_test->row(s), extra_test->labels[s]);
  }
  if (options.test_limit > 0 && out.test.size() > options.test_limit) {
    std::vector<std::size_t> order(out.test.size());
    for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(options.test_limit);
    std::sort(order.begin(), order.end());
    Dataset capped;
    capped.dim = out.test.dim;
    capped.classes = classes;
    for (auto s : order) capped.push(out.test.row(s), out.test.labels[s]);
    out.test = std::move(capped);
  }
  out.train = std::move(raw);
  return out;
}

}  // namespace ltfl
