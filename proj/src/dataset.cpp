// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "augrisk/numfmt.hpp"
#include "augrisk/rng.hpp"

namespace augrisk {

void LabeledDataset::validate() const {
  if (dim <= 0) throw std::invalid_argument("dataset: dim must be positive");
  if (classes < 2)
    throw std::invalid_argument("dataset: needs at least two classes");
  if (shape) {
    const long long product = 1LL * shape->height * shape->width * shape->channels;
    if (product != dim)
      throw std::invalid_argument("dataset: shape tag does not match dim");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabeledSample& s = samples[i];
    if (static_cast<int>(s.features.size()) != dim)
      throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                  " has wrong dimension");
    for (double v : s.features)
      if (!std::isfinite(v))
        throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                    " has non-finite feature");
    if (s.label < 0 || s.label >= classes)
      throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                  " label " + std::to_string(s.label) +
                                  " outside [0," + std::to_string(classes) +
                                  ")");
  }
}

LabeledDataset generate_two_moons(std::size_t n, double noise_sd,
                                  std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("two_moons: n must be at least 2");
  if (noise_sd < 0)
    throw std::invalid_argument("two_moons: noise_sd must be non-negative");

  const std::size_t n_outer = (n + 1) / 2;
  const std::size_t n_inner = n / 2;

  LabeledDataset ds;
  ds.dim = 2;
  ds.classes = 2;
  ds.name = "two-moons";
  ds.samples.reserve(n);

  Rng rng = Rng::stream(seed, /*tag=*/0x6d6f6f6eULL);  // "moon"
  auto arc_t = [](std::size_t j, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(j) /
                           static_cast<double>(count - 1)
                     : 0.0;
  };

  for (std::size_t j = 0; j < n_outer; ++j) {
    const double t = arc_t(j, n_outer);
    LabeledSample s;
    s.features = {std::cos(t) + noise_sd * rng.normal(),
                  std::sin(t) + noise_sd * rng.normal()};
    s.label = 0;
    ds.samples.push_back(std::move(s));
  }
  for (std::size_t j = 0; j < n_inner; ++j) {
    const double t = arc_t(j, n_inner);
    LabeledSample s;
    s.features = {1.0 - std::cos(t) + noise_sd * rng.normal(),
                  0.5 - std::sin(t) + noise_sd * rng.normal()};
    s.label = 1;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<double> blob_center(int klass, int classes, int dim) {
  std::vector<double> center(dim, 0.0);
  if (dim == 1) {
    center[0] = 2.0 * klass;
  } else {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(klass) / classes;
    center[0] = 2.0 * std::cos(angle);
    center[1] = 2.0 * std::sin(angle);
  }
  return center;
}

LabeledDataset generate_gaussian_blobs(std::size_t n, int classes, int dim,
                                       double spread, std::uint64_t seed) {
  if (classes < 2)
    throw std::invalid_argument("gaussian_blobs: needs at least two classes");
  if (dim < 1) throw std::invalid_argument("gaussian_blobs: dim must be >= 1");
  if (n < static_cast<std::size_t>(classes))
    throw std::invalid_argument("gaussian_blobs: n must be at least classes");
  if (spread < 0)
    throw std::invalid_argument("gaussian_blobs: spread must be non-negative");

  LabeledDataset ds;
  ds.dim = dim;
  ds.classes = classes;
  ds.name = "gaussian-blobs";
  ds.samples.reserve(n);

  Rng rng = Rng::stream(seed, /*tag=*/0x626c6f62ULL);  // "blob"
  for (std::size_t i = 0; i < n; ++i) {
    const int klass = static_cast<int>(i % classes);
    LabeledSample s;
    s.features = blob_center(klass, classes, dim);
    for (double& v : s.features) v += spread * rng.normal();
    s.label = klass;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, int dim, int classes) {
  if (dim < 1) throw std::invalid_argument("load_csv: dim must be >= 1");
  if (classes < 2) throw std::invalid_argument("load_csv: classes must be >= 2");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  LabeledDataset ds;
  ds.dim = dim;
  ds.classes = classes;
  ds.name = path;

  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    const auto fields = split_fields(sv);
    if (fields.size() != static_cast<std::size_t>(dim) + 1)
      throw std::runtime_error("load_csv: malformed row " + std::to_string(row) +
                               ": expected " + std::to_string(dim + 1) +
                               " fields, got " + std::to_string(fields.size()));
    LabeledSample s;
    s.features.resize(dim);
    for (int k = 0; k < dim; ++k) {
      double v;
      if (!parse_double(trim(fields[k]), v) || !std::isfinite(v))
        throw std::runtime_error("load_csv: malformed row " +
                                 std::to_string(row) + ": field " +
                                 std::to_string(k + 1) + " is not a finite number");
      s.features[k] = v;
    }
    long long label;
    if (!parse_int(trim(fields[dim]), label))
      throw std::runtime_error("load_csv: malformed row " + std::to_string(row) +
                               ": label field is not an integer");
    if (label < 0 || label >= classes)
      throw std::runtime_error("load_csv: row " + std::to_string(row) +
                               ": label " + std::to_string(label) +
                               " outside [0," + std::to_string(classes) + ")");
    s.label = static_cast<int>(label);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  for (const LabeledSample& s : ds.samples) {
    for (double v : s.features) out << format_double(v) << ',';
    out << s.label << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                const SplitSpec& spec) {
  if (ds.samples.empty()) throw std::invalid_argument("split: empty dataset");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must be in (0,1)");

  const std::size_t n = ds.samples.size();
  const auto train_n = static_cast<std::size_t>(
      std::ceil(spec.train_fraction * static_cast<double>(n)));
  if (train_n == 0 || train_n >= n)
    throw std::invalid_argument(
        "split: degenerate split (one side would be empty)");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::stream(spec.seed, /*tag=*/0x73706c69ULL);  // "spli"
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_n);
  std::vector<std::size_t> test_idx(order.begin() + train_n, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&](const std::vector<std::size_t>& idx, const char* tag) {
    LabeledDataset out;
    out.dim = ds.dim;
    out.classes = ds.classes;
    out.name = ds.name + ":" + tag;
    out.shape = ds.shape;
    out.samples.reserve(idx.size());
    for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
    return out;
  };
  return {take(train_idx, "train"), take(test_idx, "test")};
}

}  // namespace augrisk
