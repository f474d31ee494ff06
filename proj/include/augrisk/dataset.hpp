// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Labeled datasets: synthetic generators, CSV ingestion, deterministic
// splits. Datasets are immutable after construction and safe to share
// across worker threads.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace augrisk {

/// Geometry tag for image-like data stored as a flat vector of
/// length height * width * channels (row-major, channel-last).
struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;
};

struct LabeledSample {
  std::vector<double> features;
  int label = 0;
};

struct LabeledDataset {
  std::vector<LabeledSample> samples;
  int dim = 0;
  int classes = 0;
  std::string name;
  std::optional<ImageShape> shape;

  std::size_t size() const { return samples.size(); }
  bool image_like() const { return shape.has_value(); }

  /// Throws std::invalid_argument on any invariant violation:
  /// per-sample dimension, finiteness, label range, shape consistency.
  void validate() const;
};

struct SplitSpec {
  double train_fraction = 0.8;  // strictly inside (0,1)
  std::uint64_t seed = 0;
};

/// Two interleaved half-circles in 2-D, Gaussian noise of the given sd.
/// Classes balanced within one sample; deterministic in (n, noise_sd, seed).
LabeledDataset generate_two_moons(std::size_t n, double noise_sd,
                                  std::uint64_t seed);

/// Isotropic Gaussian blobs: class k is N(center_k, spread^2 I) with fixed,
/// pairwise-distinct centers. Classes filled round-robin (balanced within 1).
LabeledDataset generate_gaussian_blobs(std::size_t n, int classes, int dim,
                                       double spread, std::uint64_t seed);

/// The fixed center used for class k by generate_gaussian_blobs.
std::vector<double> blob_center(int klass, int classes, int dim);

/// One sample per line: dim decimal features, then one integer label.
/// Errors cite the 1-based row number.
LabeledDataset load_csv(const std::string& path, int dim, int classes);

/// Inverse of load_csv; numbers are written in shortest round-trip form.
void save_csv(const LabeledDataset& ds, const std::string& path);

/// Disjoint (train, test) partition of sizes ceil(n*f) and n - ceil(n*f),
/// deterministic in the seed. A split that would leave either side empty is
/// rejected as degenerate.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                const SplitSpec& spec);

}  // namespace augrisk
