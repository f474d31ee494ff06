// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-example stochastic augmentations, their composition, and probabilistic
// application. Every augmenter maps a sample to a new sample of the same
// dimension with a valid soft label; image-like outputs are clipped to [0,1].
// Augmenters are immutable after construction/fit; apply() takes an explicit
// per-call RNG stream so parallel application stays deterministic.

#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "augrisk/dataset.hpp"
#include "augrisk/rng.hpp"

namespace augrisk {

struct AugmentedSample {
  std::vector<double> features;
  std::vector<double> soft_label;  // length c, entries >= 0, sums to 1
};

struct NoiseParams {
  double eps = 0.1;  // per-coordinate additive noise uniform on [0, eps]
};

struct CropParams {
  int max_margin = 1;  // flat mode: zeroed outer band, per side
  int pad = 0;         // image mode: zero padding before the random crop
};

struct PermuteParams {
  enum class Mode { horizontal_flip, random_swap };
  Mode mode = Mode::horizontal_flip;
  int swap_pairs = 1;  // random_swap: number of transpositions
};

struct ClassicalParams {
  double rotation_max_deg = 2.0;
  double jitter_lo = 0.75;
  double jitter_hi = 1.25;
  int crop_pad = 4;
};

struct MixupParams {
  double alpha = 1.0;  // Beta(alpha, alpha) mixing coefficient
};

struct DensityParams {
  int components_per_class = 1;
  std::uint64_t fit_seed = 0;
};

/// Diagonal Gaussian mixture for one class, produced by fit_density.
struct ClassMixture {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> vars;
};

struct DensityModel {
  int dim = 0;
  int classes = 0;
  std::vector<ClassMixture> per_class;
};

class Augmenter {
 public:
  enum class Kind { noise, crop, permute, classical, mixup, density, compose };

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  static Augmenter noise(NoiseParams p);
  static Augmenter crop(CropParams p);
  static Augmenter permute(PermuteParams p);
  static Augmenter classical(ClassicalParams p);
  static Augmenter mixup(MixupParams p);
  /// Density augmenters come from fit_density; this one throws on apply.
  static Augmenter density(DensityParams p);

  Kind kind() const { return kind_; }

  /// Augment one sample. `peers` supplies the mixup partner pool and the
  /// geometry/clipping mode; pass `self_index` when the sample is peers[i]
  /// so mixup can exclude it. Hard labels become one-hot soft labels.
  AugmentedSample apply(const LabeledSample& s, const LabeledDataset& peers,
                        Rng& rng, std::size_t self_index = npos) const;

  /// Soft-label variant used by composition.
  AugmentedSample apply(const AugmentedSample& s, const LabeledDataset& peers,
                        Rng& rng, std::size_t self_index = npos) const;

  /// Input dimension pinned by a fit (density); nullopt when dimension-free.
  std::optional<int> intrinsic_dim() const;

  friend Augmenter compose(Augmenter outer, Augmenter inner);
  friend Augmenter fit_density(const DensityParams& params,
                               const LabeledDataset& ds);

 private:
  Augmenter() = default;

  using Params = std::variant<std::monostate, NoiseParams, CropParams,
                              PermuteParams, ClassicalParams, MixupParams,
                              DensityParams>;

  Kind kind_ = Kind::noise;
  Params params_;
  std::shared_ptr<const DensityModel> density_;
  std::shared_ptr<const Augmenter> outer_, inner_;  // compose
};

/// Lemma-style closure: applying the result equals applying `inner`, then
/// `outer`. Throws when both sides pin different input dimensions.
Augmenter compose(Augmenter outer, Augmenter inner);

/// Fits a per-class diagonal-Gaussian mixture by EM on `ds` and returns a
/// density augmenter that resamples inputs conditioned on the sample's class.
Augmenter fit_density(const DensityParams& params, const LabeledDataset& ds);

/// Independently replaces each sample by its augmentation with probability
/// p_aug (one-hot passthrough otherwise). Per-sample RNG streams derive from
/// (seed, index), so the result is reproducible bitwise.
std::vector<AugmentedSample> stochastic_apply(const Augmenter& a, double p_aug,
                                              const LabeledDataset& ds,
                                              std::uint64_t seed);

/// One line per sample: features, then the soft label expanded to c columns.
void save_augmented_csv(const std::vector<AugmentedSample>& samples,
                        const std::string& path);

std::vector<double> one_hot(int label, int classes);

namespace detail {

/// The convex combination behind mixup: (1-m)*s + m*partner for both the
/// features and the label vectors.
AugmentedSample mix_pair(const AugmentedSample& s, const LabeledSample& partner,
                         int classes, double m);

/// The random draws behind one classical-augmentation application
/// (exposed so tests can pin their ranges).
struct ClassicalDraw {
  bool flip = false;
  double angle_deg = 0.0;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  int crop_oy = 0, crop_ox = 0;
};

ClassicalDraw draw_classical(const ClassicalParams& p, Rng& rng);

std::vector<double> rotate_bilinear(const std::vector<double>& img,
                                    const ImageShape& shape, double angle_deg);

}  // namespace detail

}  // namespace augrisk
