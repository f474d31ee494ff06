// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "augrisk/augment.hpp"
#include "augrisk/dataset.hpp"
#include "augrisk/rng.hpp"
#include "oracles.hpp"

using namespace augrisk;

namespace {

LabeledDataset flat_peers(std::uint64_t seed = 1) {
  return generate_gaussian_blobs(40, 2, 5, 0.5, seed);
}

LabeledDataset image_peers(std::uint64_t seed = 2, int h = 5, int w = 5,
                           int ch = 1) {
  LabeledDataset ds;
  ds.dim = h * w * ch;
  ds.classes = 2;
  ds.name = "toy-images";
  ds.shape = ImageShape{h, w, ch};
  Rng rng(seed);
  for (int i = 0; i < 20; ++i) {
    LabeledSample s;
    s.features.resize(ds.dim);
    for (double& v : s.features) v = rng.uniform();
    s.label = i % 2;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void check_valid(const AugmentedSample& s, int dim, int classes) {
  REQUIRE(static_cast<int>(s.features.size()) == dim);
  REQUIRE(static_cast<int>(s.soft_label.size()) == classes);
  double sum = 0;
  for (double p : s.soft_label) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
  for (double v : s.features) CHECK(std::isfinite(v));
}

std::vector<Augmenter> all_kinds(const LabeledDataset& fit_on) {
  return {
      Augmenter::noise({0.2}),
      Augmenter::crop({2, 1}),
      Augmenter::permute({PermuteParams::Mode::horizontal_flip, 1}),
      Augmenter::permute({PermuteParams::Mode::random_swap, 3}),
      Augmenter::classical({2.0, 0.75, 1.25, 2}),
      Augmenter::mixup({1.0}),
      fit_density({1, 5}, fit_on),
  };
}

}  // namespace

TEST_CASE("noise: eps=0 is the identity; output stays within eps in sup norm") {
  const LabeledDataset peers = flat_peers();
  Rng rng(1);
  const Augmenter id = Augmenter::noise({0.0});
  const AugmentedSample out = id.apply(peers.samples[3], peers, rng, 3);
  CHECK(out.features == peers.samples[3].features);
  CHECK(out.soft_label == one_hot(peers.samples[3].label, 2));

  const Augmenter noisy = Augmenter::noise({0.25});
  for (int i = 0; i < 200; ++i) {
    const AugmentedSample s = noisy.apply(peers.samples[i % 40], peers, rng, i % 40);
    for (std::size_t k = 0; k < s.features.size(); ++k) {
      const double diff = s.features[k] - peers.samples[i % 40].features[k];
      CHECK(diff >= 0.0);  // one-sided support [0, eps]
      CHECK(diff <= 0.25);
    }
  }
  CHECK_THROWS_AS(Augmenter::noise({-0.1}), std::invalid_argument);
}

TEST_CASE("noise on image data clips to [0,1]") {
  const LabeledDataset peers = image_peers();
  const Augmenter noisy = Augmenter::noise({0.5});
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const AugmentedSample s = noisy.apply(peers.samples[i % 20], peers, rng);
    for (double v : s.features) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("mixup: forced endpoints and convexity") {
  const LabeledDataset peers = flat_peers();
  const AugmentedSample base{peers.samples[0].features,
                             one_hot(peers.samples[0].label, 2)};

  const AugmentedSample at0 = detail::mix_pair(base, peers.samples[1], 2, 0.0);
  CHECK(at0.features == base.features);
  CHECK(at0.soft_label == base.soft_label);

  const AugmentedSample at1 = detail::mix_pair(base, peers.samples[1], 2, 1.0);
  CHECK(at1.features == peers.samples[1].features);
  CHECK(at1.soft_label == one_hot(peers.samples[1].label, 2));

  Rng rng(3);
  const Augmenter mix = Augmenter::mixup({0.7});
  for (int i = 0; i < 300; ++i) {
    const std::size_t self = i % peers.size();
    const AugmentedSample s = mix.apply(peers.samples[self], peers, rng, self);
    check_valid(s, peers.dim, peers.classes);
    // coordinatewise convex hull over all peers (the partner is unknown here)
    for (int k = 0; k < peers.dim; ++k) {
      double lo = peers.samples[self].features[k], hi = lo;
      for (const LabeledSample& p : peers.samples) {
        lo = std::min(lo, p.features[k]);
        hi = std::max(hi, p.features[k]);
      }
      CHECK(s.features[k] >= lo - 1e-12);
      CHECK(s.features[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("mixup alpha=1: mixing coefficient is Uniform[0,1] by KS") {
  // d=1 peers {0, 1}: with self_index=0 the partner is forced, so the
  // output feature equals the draw of M itself
  LabeledDataset peers;
  peers.dim = 1;
  peers.classes = 2;
  peers.name = "pair";
  peers.samples = {{{0.0}, 0}, {{1.0}, 1}};

  const Augmenter mix = Augmenter::mixup({1.0});
  Rng rng(4);
  std::vector<double> draws;
  draws.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    const AugmentedSample s = mix.apply(peers.samples[0], peers, rng, 0);
    draws.push_back(s.features[0]);
  }
  CHECK(oracles::ks_uniform(draws) < 1.628 / std::sqrt(10000.0));
}

TEST_CASE("mixup edge cases") {
  LabeledDataset lone;
  lone.dim = 1;
  lone.classes = 2;
  lone.samples = {{{0.5}, 0}};
  Rng rng(5);
  const Augmenter mix = Augmenter::mixup({1.0});
  CHECK_THROWS_AS(mix.apply(lone.samples[0], lone, rng, 0), std::invalid_argument);
  CHECK_THROWS_AS(Augmenter::mixup({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Augmenter::mixup({-2.0}), std::invalid_argument);
}

TEST_CASE("permute: flip is an involution and preserves the multiset") {
  for (const LabeledDataset& peers : {flat_peers(), image_peers()}) {
    const Augmenter flip =
        Augmenter::permute({PermuteParams::Mode::horizontal_flip, 1});
    Rng rng(6);
    const LabeledSample& s = peers.samples[0];
    const AugmentedSample once = flip.apply(s, peers, rng);
    const AugmentedSample twice =
        flip.apply(once, peers, rng);
    CHECK(twice.features == s.features);

    std::multiset<double> before(s.features.begin(), s.features.end());
    std::multiset<double> after(once.features.begin(), once.features.end());
    CHECK(before == after);
  }
}

TEST_CASE("permute: random swaps preserve the multiset") {
  const LabeledDataset peers = flat_peers();
  const Augmenter swap = Augmenter::permute({PermuteParams::Mode::random_swap, 4});
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const LabeledSample& s = peers.samples[i % 40];
    const AugmentedSample out = swap.apply(s, peers, rng, i % 40);
    std::multiset<double> before(s.features.begin(), s.features.end());
    std::multiset<double> after(out.features.begin(), out.features.end());
    CHECK(before == after);
  }
}

TEST_CASE("crop: flat mode zeroes an outer band, one element survives") {
  LabeledDataset peers;
  peers.dim = 3;
  peers.classes = 2;
  peers.samples = {{{1.0, 2.0, 3.0}, 0}, {{4.0, 5.0, 6.0}, 1}};
  const Augmenter crop = Augmenter::crop({5, 0});  // margin larger than d
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const AugmentedSample out = crop.apply(peers.samples[0], peers, rng, 0);
    int nonzero = 0;
    for (double v : out.features) nonzero += v != 0.0;
    CHECK(nonzero >= 1);
    // zeroed band is outer: the non-zero entries are contiguous originals
    for (int k = 0; k < 3; ++k)
      if (out.features[k] != 0.0)
        CHECK(out.features[k] == peers.samples[0].features[k]);
  }
}

TEST_CASE("crop: image mode shifts content after padding, pad=0 is identity") {
  const LabeledDataset peers = image_peers(9, 4, 4, 1);
  Rng rng(9);
  const Augmenter id = Augmenter::crop({0, 0});
  CHECK(id.apply(peers.samples[0], peers, rng).features ==
        peers.samples[0].features);

  const Augmenter crop = Augmenter::crop({0, 2});
  for (int i = 0; i < 50; ++i) {
    const AugmentedSample out = crop.apply(peers.samples[0], peers, rng);
    check_valid(out, peers.dim, peers.classes);
    // every non-zero output pixel must exist somewhere in the input
    std::multiset<double> input(peers.samples[0].features.begin(),
                                peers.samples[0].features.end());
    for (double v : out.features)
      if (v != 0.0) CHECK(input.count(v) > 0);
  }
}

TEST_CASE("classical: draw ranges match the configured knobs") {
  const ClassicalParams params{2.0, 0.75, 1.25, 4};
  Rng rng(10);
  for (int i = 0; i < 10000; ++i) {
    const detail::ClassicalDraw d = detail::draw_classical(params, rng);
    CHECK(std::abs(d.angle_deg) <= 2.0);
    CHECK(d.brightness >= 0.75);
    CHECK(d.brightness <= 1.25);
    CHECK(d.contrast >= 0.75);
    CHECK(d.contrast <= 1.25);
    CHECK(d.saturation >= 0.75);
    CHECK(d.saturation <= 1.25);
    CHECK(d.crop_oy >= 0);
    CHECK(d.crop_oy <= 8);
    CHECK(d.crop_ox >= 0);
    CHECK(d.crop_ox <= 8);
  }
}

TEST_CASE("classical: zero-angle rotation is the identity") {
  const LabeledDataset peers = image_peers(11, 6, 6, 1);
  CHECK(detail::rotate_bilinear(peers.samples[0].features, *peers.shape, 0.0) ==
        peers.samples[0].features);
}

TEST_CASE("classical: image pipeline clips to [0,1], flat mode keeps dim") {
  const LabeledDataset images = image_peers(12, 5, 5, 3);
  const Augmenter aug = Augmenter::classical({2.0, 0.75, 1.25, 2});
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const AugmentedSample out = aug.apply(images.samples[i % 20], images, rng);
    check_valid(out, images.dim, images.classes);
    for (double v : out.features) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  const LabeledDataset flat = flat_peers();
  for (int i = 0; i < 100; ++i) {
    const AugmentedSample out = aug.apply(flat.samples[i % 40], flat, rng, i % 40);
    check_valid(out, flat.dim, flat.classes);
  }
  CHECK_THROWS_AS(Augmenter::classical({-1.0, 0.75, 1.25, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Augmenter::classical({2.0, 0.0, 1.25, 2}), std::invalid_argument);
}

TEST_CASE("density: unfitted use is an error") {
  const LabeledDataset peers = flat_peers();
  const Augmenter raw = Augmenter::density({1, 0});
  Rng rng(12);
  CHECK_THROWS_WITH_AS(raw.apply(peers.samples[0], peers, rng, 0),
                       doctest::Contains("unfitted"), std::runtime_error);
}

TEST_CASE("density: degenerate fit concentrates at the class mean") {
  const LabeledDataset blobs = generate_gaussian_blobs(40, 2, 3, 0.0, 3);
  const Augmenter aug = fit_density({1, 7}, blobs);
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const LabeledSample& s = blobs.samples[i % 40];
    const AugmentedSample out = aug.apply(s, blobs, rng, i % 40);
    const std::vector<double> center = blob_center(s.label, 2, 3);
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(out.features[k] - center[k]) < 0.01);  // var floored near 0
    CHECK(out.soft_label == one_hot(s.label, 2));
  }
}

TEST_CASE("density: fitted mean within 3 standard errors of the true center") {
  const int n = 400, c = 2, d = 4;
  const double spread = 0.5;
  const LabeledDataset blobs = generate_gaussian_blobs(n, c, d, spread, 17);
  const Augmenter aug = fit_density({1, 23}, blobs);
  // single component: consistency checked through generated samples
  Rng rng(14);
  const int draws = 4000;
  for (int klass = 0; klass < c; ++klass) {
    std::vector<double> mean(d, 0.0);
    const LabeledSample* probe = nullptr;
    for (const LabeledSample& s : blobs.samples)
      if (s.label == klass) {
        probe = &s;
        break;
      }
    for (int i = 0; i < draws; ++i) {
      const AugmentedSample out = aug.apply(*probe, blobs, rng);
      for (int k = 0; k < d; ++k) mean[k] += out.features[k];
      CHECK(out.soft_label == one_hot(klass, c));
    }
    const std::vector<double> center = blob_center(klass, c, d);
    // SE of the fitted mean ~ spread/sqrt(n/c), plus sampler noise
    const double bound = 3.0 * spread / std::sqrt(double(n / c)) +
                         3.0 * spread / std::sqrt(double(draws));
    for (int k = 0; k < d; ++k)
      CHECK(std::abs(mean[k] / draws - center[k]) < bound);
  }
}

TEST_CASE("density: class with too few samples is a named error") {
  LabeledDataset tiny;
  tiny.dim = 2;
  tiny.classes = 2;
  tiny.samples = {{{0.0, 0.0}, 0}, {{1.0, 1.0}, 0}, {{2.0, 2.0}, 1}};
  CHECK_THROWS_WITH_AS(fit_density({2, 0}, tiny), doctest::Contains("class 1"),
                       std::invalid_argument);
}

TEST_CASE("compose: identity pieces, involution, ordering") {
  const LabeledDataset peers = flat_peers();
  Rng rng(15);

  const Augmenter id2 = compose(Augmenter::noise({0.0}), Augmenter::noise({0.0}));
  CHECK(id2.apply(peers.samples[0], peers, rng, 0).features ==
        peers.samples[0].features);

  const Augmenter flip2 =
      compose(Augmenter::permute({PermuteParams::Mode::horizontal_flip, 1}),
              Augmenter::permute({PermuteParams::Mode::horizontal_flip, 1}));
  CHECK(flip2.apply(peers.samples[1], peers, rng, 1).features ==
        peers.samples[1].features);

  // compose(noise, compose(crop, permute)) equals sequential manual
  // application with the same stream: permute, then crop, then noise
  const Augmenter noise = Augmenter::noise({0.1});
  const Augmenter crop = Augmenter::crop({2, 0});
  const Augmenter permute =
      Augmenter::permute({PermuteParams::Mode::horizontal_flip, 1});
  const Augmenter classical_tree = compose(noise, compose(crop, permute));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng a = Rng::stream(seed, 1);
    const AugmentedSample composed =
        classical_tree.apply(peers.samples[2], peers, a, 2);
    Rng b = Rng::stream(seed, 1);
    AugmentedSample manual = permute.apply(peers.samples[2], peers, b, 2);
    manual = crop.apply(manual, peers, b, 2);
    manual = noise.apply(manual, peers, b, 2);
    CHECK(composed.features == manual.features);
    CHECK(composed.soft_label == manual.soft_label);
  }
}

TEST_CASE("compose: dimension mismatch between fitted augmenters is rejected") {
  const Augmenter d5 = fit_density({1, 1}, flat_peers());
  const Augmenter d3 = fit_density({1, 1}, generate_gaussian_blobs(30, 2, 3, 0.2, 2));
  CHECK_THROWS_AS(compose(d5, d3), std::invalid_argument);
  // and a fitted augmenter refuses data of the wrong dimension
  const LabeledDataset wrong = generate_gaussian_blobs(10, 2, 3, 0.2, 3);
  Rng rng(16);
  CHECK_THROWS_AS(d5.apply(wrong.samples[0], wrong, rng, 0), std::invalid_argument);
}

TEST_CASE("stochastic_apply: endpoints, binomial count, reproducibility") {
  const LabeledDataset peers = flat_peers(21);
  const Augmenter noisy = Augmenter::noise({0.3});

  const std::vector<AugmentedSample> none = stochastic_apply(noisy, 0.0, peers, 5);
  REQUIRE(none.size() == peers.size());
  for (std::size_t i = 0; i < peers.size(); ++i) {
    CHECK(none[i].features == peers.samples[i].features);
    CHECK(none[i].soft_label == one_hot(peers.samples[i].label, 2));
  }

  const std::vector<AugmentedSample> all = stochastic_apply(noisy, 1.0, peers, 5);
  int changed = 0;
  for (std::size_t i = 0; i < peers.size(); ++i)
    changed += all[i].features != peers.samples[i].features;
  CHECK(changed == static_cast<int>(peers.size()));

  const LabeledDataset big = generate_gaussian_blobs(10000, 2, 2, 0.3, 9);
  const std::vector<AugmentedSample> half = stochastic_apply(noisy, 0.5, big, 7);
  int count = 0;
  for (std::size_t i = 0; i < big.size(); ++i)
    count += half[i].features != big.samples[i].features;
  CHECK(std::abs(count - 5000) <= 3 * std::sqrt(10000 * 0.25));

  const std::vector<AugmentedSample> again = stochastic_apply(noisy, 0.5, big, 7);
  REQUIRE(again.size() == half.size());
  for (std::size_t i = 0; i < half.size(); ++i) {
    CHECK(again[i].features == half[i].features);
    CHECK(again[i].soft_label == half[i].soft_label);
  }

  CHECK_THROWS_AS(stochastic_apply(noisy, -0.1, peers, 1), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_apply(noisy, 1.5, peers, 1), std::invalid_argument);
}

TEST_CASE("property: every kind preserves dimension and soft-label validity") {
  const LabeledDataset flat = flat_peers(31);
  const LabeledDataset images = image_peers(32);
  int trials = 0;
  for (const LabeledDataset* peers : {&flat, &images}) {
    for (const Augmenter& a : all_kinds(*peers)) {
      for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng = Rng::stream(seed, 77);
        const std::size_t idx = seed % peers->size();
        const AugmentedSample out = a.apply(peers->samples[idx], *peers, rng, idx);
        check_valid(out, peers->dim, peers->classes);
        ++trials;
      }
    }
  }
  CHECK(trials == 2 * 7 * 30);
}

TEST_CASE("property: composition closure over all kind pairs") {
  const LabeledDataset peers = flat_peers(41);
  const std::vector<Augmenter> kinds = all_kinds(peers);
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      const Augmenter pair = compose(kinds[i], kinds[j]);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng = Rng::stream(seed, i * 100 + j);
        const std::size_t idx = seed % peers.size();
        const AugmentedSample out =
            pair.apply(peers.samples[idx], peers, rng, idx);
        check_valid(out, peers.dim, peers.classes);
      }
    }
  }
}

TEST_CASE("augmented CSV export expands soft labels") {
  const LabeledDataset peers = flat_peers(51);
  const std::vector<AugmentedSample> samples =
      stochastic_apply(Augmenter::mixup({1.0}), 1.0, peers, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "augrisk_test_aug.csv").string();
  save_augmented_csv(samples, path);
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == peers.dim + peers.classes - 1);
  }
  CHECK(rows == samples.size());
  std::filesystem::remove(path);
}
