// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "augrisk/stress.hpp"
#include "augrisk/train.hpp"
#include "oracles.hpp"

using namespace augrisk;

namespace {

// 2-D binary linear model: predicts by sign(w.x + b)
DifferentiableModel line_model(double wx, double wy, double b) {
  ModelSpec spec;
  spec.arch = ModelSpec::Arch::linear;
  spec.init_scale = 0.0;
  DifferentiableModel m(spec, 2, 2);
  std::vector<double>& p = m.params();
  p[0] = wx;
  p[1] = wy;   // class-0 row
  p[2] = -wx;
  p[3] = -wy;  // class-1 row
  p[4] = b;
  p[5] = -b;
  return m;
}

DifferentiableModel constant_model(int d, int c) {
  ModelSpec spec;
  spec.arch = ModelSpec::Arch::linear;
  spec.init_scale = 0.0;
  return DifferentiableModel(spec, d, c);
}

}  // namespace

TEST_CASE("l2 sphere in 1-D: both poles, equal probability, exact radius") {
  Rng rng(1);
  const std::vector<double> center{0.25};
  int upper = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> p = sample_sphere(center, 0.5, NormKind::l2, rng);
    CHECK(std::abs(std::abs(p[0] - 0.25) - 0.5) <= 1e-9);
    if (p[0] > 0.25) ++upper;
  }
  CHECK(std::abs(upper - n / 2) <= 3 * std::sqrt(n * 0.25));
}

TEST_CASE("l2 sphere in 3-D: exact radii and centered empirical mean") {
  Rng rng(2);
  const std::vector<double> center{1.0, -2.0, 0.5};
  const double eps = 0.8;
  std::vector<double> mean(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> p = sample_sphere(center, eps, NormKind::l2, rng);
    double r2 = 0;
    for (int k = 0; k < 3; ++k) {
      const double diff = p[k] - center[k];
      r2 += diff * diff;
      mean[k] += p[k];
    }
    CHECK(std::abs(std::sqrt(r2) - eps) <= 1e-9);
  }
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(mean[k] / n - center[k]) < 0.02);
}

TEST_CASE("linf sphere in 2-D: all four faces get 25% within 3 sigma") {
  Rng rng(3);
  const std::vector<double> center{0.0, 0.0};
  const double eps = 1.0;
  int faces[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> p = sample_sphere(center, eps, NormKind::linf, rng);
    CHECK(std::abs(std::max(std::abs(p[0]), std::abs(p[1])) - eps) <= 1e-9);
    // classify by the coordinate pinned to +-eps
    if (std::abs(std::abs(p[0]) - eps) <= 1e-12)
      ++faces[p[0] > 0 ? 0 : 1];
    else
      ++faces[p[1] > 0 ? 2 : 3];
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int f = 0; f < 4; ++f) CHECK(std::abs(faces[f] - n / 4) <= 3 * sigma);
}

TEST_CASE("sample_sphere rejects non-positive radius") {
  Rng rng(4);
  CHECK_THROWS_AS(sample_sphere({0.0}, 0.0, NormKind::l2, rng),
                  std::invalid_argument);
}

TEST_CASE("constant classifier has zero stress everywhere") {
  const DifferentiableModel m = constant_model(3, 4);
  const LabeledDataset ds = generate_gaussian_blobs(20, 4, 3, 0.5, 5);
  for (double eps : {0.1, 1.0, 10.0}) {
    StressConfig cfg;
    cfg.eps = eps;
    cfg.n_sphere = 200;
    cfg.seed = 6;
    const StressResult r = prediction_change_stress(m, ds, cfg);
    CHECK(r.mean == 0.0);
    for (double s : r.per_point) CHECK(s == 0.0);
  }
}

TEST_CASE("2-D linear oracle: stress equals arccos(d/eps)/pi") {
  // boundary x + 2y = 0 through the origin; unit normal (1,2)/sqrt(5)
  const DifferentiableModel m = line_model(1.0, 2.0, 0.0);
  const double eps = 0.5;

  auto stress_at = [&](double dist, std::uint64_t seed) {
    const double nx = 1.0 / std::sqrt(5.0), ny = 2.0 / std::sqrt(5.0);
    LabeledDataset ds;
    ds.dim = 2;
    ds.classes = 2;
    ds.samples = {{{dist * nx, dist * ny}, 0}};
    StressConfig cfg;
    cfg.eps = eps;
    cfg.n_sphere = 10000;
    cfg.seed = seed;
    return prediction_change_stress(m, ds, cfg).mean;
  };

  // point at half the radius from the boundary: arc fraction = acos(1/2)/pi = 1/3
  {
    const double want = std::acos(0.5) / std::numbers::pi;
    const double sigma = std::sqrt(want * (1 - want) / 10000.0);
    CHECK(std::abs(stress_at(eps / 2, 7) - want) <= 3 * sigma);
  }
  // point exactly on the boundary: one half-circle changes the prediction
  {
    const double sigma = std::sqrt(0.25 / 10000.0);
    CHECK(std::abs(stress_at(0.0, 8) - 0.5) <= 3 * sigma);
  }
}

TEST_CASE("stress grows with eps for a fixed point on the linear oracle") {
  const DifferentiableModel m = line_model(1.0, 0.0, 0.0);
  LabeledDataset ds;
  ds.dim = 2;
  ds.classes = 2;
  ds.samples = {{{0.3, 0.0}, 0}};  // distance 0.3 from the boundary
  double previous = -1.0;
  for (double eps : {0.35, 0.5, 1.0, 3.0}) {
    StressConfig cfg;
    cfg.eps = eps;
    cfg.n_sphere = 20000;
    cfg.seed = 9;
    const double got = prediction_change_stress(m, ds, cfg).mean;
    const double want = std::acos(std::min(1.0, 0.3 / eps)) / std::numbers::pi;
    CHECK(std::abs(got - want) <=
          3 * std::sqrt(std::max(want * (1 - want), 1e-4) / 20000.0));
    CHECK(got >= previous - 0.01);
    previous = got;
  }
}

TEST_CASE("full-ball oracle: guards, constant model, distance counting") {
  const DifferentiableModel constant = constant_model(2, 2);
  const LabeledDataset blobs = generate_gaussian_blobs(30, 2, 2, 0.7, 10);
  CHECK(prediction_change_risk_oracle(constant, blobs, 0.5, NormKind::l2, 11) ==
        0.0);

  const LabeledDataset high = generate_gaussian_blobs(10, 2, 4, 0.3, 11);
  CHECK_THROWS_WITH_AS(
      prediction_change_risk_oracle(constant_model(4, 2), high, 0.5,
                                    NormKind::l2, 5),
      doctest::Contains("low dimension"), std::invalid_argument);

  // linear model: flagged iff |distance to boundary| < eps (up to the grid)
  const DifferentiableModel m = line_model(1.0, 1.0, 0.0);
  const double eps = 0.6;
  const double got =
      prediction_change_risk_oracle(m, blobs, eps, NormKind::l2, 41);
  std::size_t expected = 0;
  const double grid_step = 2 * eps / 40.0;
  for (const LabeledSample& s : blobs.samples) {
    const double dist =
        std::abs(s.features[0] + s.features[1]) / std::sqrt(2.0);
    if (dist < eps - grid_step) ++expected;  // clearly inside
  }
  // every clearly-inside point must be flagged
  CHECK(got >= double(expected) / blobs.size() - 1e-12);
  CHECK(got <= 1.0);
}

TEST_CASE("shell-positive stress implies the ball oracle flags the point") {
  const DifferentiableModel m = line_model(1.0, -0.7, 0.2);
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    LabeledDataset one;
    one.dim = 2;
    one.classes = 2;
    one.samples = {{{rng.normal(), rng.normal()}, 0}};
    StressConfig cfg;
    cfg.eps = 0.4;
    cfg.n_sphere = 500;
    cfg.seed = trial;
    const double stress = prediction_change_stress(m, one, cfg).mean;
    if (stress > 0.0) {
      CHECK(prediction_change_risk_oracle(m, one, cfg.eps, NormKind::l2, 81) ==
            1.0);
    }
  }
}

TEST_CASE("concentration of measure: ball mass migrates to the shell") {
  Rng rng(13);
  double previous = 0.0;
  for (int d : {2, 10, 100}) {
    // uniform in the unit ball: uniform direction, radius u^(1/d)
    const int n = 20000;
    int outer = 0;
    for (int i = 0; i < n; ++i) {
      const double r = std::pow(rng.uniform(), 1.0 / d);
      if (r >= 0.99) ++outer;
    }
    const double frac = double(outer) / n;
    const double want = 1.0 - std::pow(0.99, d);
    CHECK(std::abs(frac - want) < 0.02);
    CHECK(frac > previous - 0.01);
    previous = frac;
  }
  CHECK(previous > 0.6);  // d=100: 1 - 0.99^100 ~ 0.634
}

TEST_CASE("stress is deterministic and population-independent per stream") {
  ModelSpec spec;
  spec.arch = ModelSpec::Arch::mlp;
  spec.hidden = {6};
  spec.init_seed = 14;
  DifferentiableModel m(spec, 2, 2);
  const LabeledDataset ds = generate_two_moons(40, 0.1, 15);
  StressConfig cfg;
  cfg.eps = 0.3;
  cfg.n_sphere = 300;
  cfg.seed = 99;
  const StressResult a = prediction_change_stress(m, ds, cfg);
  const StressResult b = prediction_change_stress(m, ds, cfg);
  CHECK(a.per_point == b.per_point);
  CHECK(a.mean == b.mean);
  for (double s : a.per_point) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  double total = 0;
  for (double s : a.per_point) total += s;
  CHECK(a.mean == doctest::Approx(total / a.per_point.size()).epsilon(1e-15));
}

TEST_CASE("stress_report: identical populations give identical cells") {
  ModelSpec spec;
  spec.arch = ModelSpec::Arch::mlp;
  spec.hidden = {5};
  spec.init_seed = 16;
  DifferentiableModel m(spec, 2, 2);
  const LabeledDataset ds = generate_two_moons(30, 0.1, 17);

  std::vector<AugmentedSample> aug;
  for (const LabeledSample& s : ds.samples)
    aug.push_back({s.features, one_hot(s.label, 2)});

  std::vector<StressConfig> cfgs;
  for (double eps : {0.25, 0.5, 1.0, 2.0}) {
    StressConfig cfg;
    cfg.eps = eps;
    cfg.n_sphere = 100;
    cfg.seed = 5;
    cfgs.push_back(cfg);
  }
  const std::vector<StressCell> cells = stress_report(m, ds, aug, ds, cfgs);
  REQUIRE(cells.size() == 12);  // 4 configs x 3 populations
  for (std::size_t c = 0; c < 4; ++c) {
    const StressCell& train = cells[c * 3 + 0];
    const StressCell& augmented = cells[c * 3 + 1];
    const StressCell& test = cells[c * 3 + 2];
    CHECK(train.mean == augmented.mean);
    CHECK(train.mean == test.mean);
    CHECK(train.p50 == test.p50);
    CHECK(train.population == "train");
    CHECK(augmented.population == "augmented");
    CHECK(test.population == "test");
  }

  LabeledDataset empty;
  empty.dim = 2;
  empty.classes = 2;
  CHECK_THROWS_AS(stress_report(m, empty, aug, ds, cfgs), std::invalid_argument);
}

TEST_CASE("frozen rig: memorized blobs have lower train stress than test") {
  // first run observed: train err 0, stress 0.00258 (train) vs 0.00403 (test)
  const LabeledDataset ds = generate_gaussian_blobs(300, 3, 4, 0.6, 17);
  const auto [tr, te] = split(ds, {0.6667, 2});
  ModelSpec spec;
  spec.arch = ModelSpec::Arch::mlp;
  spec.hidden = {48};
  spec.init_seed = 5;
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 32;
  tc.lr0 = 0.1;
  tc.lr_decay_factor = 10;
  tc.lr_decay_every = 80;
  tc.weight_decay = 1e-5;
  tc.seed = 3;
  auto [m, rep] = train(spec, tr, tc, &te);
  REQUIRE(evaluate_error(m, tr) == 0.0);

  StressConfig sc;
  sc.eps = 0.5;
  sc.n_sphere = 2000;
  sc.norm = NormKind::l2;
  sc.seed = 9;
  const double train_stress = prediction_change_stress(m, tr, sc).mean;
  const double test_stress = prediction_change_stress(m, te, sc).mean;
  CHECK(train_stress < test_stress);
  CHECK(train_stress == doctest::Approx(0.00258).epsilon(0.5));
  CHECK(test_stress == doctest::Approx(0.00403).epsilon(0.5));
}

TEST_CASE("stress CSV columns") {
  std::vector<StressCell> cells(1);
  cells[0].population = "test";
  cells[0].norm = NormKind::l2;
  cells[0].eps = 0.5;
  cells[0].mean = 0.25;
  const auto path =
      std::filesystem::temp_directory_path() / "augrisk_test_stress.csv";
  save_stress_csv(cells, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "population,norm,eps,mean,p10,p25,p50,p75,p90");
  std::string row;
  std::getline(in, row);
  CHECK(row.rfind("test,l2,0.5,0.25,", 0) == 0);
  std::filesystem::remove(path);
}
