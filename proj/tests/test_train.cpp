// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "augrisk/train.hpp"

using namespace augrisk;

namespace {

ModelSpec linear_spec(std::uint64_t seed = 0) {
  ModelSpec s;
  s.arch = ModelSpec::Arch::linear;
  s.init_seed = seed;
  return s;
}

ModelSpec mlp_spec(std::vector<int> hidden, std::uint64_t seed = 0) {
  ModelSpec s;
  s.arch = ModelSpec::Arch::mlp;
  s.hidden = std::move(hidden);
  s.init_seed = seed;
  return s;
}

TrainConfig quick_config(int epochs, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.lr0 = 0.5;
  cfg.lr_decay_factor = 10.0;
  cfg.lr_decay_every = 40;
  cfg.weight_decay = 1e-4;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("step schedule: 0.1 for 0-79, 0.01 for 80-159, 0.001 afterward") {
  TrainConfig cfg;
  cfg.lr0 = 0.1;
  cfg.lr_decay_factor = 10.0;
  cfg.lr_decay_every = 80;
  CHECK(schedule_lr(cfg, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 79) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 80) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 159) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 160) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 199) == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("sgd_step: zero data gradient decays parameters geometrically") {
  std::vector<double> params{2.0, -1.0, 0.5};
  const std::vector<double> zero(3, 0.0);
  const double lr = 0.1, wd = 0.5;
  const double factor = 1.0 - lr * wd;
  const std::vector<double> start = params;
  for (int k = 1; k <= 20; ++k) {
    sgd_step(params, zero, lr, wd);
    for (int i = 0; i < 3; ++i)
      CHECK(params[i] ==
            doctest::Approx(start[i] * std::pow(factor, k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sgd_step(params, {1.0}, lr, wd), std::invalid_argument);
}

TEST_CASE("linear model separates wide blobs to zero train error") {
  const LabeledDataset ds = generate_gaussian_blobs(80, 2, 2, 0.1, 3);
  auto [model, report] = train(linear_spec(1), ds, quick_config(50));
  CHECK(evaluate_error(model, ds) == 0.0);
  CHECK(report.clean_test_error == 0.0);  // eval on train when no test set
}

TEST_CASE("training is bitwise deterministic") {
  const LabeledDataset ds = generate_two_moons(120, 0.1, 5);
  TrainConfig cfg = quick_config(20, 7);
  cfg.p_aug = 0.5;
  cfg.augmenter = Augmenter::noise({0.1});
  auto [m1, r1] = train(mlp_spec({8}, 2), ds, cfg);
  auto [m2, r2] = train(mlp_spec({8}, 2), ds, cfg);
  CHECK(m1.params() == m2.params());
  CHECK(r1.epoch_loss == r2.epoch_loss);
}

TEST_CASE("p_aug=0 training ignores which augmenter is configured") {
  const LabeledDataset ds = generate_two_moons(100, 0.1, 6);
  TrainConfig base = quick_config(15, 3);
  base.p_aug = 0.0;

  TrainConfig with_noise = base;
  with_noise.augmenter = Augmenter::noise({0.5});
  TrainConfig with_mixup = base;
  with_mixup.augmenter = Augmenter::mixup({1.0});
  TrainConfig without = base;

  auto [m1, r1] = train(mlp_spec({6}, 9), ds, with_noise);
  auto [m2, r2] = train(mlp_spec({6}, 9), ds, with_mixup);
  auto [m3, r3] = train(mlp_spec({6}, 9), ds, without);
  CHECK(m1.params() == m2.params());
  CHECK(m1.params() == m3.params());
}

TEST_CASE("loss trend: final epoch below first epoch") {
  const LabeledDataset moons = generate_two_moons(200, 0.1, 8);
  const LabeledDataset blobs = generate_gaussian_blobs(150, 3, 4, 0.4, 8);
  for (const LabeledDataset* ds : {&moons, &blobs}) {
    auto [model, report] = train(mlp_spec({8}, 4), *ds, quick_config(25));
    CHECK(report.epoch_loss.back() < report.epoch_loss.front());
    CHECK(report.final_train_loss == report.epoch_loss.back());
  }
}

TEST_CASE("augmented training consumes soft labels (mixup) without issue") {
  const LabeledDataset ds = generate_two_moons(100, 0.15, 9);
  TrainConfig cfg = quick_config(10, 11);
  cfg.p_aug = 0.8;
  cfg.augmenter = Augmenter::mixup({1.0});
  auto [model, report] = train(mlp_spec({6}, 5), ds, cfg);
  for (double l : report.epoch_loss) CHECK(std::isfinite(l));
  for (double p : model.params()) CHECK(std::isfinite(p));
}

TEST_CASE("divergent training aborts with epoch/batch context") {
  const LabeledDataset ds = generate_gaussian_blobs(60, 2, 2, 0.5, 10);
  TrainConfig cfg = quick_config(50);
  cfg.lr0 = 1e18;  // guaranteed blow-up
  try {
    auto result = train(mlp_spec({8}, 3), ds, cfg);
    FAIL("expected non-finite abort");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("evaluate_error: exact endpoints") {
  const LabeledDataset ds = generate_gaussian_blobs(100, 2, 2, 0.05, 12);
  auto [good, report] = train(linear_spec(2), ds, quick_config(60));
  CHECK(evaluate_error(good, ds) == 0.0);

  // zero-parameter model predicts class 0 everywhere -> error = share of class 1
  ModelSpec zero = linear_spec(0);
  zero.init_scale = 0.0;
  const DifferentiableModel constant(zero, 2, 2);
  CHECK(evaluate_error(constant, ds) == 0.5);  // balanced dataset, n even

  LabeledDataset empty;
  empty.dim = 2;
  empty.classes = 2;
  CHECK_THROWS_AS(evaluate_error(constant, empty), std::invalid_argument);
}

TEST_CASE("config validation") {
  const LabeledDataset ds = generate_two_moons(20, 0.1, 1);
  TrainConfig cfg = quick_config(5);
  cfg.p_aug = 0.5;  // no augmenter
  CHECK_THROWS_AS(train(linear_spec(), ds, cfg), std::invalid_argument);
  cfg = quick_config(0);
  CHECK_THROWS_AS(train(linear_spec(), ds, cfg), std::invalid_argument);
  cfg = quick_config(5);
  cfg.lr0 = 0.0;
  CHECK_THROWS_AS(train(linear_spec(), ds, cfg), std::invalid_argument);
  cfg = quick_config(5);
  cfg.weight_decay = -1.0;
  CHECK_THROWS_AS(train(linear_spec(), ds, cfg), std::invalid_argument);
}

TEST_CASE("two moons separability: linear vs 2-hidden-layer model") {
  // frozen oracle values (first fit: linear 0.1167, mlp[16,16] 0.0067)
  const LabeledDataset ds = generate_two_moons(1000, 0.1, 7);
  const auto [tr, te] = split(ds, {0.7, 3});
  TrainConfig tc;
  tc.epochs = 120;
  tc.batch_size = 32;
  tc.lr0 = 0.1;
  tc.lr_decay_factor = 10;
  tc.lr_decay_every = 50;
  tc.weight_decay = 1e-4;
  tc.seed = 1;

  ModelSpec lin = linear_spec(1);
  auto [ml, rl] = train(lin, tr, tc, &te);
  CHECK(rl.clean_test_error >= 0.1167 - 0.05);
  CHECK(rl.clean_test_error <= 0.1167 + 0.05);

  auto [mm, rm] = train(mlp_spec({16, 16}, 1), tr, tc, &te);
  CHECK(rm.clean_test_error < 0.05);
  CHECK(rm.clean_test_error < rl.clean_test_error);
}

TEST_CASE("momentum extension trains and stays deterministic") {
  const LabeledDataset ds = generate_two_moons(80, 0.1, 13);
  TrainConfig cfg = quick_config(15, 17);
  cfg.momentum = 0.9;
  cfg.lr0 = 0.1;
  auto [m1, r1] = train(mlp_spec({6}, 7), ds, cfg);
  auto [m2, r2] = train(mlp_spec({6}, 7), ds, cfg);
  CHECK(m1.params() == m2.params());
  CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
}
