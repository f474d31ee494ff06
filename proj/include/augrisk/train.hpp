// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Empirical risk minimization: plain SGD with an L2 weight-decay gradient
// term and a step learning-rate schedule, drawing per-example stochastic
// augmentation inside every batch. Deterministic given the seeds.

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "augrisk/augment.hpp"
#include "augrisk/dataset.hpp"
#include "augrisk/model.hpp"

namespace augrisk {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double lr0 = 0.1;
  double lr_decay_factor = 10.0;  // lr divided by this after every window
  int lr_decay_every = 80;        // window length in epochs
  double weight_decay = 5e-4;
  double momentum = 0.0;  // optional extension; 0 keeps plain SGD
  std::uint64_t seed = 0;
  double p_aug = 0.0;
  std::optional<Augmenter> augmenter;
};

struct TrainReport {
  double final_train_loss = 0.0;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  double clean_test_error = 0.0;
};

/// Step schedule: lr0 / factor^floor(epoch / every).
double schedule_lr(const TrainConfig& cfg, int epoch);

/// params -= lr * (grad + weight_decay * params)
void sgd_step(std::vector<double>& params, const std::vector<double>& grad,
              double lr, double weight_decay);

/// Trains a fresh model on train_ds. Augmentation is drawn per example and
/// epoch from streams derived from cfg.seed, so two runs with identical
/// seeds produce bitwise-identical parameters. clean_test_error in the
/// report is computed on eval_ds when given, otherwise on train_ds.
std::pair<DifferentiableModel, TrainReport> train(
    const ModelSpec& spec, const LabeledDataset& train_ds,
    const TrainConfig& cfg, const LabeledDataset* eval_ds = nullptr);

/// Fraction of samples whose argmax logit differs from the label.
double evaluate_error(const DifferentiableModel& m, const LabeledDataset& ds);

}  // namespace augrisk
