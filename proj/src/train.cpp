// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "augrisk/kernels.hpp"
#include "augrisk/rng.hpp"

namespace augrisk {

namespace {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(cfg.lr0 > 0)) throw std::invalid_argument("train: lr0 must be > 0");
  if (!(cfg.lr_decay_factor > 0))
    throw std::invalid_argument("train: lr_decay_factor must be > 0");
  if (cfg.lr_decay_every < 1)
    throw std::invalid_argument("train: lr_decay_every must be >= 1");
  if (cfg.weight_decay < 0)
    throw std::invalid_argument("train: weight_decay must be >= 0");
  if (cfg.momentum < 0 || cfg.momentum >= 1)
    throw std::invalid_argument("train: momentum must be in [0,1)");
  if (!(cfg.p_aug >= 0 && cfg.p_aug <= 1))
    throw std::invalid_argument("train: p_aug must be in [0,1]");
  if (cfg.p_aug > 0 && !cfg.augmenter)
    throw std::invalid_argument("train: p_aug > 0 needs an augmenter");
}

constexpr std::uint64_t kShuffleTag = 0x73687566ULL;  // "shuf"
constexpr std::uint64_t kAugTag = 0x61756774ULL;      // "augt"

}  // namespace

double schedule_lr(const TrainConfig& cfg, int epoch) {
  const int windows = epoch / cfg.lr_decay_every;
  return cfg.lr0 / std::pow(cfg.lr_decay_factor, windows);
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grad,
              double lr, double weight_decay) {
  if (params.size() != grad.size())
    throw std::invalid_argument("sgd_step: size mismatch");
  if (weight_decay != 0.0)
    kernels::scal(1.0 - lr * weight_decay, params.data(), params.size());
  kernels::axpy(-lr, grad.data(), params.data(), params.size());
}

std::pair<DifferentiableModel, TrainReport> train(const ModelSpec& spec,
                                                  const LabeledDataset& train_ds,
                                                  const TrainConfig& cfg,
                                                  const LabeledDataset* eval_ds) {
  validate(cfg);
  if (train_ds.samples.empty())
    throw std::invalid_argument("train: empty dataset");
  train_ds.validate();

  DifferentiableModel model(spec, train_ds.dim, train_ds.classes,
                            train_ds.shape);
  const std::size_t n = train_ds.size();
  const std::uint64_t aug_seed = hash_combine(cfg.seed, kAugTag);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> grad(model.param_count());
  std::vector<double> velocity;
  if (cfg.momentum > 0.0) velocity.assign(model.param_count(), 0.0);

  TrainReport report;
  report.epoch_loss.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_lr(cfg, epoch);

    Rng shuffle_rng = Rng::stream(cfg.seed, kShuffleTag, epoch);
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      Batch batch;
      batch.reserve(stop - start);
      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t idx = order[pos];
        const LabeledSample& s = train_ds.samples[idx];
        Rng rng = Rng::stream(aug_seed, epoch, idx);
        if (rng.bernoulli(cfg.p_aug)) {
          AugmentedSample a = cfg.augmenter->apply(s, train_ds, rng, idx);
          batch.push_back({std::move(a.features), Target(std::move(a.soft_label))});
        } else {
          batch.push_back({s.features, Target(s.label)});
        }
      }

      const double loss = batch_loss(model, batch, &grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      if (cfg.momentum > 0.0) {
        // velocity = momentum * velocity + (grad + wd * params)
        kernels::scal(cfg.momentum, velocity.data(), velocity.size());
        kernels::axpy(1.0, grad.data(), velocity.data(), velocity.size());
        if (cfg.weight_decay != 0.0)
          kernels::axpy(cfg.weight_decay, model.params().data(),
                        velocity.data(), velocity.size());
        kernels::axpy(-lr, velocity.data(), model.params().data(),
                      model.param_count());
      } else {
        sgd_step(model.params(), grad, lr, cfg.weight_decay);
      }
      for (double p : model.params())
        if (!std::isfinite(p))
          throw std::runtime_error("train: non-finite parameter at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batches));
      epoch_loss += loss;
      ++batches;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }

  report.final_train_loss = report.epoch_loss.back();
  report.clean_test_error = evaluate_error(model, eval_ds ? *eval_ds : train_ds);
  return {std::move(model), std::move(report)};
}

double evaluate_error(const DifferentiableModel& m, const LabeledDataset& ds) {
  if (ds.samples.empty())
    throw std::invalid_argument("evaluate_error: empty dataset");
  std::size_t wrong = 0;
  for (const LabeledSample& s : ds.samples)
    if (m.predict(s.features) != s.label) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(ds.size());
}

}  // namespace augrisk
