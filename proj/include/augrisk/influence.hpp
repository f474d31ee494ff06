// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-example influence via inverse-Hessian-vector products. H is the
// Hessian of the mean training loss (including the training weight-decay
// term); a damping multiple of the identity is added for conditioning and
// the system is solved by conjugate gradient. Scores are signed: positive
// means up-weighting the training point decreases the test loss (removing
// it would increase that loss).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augrisk/model.hpp"

namespace augrisk {

struct InfluenceConfig {
  double damping = 1e-3;  // lambda added to H's diagonal
  double cg_tol = 1e-8;   // relative residual target
  int cg_max_iters = 500;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;  // the training run's coefficient, part of H
};

struct InfluenceRecord {
  int train_index = 0;
  int test_index = 0;
  double score = 0.0;
  std::string test_kind;   // "clean" | "adversarial"
  std::string train_kind;  // "original" | "augmented"
};

/// Solves (H + damping I) u = v by CG, where H v is evaluated through the
/// model's hvp over `hessian_batch` plus weight_decay * v. Throws (with the
/// final residual, and the hint to raise damping) when CG does not reach
/// cg_tol * ||v|| within cg_max_iters.
std::vector<double> inverse_hvp(const DifferentiableModel& m,
                                const Batch& hessian_batch,
                                const std::vector<double>& v,
                                const InfluenceConfig& cfg);

/// Influence of x_train on x_test at the frozen model:
/// grad(x_test)^T (H + damping I)^{-1} grad(x_train).
double influence(const DifferentiableModel& m, const Batch& hessian_batch,
                 const Example& x_train, const Example& x_test,
                 const InfluenceConfig& cfg);

struct InfluencePopulations {
  std::vector<Example> original_train;
  std::vector<Example> augmented_train;
  std::vector<Example> clean_test;
  std::vector<Example> adversarial_test;
};

/// One record per (train point, test point) pair across all four population
/// combinations. One CG solve per test point, reused across train points.
std::vector<InfluenceRecord> influence_matrix(const DifferentiableModel& m,
                                              const Batch& hessian_batch,
                                              const InfluencePopulations& pops,
                                              const InfluenceConfig& cfg);

/// CSV columns: train_index,train_kind,test_index,test_kind,score
void save_influence_csv(const std::vector<InfluenceRecord>& records,
                        const std::string& path);

struct LossGradDiagnostics {
  std::vector<double> loss_original;      // per example
  std::vector<double> loss_augmented;     // per example
  std::vector<double> gradnorm_original;  // per minibatch: ||grad||_2 / |theta|
  std::vector<double> gradnorm_augmented;
};

/// Per-example losses and per-minibatch average gradient norms for the two
/// populations, at the frozen model.
LossGradDiagnostics loss_and_gradnorm_distributions(
    const DifferentiableModel& m, const Batch& original, const Batch& augmented,
    int batch_size);

/// Histogram CSV with geometric (log-scaled) bin edges; the edges are
/// documented in the header row. Columns: series,bin_lo,bin_hi,count
void save_histogram_csv(const LossGradDiagnostics& diag, int bins,
                        const std::string& path);

}  // namespace augrisk
