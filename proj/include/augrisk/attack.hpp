// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Projected gradient descent under l2 / linf threat models, and the
// empirical risk under attack. The attack itself is deterministic:
// delta starts at zero and there is no randomness unless the optional
// random-start hook is switched on.

#pragma once

#include <string>
#include <vector>

#include "augrisk/dataset.hpp"
#include "augrisk/model.hpp"
#include "augrisk/norm.hpp"

namespace augrisk {

struct AttackConfig {
  double eps = 0.1;    // ball radius, on the data scale
  double alpha = 0.02; // step size
  int iters = 10;
  NormKind norm = NormKind::linf;

  // Extensions, both off by default:
  // raw_step takes the literal gradient-ascent step alpha*g instead of the
  // normalized (l2) / sign (linf) step; random_start draws delta0 uniformly
  // inside the ball instead of starting at zero.
  bool raw_step = false;
  bool random_start = false;
  std::uint64_t random_start_seed = 0;
};

struct AttackOutcome {
  std::vector<double> delta;
  int perturbed_prediction = 0;
  bool success = false;  // prediction != true label
};

/// Runs exactly cfg.iters PGD iterations from delta = 0. Each iteration
/// ascends the loss (normalized-gradient step for l2, sign step for linf),
/// projects back onto the eps-ball, and, when clip_unit_box is set
/// (image-like data), clips x+delta to [0,1]. A zero gradient skips the
/// step. Every iterate is checked against the ball constraint; per-iterate
/// delta norms are appended to *iterate_norms when provided.
AttackOutcome pgd(const DifferentiableModel& m, const std::vector<double>& x,
                  int label, const AttackConfig& cfg,
                  bool clip_unit_box = false,
                  std::vector<double>* iterate_norms = nullptr);

/// Mean misclassification indicator on PGD-perturbed test inputs
/// (final iterate). With iters = 0 this equals the clean test error.
double risk_under_attack(const DifferentiableModel& m,
                         const LabeledDataset& test_ds,
                         const AttackConfig& cfg);

/// The PGD-perturbed copy of a dataset (labels preserved), e.g. for export
/// to CSV and reuse as the adversarial test population of the influence
/// module. evaluate_error on the result equals risk_under_attack.
LabeledDataset adversarial_dataset(const DifferentiableModel& m,
                                   const LabeledDataset& test_ds,
                                   const AttackConfig& cfg);

struct AttackPreset {
  std::string name;
  AttackConfig cfg;
};

/// Named presets covering the standard grid: the eps/5 step-size rule for
/// every radius, plus the alternate l2 eps=0.25 row with alpha=0.5.
const std::vector<AttackPreset>& attack_presets();

/// Lookup by name; the error lists all known presets.
AttackConfig preset_attack(const std::string& name);

std::string preset_name(const AttackConfig& cfg);

}  // namespace augrisk
