// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Prediction-change stress: the Monte Carlo fraction of points on the
// eps-sphere surface around an input whose predicted class differs from the
// center's. Labels are never consulted. Includes a brute-force full-ball
// oracle for low dimension and a multi-population report.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augrisk/augment.hpp"
#include "augrisk/dataset.hpp"
#include "augrisk/model.hpp"
#include "augrisk/norm.hpp"
#include "augrisk/rng.hpp"

namespace augrisk {

struct StressConfig {
  double eps = 0.5;
  int n_sphere = 1000;  // samples per point
  NormKind norm = NormKind::l2;
  std::uint64_t seed = 0;
};

struct StressResult {
  std::vector<double> per_point;  // each in [0,1]
  double mean = 0.0;
};

/// One point uniformly distributed on the eps-shell around `center`.
/// l2: normalized Gaussian direction scaled to radius eps. linf: uniform
/// over the cube surface (face picked uniformly, the face coordinate set to
/// +-eps, the rest uniform in [-eps, eps]). The sample is verified to lie
/// on the shell within 1e-9.
std::vector<double> sample_sphere(const std::vector<double>& center,
                                  double eps, NormKind norm, Rng& rng);

/// Eq-7-style estimator over raw feature vectors. Per-point RNG streams
/// derive from (cfg.seed, point index).
StressResult prediction_change_stress_points(
    const DifferentiableModel& m, const std::vector<std::vector<double>>& points,
    const StressConfig& cfg);

StressResult prediction_change_stress(const DifferentiableModel& m,
                                      const LabeledDataset& ds,
                                      const StressConfig& cfg);

/// Brute-force prediction-change risk over a dense grid of the FULL ball.
/// Guarded to d <= 3; grid_resolution points per axis.
double prediction_change_risk_oracle(const DifferentiableModel& m,
                                     const LabeledDataset& ds, double eps,
                                     NormKind norm, int grid_resolution);

struct StressCell {
  std::string population;  // "train" | "augmented" | "test"
  NormKind norm = NormKind::l2;
  double eps = 0.0;
  double mean = 0.0;
  double p10 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p90 = 0.0;
};

/// One cell per (population, config): mean stress plus distribution
/// percentiles over the population's points.
std::vector<StressCell> stress_report(const DifferentiableModel& m,
                                      const LabeledDataset& non_aug,
                                      const std::vector<AugmentedSample>& aug,
                                      const LabeledDataset& test,
                                      const std::vector<StressConfig>& cfgs);

/// CSV columns: population,norm,eps,mean,p10,p25,p50,p75,p90
void save_stress_csv(const std::vector<StressCell>& cells,
                     const std::string& path);

}  // namespace augrisk
