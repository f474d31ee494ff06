// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Config-driven experiment matrix: method x p_aug x seed cells, each
// trained, attacked, stress-probed and (optionally) influence-scored, with
// incremental per-cell persistence and deterministic CSV/manifest output.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "augrisk/attack.hpp"
#include "augrisk/augment.hpp"
#include "augrisk/dataset.hpp"
#include "augrisk/influence.hpp"
#include "augrisk/model.hpp"
#include "augrisk/stress.hpp"
#include "augrisk/train.hpp"

namespace augrisk {

/// Augmenter recipe as written in the config; built per cell (density kinds
/// are fitted on the training split only).
struct AugmenterSpec {
  std::string name;
  nlohmann::json body;  // {"kind": ..., kind-specific parameters}
};

struct StressPlan {
  // one probe surface per (norm, eps) pair; either a cross product of
  // "norms" x "eps" or per-norm eps lists in the config
  std::vector<std::pair<NormKind, double>> surfaces{{NormKind::l2, 0.5}};
  int n_sphere = 1000;
  std::uint64_t seed = 0;
  int max_points = 100;  // per population
  std::vector<double> p_aug_subset;  // empty: every p_aug cell
};

struct InfluencePlan {
  InfluenceConfig cfg;
  int n_test_points = 10;
  int max_train_points = 100;
  std::string attack_preset = "l2-e0.25-a0.05-i10";
  int histogram_bins = 20;
  std::vector<double> p_aug_subset;  // empty: every p_aug cell
};

struct ExperimentConfig {
  nlohmann::json raw;  // canonical parsed config; basis of the config hash

  nlohmann::json dataset;  // generator/loader description
  SplitSpec split;
  ModelSpec model;
  TrainConfig train_template;  // per-cell seed/p_aug/augmenter filled in
  std::vector<AugmenterSpec> methods;
  std::vector<double> p_aug_grid;
  std::vector<std::uint64_t> seeds;
  std::vector<AttackPreset> attacks;
  std::optional<StressPlan> stress;
  std::optional<InfluencePlan> influence;
  std::string output_dir = "out";
  int workers = 1;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// FNV-1a hash of the canonical config serialization (output_dir and
/// workers excluded: they do not affect results).
std::string config_hash(const ExperimentConfig& cfg);

/// Builds the dataset the config describes (before splitting).
LabeledDataset build_dataset(const nlohmann::json& spec);

/// Builds one method's augmenter; density kinds are fitted on train_split.
Augmenter build_augmenter(const AugmenterSpec& spec,
                          const LabeledDataset& train_split);

struct MetricsRecord {
  std::string method;
  double p_aug = 0.0;
  std::uint64_t seed = 0;

  double clean_error = 0.0;
  double final_train_loss = 0.0;
  std::vector<std::pair<std::string, double>> rua;  // preset name -> risk
  std::vector<StressCell> stress;

  struct InfluenceSummary {
    std::string test_kind;
    std::string train_kind;
    int count = 0;
    double min = 0, p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0, max = 0;
  };
  std::vector<InfluenceSummary> influence;

  std::string error;  // non-empty: the cell failed with this diagnostic
  bool failed() const { return !error.empty(); }
};

nlohmann::json record_to_json(const MetricsRecord& rec);
MetricsRecord record_from_json(const nlohmann::json& j);

/// Runs every (method, p_aug, seed) cell, up to cfg.workers in parallel.
/// Each cell is persisted to <output_dir>/records/<cell>.json atomically
/// (write-temp-then-rename) as soon as it finishes; existing cell files with
/// a matching config hash are reused instead of recomputed. Per-cell
/// failures are recorded and do not stop the sweep.
std::vector<MetricsRecord> run_matrix(const ExperimentConfig& cfg);

/// Writes the per-family CSVs (error.csv, rua.csv, stress.csv,
/// influence.csv) plus manifest.json into cfg.output_dir. Byte-identical
/// across runs of the same config.
void emit_reports(const ExperimentConfig& cfg,
                  const std::vector<MetricsRecord>& records);

/// Reloads the cell records found under <records_dir> (sorted by cell key).
std::vector<MetricsRecord> load_records(const std::string& records_dir);

}  // namespace augrisk
