// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train / attack / stress / influence / matrix /
// report subcommands over the experiment config format.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "augrisk/attack.hpp"
#include "augrisk/augment.hpp"
#include "augrisk/experiment.hpp"
#include "augrisk/influence.hpp"
#include "augrisk/kernels.hpp"
#include "augrisk/model.hpp"
#include "augrisk/numfmt.hpp"
#include "augrisk/stats.hpp"
#include "augrisk/stress.hpp"
#include "augrisk/train.hpp"

namespace fs = std::filesystem;
using namespace augrisk;

namespace {

const AugmenterSpec& find_method(const ExperimentConfig& cfg,
                                 const std::string& name) {
  for (const AugmenterSpec& m : cfg.methods)
    if (m.name == name) return m;
  std::string known;
  for (const AugmenterSpec& m : cfg.methods) {
    if (!known.empty()) known += ", ";
    known += m.name;
  }
  throw std::runtime_error("unknown method '" + name +
                           "'; config defines: " + known);
}

std::string preset_help() {
  std::string out = "attack preset; one of: ";
  bool first = true;
  for (const AttackPreset& p : attack_presets()) {
    if (!first) out += ", ";
    out += p.name;
    first = false;
  }
  return out;
}

int cmd_train(const std::string& config_path, const std::string& method,
              double p_aug, std::optional<std::uint64_t> seed,
              const std::string& out_dir,
              const std::string& export_augmented) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  const LabeledDataset full = build_dataset(cfg.dataset);
  const auto [train_split, test_split] = split(full, cfg.split);

  TrainConfig tc = cfg.train_template;
  tc.seed = seed.value_or(cfg.seeds.front());
  tc.p_aug = p_aug;
  if (!method.empty())
    tc.augmenter = build_augmenter(find_method(cfg, method), train_split);

  auto [model, report] = train(cfg.model, train_split, tc, &test_split);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  model.save((dir / "model.ckpt").string());

  nlohmann::json j;
  j["final_train_loss"] = report.final_train_loss;
  j["epoch_loss"] = report.epoch_loss;
  j["clean_test_error"] = report.clean_test_error;
  j["seed"] = tc.seed;
  j["p_aug"] = tc.p_aug;
  j["method"] = method;
  std::ofstream rep(dir / "train_report.json", std::ios::trunc);
  rep << j.dump(2) << '\n';

  if (!export_augmented.empty()) {
    if (!tc.augmenter)
      throw std::runtime_error("--export-augmented needs --method");
    save_augmented_csv(
        stochastic_apply(*tc.augmenter, 1.0, train_split, tc.seed),
        export_augmented);
  }

  std::cout << "clean_test_error=" << format_double(report.clean_test_error)
            << " final_train_loss=" << format_double(report.final_train_loss)
            << " checkpoint=" << (dir / "model.ckpt").string() << '\n';
  return 0;
}

int cmd_attack(const std::string& model_path, const std::string& data_path,
               const std::string& preset, const std::string& norm,
               std::optional<double> eps, std::optional<double> alpha,
               std::optional<int> iters, const std::string& export_path) {
  const DifferentiableModel model = DifferentiableModel::load(model_path);
  const LabeledDataset data =
      load_csv(data_path, model.input_dim(), model.classes());

  AttackConfig cfg;
  if (!preset.empty()) {
    cfg = preset_attack(preset);
  } else {
    if (!eps || !alpha || !iters)
      throw std::runtime_error(
          "attack: pass --preset or all of --eps/--alpha/--iters");
    cfg.norm = parse_norm(norm);
    cfg.eps = *eps;
    cfg.alpha = *alpha;
    cfg.iters = *iters;
  }

  if (!export_path.empty())
    save_csv(adversarial_dataset(model, data, cfg), export_path);
  std::cout << format_double(risk_under_attack(model, data, cfg)) << '\n';
  return 0;
}

int cmd_stress(const std::string& model_path, const std::string& data_path,
               const std::string& norm, const std::vector<double>& eps_list,
               int n_sphere, std::uint64_t seed, const std::string& out_path) {
  const DifferentiableModel model = DifferentiableModel::load(model_path);
  const LabeledDataset data =
      load_csv(data_path, model.input_dim(), model.classes());

  std::vector<StressCell> cells;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    StressConfig cfg;
    cfg.eps = eps_list[i];
    cfg.n_sphere = n_sphere;
    cfg.norm = parse_norm(norm);
    cfg.seed = hash_combine(seed, i);
    const StressResult res = prediction_change_stress(model, data, cfg);
    StressCell cell;
    cell.population = "data";
    cell.norm = cfg.norm;
    cell.eps = cfg.eps;
    cell.mean = res.mean;
    cell.p10 = quantile(res.per_point, 0.10);
    cell.p25 = quantile(res.per_point, 0.25);
    cell.p50 = quantile(res.per_point, 0.50);
    cell.p75 = quantile(res.per_point, 0.75);
    cell.p90 = quantile(res.per_point, 0.90);
    cells.push_back(std::move(cell));
  }

  if (out_path.empty()) {
    std::cout << "population,norm,eps,mean,p10,p25,p50,p75,p90\n";
    for (const StressCell& c : cells)
      std::cout << c.population << ',' << norm_name(c.norm) << ','
                << format_double(c.eps) << ',' << format_double(c.mean) << ','
                << format_double(c.p10) << ',' << format_double(c.p25) << ','
                << format_double(c.p50) << ',' << format_double(c.p75) << ','
                << format_double(c.p90) << '\n';
  } else {
    save_stress_csv(cells, out_path);
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

int cmd_influence(const std::string& model_path, const std::string& train_path,
                  const std::string& test_path, const std::string& out_dir,
                  const InfluenceConfig& icfg, int n_test, int max_train,
                  const std::string& config_path, const std::string& method,
                  const std::string& attack_preset_name, int batch_size,
                  int bins) {
  const DifferentiableModel model = DifferentiableModel::load(model_path);
  const LabeledDataset train_ds =
      load_csv(train_path, model.input_dim(), model.classes());
  const LabeledDataset test_ds =
      load_csv(test_path, model.input_dim(), model.classes());

  Batch hessian_batch;
  for (const LabeledSample& s : train_ds.samples)
    hessian_batch.push_back({s.features, Target(s.label)});

  // populations
  std::vector<Example> original_train;
  const std::size_t n_train =
      std::min<std::size_t>(train_ds.size(), static_cast<std::size_t>(max_train));
  for (std::size_t i = 0; i < n_train; ++i)
    original_train.push_back(
        {train_ds.samples[i].features, Target(train_ds.samples[i].label)});

  std::vector<Example> augmented_train;
  if (!method.empty()) {
    if (config_path.empty())
      throw std::runtime_error("--method needs --config to define methods");
    ExperimentConfig cfg = load_experiment_config(config_path);
    const Augmenter aug = build_augmenter(find_method(cfg, method), train_ds);
    LabeledDataset head = train_ds;
    head.samples.resize(n_train);
    for (AugmentedSample& s :
         stochastic_apply(aug, 1.0, head, icfg.seed))
      augmented_train.push_back({std::move(s.features), Target(std::move(s.soft_label))});
  }

  std::vector<Example> clean_test, adversarial_test;
  const std::size_t n_tests =
      std::min<std::size_t>(test_ds.size(), static_cast<std::size_t>(n_test));
  for (std::size_t i = 0; i < n_tests; ++i)
    clean_test.push_back(
        {test_ds.samples[i].features, Target(test_ds.samples[i].label)});
  if (!attack_preset_name.empty()) {
    const AttackConfig acfg = preset_attack(attack_preset_name);
    for (std::size_t i = 0; i < n_tests; ++i) {
      const LabeledSample& s = test_ds.samples[i];
      const AttackOutcome outcome =
          pgd(model, s.features, s.label, acfg, test_ds.image_like());
      std::vector<double> adv = s.features;
      for (std::size_t k = 0; k < adv.size(); ++k) adv[k] += outcome.delta[k];
      adversarial_test.push_back({std::move(adv), Target(s.label)});
    }
  }

  // one solve per test point, reused across every train population
  std::vector<InfluenceRecord> records;
  auto run_tests = [&](const std::vector<Example>& tests, const char* test_kind) {
    for (std::size_t ti = 0; ti < tests.size(); ++ti) {
      const std::vector<double> g_test =
          model.grad_params(tests[ti].features, tests[ti].target);
      const std::vector<double> u =
          inverse_hvp(model, hessian_batch, g_test, icfg);
      auto emit = [&](const std::vector<Example>& pop, const char* train_kind) {
        for (std::size_t si = 0; si < pop.size(); ++si) {
          const std::vector<double> g =
              model.grad_params(pop[si].features, pop[si].target);
          records.push_back({static_cast<int>(si), static_cast<int>(ti),
                             kernels::dot(u.data(), g.data(), u.size()),
                             test_kind, train_kind});
        }
      };
      emit(original_train, "original");
      if (!augmented_train.empty()) emit(augmented_train, "augmented");
    }
  };
  run_tests(clean_test, "clean");
  if (!adversarial_test.empty()) run_tests(adversarial_test, "adversarial");

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_influence_csv(records, (dir / "influence_records.csv").string());
  std::cout << "wrote " << (dir / "influence_records.csv").string() << " ("
            << records.size() << " records)\n";

  if (!augmented_train.empty()) {
    Batch original_batch, augmented_batch;
    for (const Example& e : original_train) original_batch.push_back(e);
    for (const Example& e : augmented_train) augmented_batch.push_back(e);
    const LossGradDiagnostics diag = loss_and_gradnorm_distributions(
        model, original_batch, augmented_batch, batch_size);
    save_histogram_csv(diag, bins, (dir / "diagnostics.csv").string());
    std::cout << "wrote " << (dir / "diagnostics.csv").string() << '\n';
  }
  return 0;
}

int cmd_matrix(const std::string& config_path, const std::string& out_override,
               int workers_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (workers_override > 0) cfg.workers = workers_override;

  const std::vector<MetricsRecord> records = run_matrix(cfg);
  emit_reports(cfg, records);

  std::size_t failed = 0;
  for (const MetricsRecord& r : records)
    if (r.failed()) ++failed;
  std::cout << "cells=" << records.size() << " failed=" << failed
            << " output=" << cfg.output_dir << '\n';
  for (const MetricsRecord& r : records)
    if (r.failed())
      std::cerr << "cell " << r.method << " p_aug=" << format_double(r.p_aug)
                << " seed=" << r.seed << " failed: " << r.error << '\n';
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& config_path, const std::string& records_dir,
               const std::string& out_dir) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const std::string dir = records_dir.empty()
                              ? (fs::path(cfg.output_dir) / "records").string()
                              : records_dir;
  const std::vector<MetricsRecord> records = load_records(dir);
  emit_reports(cfg, records);
  std::cout << "records=" << records.size() << " output=" << cfg.output_dir
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"augrisk: adversarial-risk audits of small classifiers under "
               "stochastic data augmentation"};
  app.require_subcommand(1);

  // train
  auto* train_cmd =
      app.add_subcommand("train", "train one model from an experiment config");
  std::string t_config, t_method, t_out = "out", t_export;
  double t_paug = 0.0;
  std::optional<std::uint64_t> t_seed;
  train_cmd->add_option("--config", t_config, "experiment config (JSON)")
      ->required();
  train_cmd->add_option("--method", t_method,
                        "augmentation method name defined in the config");
  train_cmd->add_option("--p-aug", t_paug, "per-example augmentation probability")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--seed", t_seed, "training seed (default: first config seed)");
  train_cmd->add_option("--out", t_out, "output directory");
  train_cmd->add_option("--export-augmented", t_export,
                        "also write the p_aug=1 augmented training set to this CSV");

  // attack
  auto* attack_cmd =
      app.add_subcommand("attack", "risk under attack of a checkpoint on a CSV dataset");
  std::string a_model, a_data, a_preset, a_norm = "linf", a_export;
  std::optional<double> a_eps, a_alpha;
  std::optional<int> a_iters;
  attack_cmd->add_option("--model", a_model, "model checkpoint")->required();
  attack_cmd->add_option("--data", a_data, "CSV dataset")->required();
  attack_cmd->add_option("--preset", a_preset, preset_help());
  attack_cmd->add_option("--norm", a_norm, "l2 or linf (custom attack)");
  attack_cmd->add_option("--eps", a_eps, "ball radius (custom attack)");
  attack_cmd->add_option("--alpha", a_alpha, "step size (custom attack)");
  attack_cmd->add_option("--iters", a_iters, "iterations (custom attack)");
  attack_cmd->add_option("--export-adversarial", a_export,
                         "also write the perturbed dataset to this CSV");

  // stress
  auto* stress_cmd = app.add_subcommand(
      "stress", "prediction-change stress of a checkpoint on a CSV dataset");
  std::string s_model, s_data, s_norm = "l2", s_out;
  std::vector<double> s_eps{0.5};
  int s_n = 1000;
  std::uint64_t s_seed = 0;
  stress_cmd->add_option("--model", s_model, "model checkpoint")->required();
  stress_cmd->add_option("--data", s_data, "CSV dataset")->required();
  stress_cmd->add_option("--norm", s_norm, "l2 or linf");
  stress_cmd->add_option("--eps", s_eps, "shell radii (repeatable)");
  stress_cmd->add_option("--n-sphere", s_n, "samples per point");
  stress_cmd->add_option("--seed", s_seed, "sampling seed");
  stress_cmd->add_option("--out", s_out, "write CSV here instead of stdout");

  // influence
  auto* infl_cmd = app.add_subcommand(
      "influence", "influence scores of training points on test points");
  std::string i_model, i_train, i_test, i_out = "out", i_config, i_method,
              i_attack;
  InfluenceConfig icfg;
  int i_ntest = 10, i_maxtrain = 100, i_batch = 32, i_bins = 20;
  infl_cmd->add_option("--model", i_model, "model checkpoint")->required();
  infl_cmd->add_option("--train", i_train, "training CSV (defines the Hessian)")
      ->required();
  infl_cmd->add_option("--test", i_test, "test CSV")->required();
  infl_cmd->add_option("--out", i_out, "output directory");
  infl_cmd->add_option("--damping", icfg.damping, "lambda added to H");
  infl_cmd->add_option("--cg-tol", icfg.cg_tol, "CG relative residual target");
  infl_cmd->add_option("--cg-max-iters", icfg.cg_max_iters, "CG iteration cap");
  infl_cmd->add_option("--weight-decay", icfg.weight_decay,
                       "training weight decay (part of H)");
  infl_cmd->add_option("--seed", icfg.seed, "seed for the augmented population");
  infl_cmd->add_option("--n-test-points", i_ntest, "test points to score");
  infl_cmd->add_option("--max-train-points", i_maxtrain, "train points to score");
  infl_cmd->add_option("--config", i_config, "experiment config (for --method)");
  infl_cmd->add_option("--method", i_method,
                       "also score an augmented train population (needs --config)");
  infl_cmd->add_option("--attack-preset", i_attack,
                       "also score adversarially perturbed test points");
  infl_cmd->add_option("--batch-size", i_batch, "minibatch size for diagnostics");
  infl_cmd->add_option("--bins", i_bins, "histogram bins for diagnostics");

  // matrix
  auto* matrix_cmd =
      app.add_subcommand("matrix", "run the full experiment matrix from a config");
  std::string m_config, m_out;
  int m_workers = 0;
  matrix_cmd->add_option("--config", m_config, "experiment config (JSON)")
      ->required();
  matrix_cmd->add_option("--out", m_out, "output directory override");
  matrix_cmd->add_option("--workers", m_workers, "parallel cell workers override");

  // report
  auto* report_cmd = app.add_subcommand(
      "report", "re-emit the CSV reports from persisted cell records");
  std::string r_config, r_records, r_out;
  report_cmd->add_option("--config", r_config, "experiment config (JSON)")
      ->required();
  report_cmd->add_option("--records", r_records,
                         "records directory (default: <output_dir>/records)");
  report_cmd->add_option("--out", r_out, "output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed())
      return cmd_train(t_config, t_method, t_paug, t_seed, t_out, t_export);
    if (attack_cmd->parsed())
      return cmd_attack(a_model, a_data, a_preset, a_norm, a_eps, a_alpha,
                        a_iters, a_export);
    if (stress_cmd->parsed())
      return cmd_stress(s_model, s_data, s_norm, s_eps, s_n, s_seed, s_out);
    if (infl_cmd->parsed())
      return cmd_influence(i_model, i_train, i_test, i_out, icfg, i_ntest,
                           i_maxtrain, i_config, i_method, i_attack, i_batch,
                           i_bins);
    if (matrix_cmd->parsed()) return cmd_matrix(m_config, m_out, m_workers);
    if (report_cmd->parsed()) return cmd_report(r_config, r_records, r_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
