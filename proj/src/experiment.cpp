// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include "augrisk/numfmt.hpp"
#include "augrisk/rng.hpp"
#include "augrisk/stats.hpp"

namespace fs = std::filesystem;

namespace augrisk {

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw std::runtime_error("config: " + what);
}

void require_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                  const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      config_error("unknown key '" + it.key() + "' in " + where);
  }
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  config_error("unknown activation '" + s + "' (expected relu or tanh)");
}

ModelSpec parse_model(const nlohmann::json& j) {
  require_keys(j, {"arch", "hidden", "channels", "activation", "init_seed",
                   "init_scale"},
               "model");
  ModelSpec spec;
  const std::string arch = j.value("arch", "linear");
  if (arch == "linear")
    spec.arch = ModelSpec::Arch::linear;
  else if (arch == "mlp")
    spec.arch = ModelSpec::Arch::mlp;
  else if (arch == "conv")
    spec.arch = ModelSpec::Arch::conv;
  else
    config_error("unknown model arch '" + arch + "'");
  spec.hidden = j.value("hidden", std::vector<int>{});
  spec.channels = j.value("channels", std::vector<int>{});
  spec.activation = parse_activation(j.value("activation", "relu"));
  spec.init_seed = j.value("init_seed", std::uint64_t{0});
  spec.init_scale = j.value("init_scale", 1.0);
  return spec;
}

TrainConfig parse_train(const nlohmann::json& j) {
  require_keys(j, {"epochs", "batch_size", "lr0", "lr_decay_factor",
                   "lr_decay_every", "weight_decay", "momentum"},
               "train");
  TrainConfig cfg;
  cfg.epochs = j.value("epochs", 100);
  cfg.batch_size = j.value("batch_size", 32);
  cfg.lr0 = j.value("lr0", 0.1);
  cfg.lr_decay_factor = j.value("lr_decay_factor", 10.0);
  cfg.lr_decay_every = j.value("lr_decay_every", 80);
  cfg.weight_decay = j.value("weight_decay", 5e-4);
  cfg.momentum = j.value("momentum", 0.0);
  return cfg;
}

AttackPreset parse_attack(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    return {name, preset_attack(name)};
  }
  require_keys(j, {"name", "norm", "eps", "alpha", "iters"}, "attacks[]");
  AttackConfig cfg;
  cfg.norm = parse_norm(j.at("norm").get<std::string>());
  cfg.eps = j.at("eps").get<double>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.iters = j.at("iters").get<int>();
  std::string name = j.value("name", "");
  if (name.empty()) name = preset_name(cfg);
  return {name, cfg};
}

StressPlan parse_stress(const nlohmann::json& j) {
  require_keys(j, {"norms", "eps", "n_sphere", "seed", "max_points",
                   "p_aug_subset"},
               "stress");
  StressPlan plan;
  plan.surfaces.clear();
  const nlohmann::json& eps = j.at("eps");
  if (eps.is_object()) {
    // per-norm radius lists: {"l2": [...], "linf": [...]}
    for (auto it = eps.begin(); it != eps.end(); ++it) {
      const NormKind norm = parse_norm(it.key());
      for (double e : it.value().get<std::vector<double>>())
        plan.surfaces.emplace_back(norm, e);
    }
    if (j.contains("norms"))
      config_error("stress: 'norms' is redundant when 'eps' is per-norm");
  } else {
    for (const auto& n : j.value("norms", std::vector<std::string>{"l2"}))
      for (double e : eps.get<std::vector<double>>())
        plan.surfaces.emplace_back(parse_norm(n), e);
  }
  plan.n_sphere = j.value("n_sphere", 1000);
  plan.seed = j.value("seed", std::uint64_t{0});
  plan.max_points = j.value("max_points", 100);
  plan.p_aug_subset = j.value("p_aug_subset", std::vector<double>{});
  if (plan.surfaces.empty()) config_error("stress: no (norm, eps) surfaces");
  for (const auto& [norm, e] : plan.surfaces)
    if (!(e > 0)) config_error("stress: eps values must be > 0");
  if (plan.n_sphere < 1) config_error("stress: n_sphere must be >= 1");
  if (plan.max_points < 1) config_error("stress: max_points must be >= 1");
  return plan;
}

InfluencePlan parse_influence(const nlohmann::json& j, double train_wd) {
  require_keys(j, {"damping", "cg_tol", "cg_max_iters", "seed", "weight_decay",
                   "n_test_points", "max_train_points", "attack_preset",
                   "histogram_bins", "p_aug_subset"},
               "influence");
  InfluencePlan plan;
  plan.cfg.damping = j.value("damping", 1e-3);
  plan.cfg.cg_tol = j.value("cg_tol", 1e-8);
  plan.cfg.cg_max_iters = j.value("cg_max_iters", 500);
  plan.cfg.seed = j.value("seed", std::uint64_t{0});
  plan.cfg.weight_decay = j.value("weight_decay", train_wd);
  plan.n_test_points = j.value("n_test_points", 10);
  plan.max_train_points = j.value("max_train_points", 100);
  plan.attack_preset = j.value("attack_preset", std::string("l2-e0.25-a0.05-i10"));
  plan.histogram_bins = j.value("histogram_bins", 20);
  plan.p_aug_subset = j.value("p_aug_subset", std::vector<double>{});
  if (plan.n_test_points < 1) config_error("influence: n_test_points must be >= 1");
  if (plan.max_train_points < 1)
    config_error("influence: max_train_points must be >= 1");
  preset_attack(plan.attack_preset);  // validate early
  return plan;
}

std::string cell_key(const std::string& method, double p_aug,
                     std::uint64_t seed) {
  return method + "-p" + format_double(p_aug) + "-s" + std::to_string(seed);
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  require_keys(j,
               {"dataset", "split", "model", "train", "methods", "p_aug_grid",
                "seeds", "attacks", "stress", "influence", "output_dir",
                "workers"},
               "top level");
  ExperimentConfig cfg;
  cfg.raw = j;

  if (!j.contains("dataset")) config_error("missing 'dataset'");
  cfg.dataset = j.at("dataset");

  const nlohmann::json split_j = j.value("split", nlohmann::json::object());
  require_keys(split_j, {"train_fraction", "seed"}, "split");
  cfg.split.train_fraction = split_j.value("train_fraction", 0.8);
  cfg.split.seed = split_j.value("seed", std::uint64_t{0});

  cfg.model = parse_model(j.value("model", nlohmann::json::object()));
  cfg.train_template = parse_train(j.value("train", nlohmann::json::object()));

  if (!j.contains("methods") || !j.at("methods").is_array() ||
      j.at("methods").empty())
    config_error("'methods' must be a non-empty array");
  for (const auto& mj : j.at("methods")) {
    AugmenterSpec spec;
    if (!mj.contains("name")) config_error("every method needs a 'name'");
    spec.name = mj.at("name").get<std::string>();
    spec.body = mj;
    cfg.methods.push_back(std::move(spec));
  }

  cfg.p_aug_grid = j.value("p_aug_grid", std::vector<double>{0.0});
  if (cfg.p_aug_grid.empty()) config_error("'p_aug_grid' must be non-empty");
  for (double p : cfg.p_aug_grid)
    if (!(p >= 0.0 && p <= 1.0))
      config_error("p_aug values must lie in [0,1]");

  cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{0});
  if (cfg.seeds.empty()) config_error("'seeds' must be non-empty");

  for (const auto& aj : j.value("attacks", nlohmann::json::array()))
    cfg.attacks.push_back(parse_attack(aj));

  if (j.contains("stress")) cfg.stress = parse_stress(j.at("stress"));
  if (j.contains("influence"))
    cfg.influence =
        parse_influence(j.at("influence"), cfg.train_template.weight_decay);

  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.workers = j.value("workers", 1);
  if (const char* env = std::getenv("AUGRISK_OUTPUT_DIR")) cfg.output_dir = env;
  if (const char* env = std::getenv("AUGRISK_WORKERS")) {
    long long w;
    if (!parse_int(env, w) || w < 1)
      config_error("AUGRISK_WORKERS must be a positive integer");
    cfg.workers = static_cast<int>(w);
  }
  if (cfg.workers < 1) config_error("workers must be >= 1");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  nlohmann::json j = cfg.raw;
  j.erase("output_dir");
  j.erase("workers");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LabeledDataset build_dataset(const nlohmann::json& spec) {
  const std::string type = spec.at("type").get<std::string>();
  if (type == "two_moons") {
    require_keys(spec, {"type", "n", "noise_sd", "seed"}, "dataset");
    return generate_two_moons(spec.at("n").get<std::size_t>(),
                              spec.value("noise_sd", 0.1),
                              spec.value("seed", std::uint64_t{0}));
  }
  if (type == "gaussian_blobs") {
    require_keys(spec, {"type", "n", "classes", "dim", "spread", "seed"},
                 "dataset");
    return generate_gaussian_blobs(
        spec.at("n").get<std::size_t>(), spec.at("classes").get<int>(),
        spec.at("dim").get<int>(), spec.value("spread", 0.3),
        spec.value("seed", std::uint64_t{0}));
  }
  if (type == "csv") {
    require_keys(spec, {"type", "path", "dim", "classes", "shape"}, "dataset");
    LabeledDataset ds = load_csv(spec.at("path").get<std::string>(),
                                 spec.at("dim").get<int>(),
                                 spec.at("classes").get<int>());
    if (spec.contains("shape") && !spec.at("shape").is_null()) {
      ImageShape shape;
      shape.height = spec["shape"].at("height").get<int>();
      shape.width = spec["shape"].at("width").get<int>();
      shape.channels = spec["shape"].at("channels").get<int>();
      ds.shape = shape;
    }
    ds.validate();
    return ds;
  }
  config_error("unknown dataset type '" + type + "'");
}

Augmenter build_augmenter(const AugmenterSpec& spec,
                          const LabeledDataset& train_split) {
  std::function<Augmenter(const nlohmann::json&)> build =
      [&](const nlohmann::json& j) -> Augmenter {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "noise") {
      NoiseParams p;
      p.eps = j.value("eps", 0.1);
      return Augmenter::noise(p);
    }
    if (kind == "crop") {
      CropParams p;
      p.max_margin = j.value("max_margin", 1);
      p.pad = j.value("pad", 0);
      return Augmenter::crop(p);
    }
    if (kind == "permute") {
      PermuteParams p;
      const std::string mode = j.value("mode", "horizontal-flip");
      if (mode == "horizontal-flip")
        p.mode = PermuteParams::Mode::horizontal_flip;
      else if (mode == "random-swap")
        p.mode = PermuteParams::Mode::random_swap;
      else
        config_error("unknown permute mode '" + mode + "'");
      p.swap_pairs = j.value("swap_pairs", 1);
      return Augmenter::permute(p);
    }
    if (kind == "classical") {
      ClassicalParams p;
      p.rotation_max_deg = j.value("rotation_max_deg", 2.0);
      if (j.contains("jitter")) {
        const auto range = j.at("jitter").get<std::vector<double>>();
        if (range.size() != 2) config_error("classical jitter must be [lo, hi]");
        p.jitter_lo = range[0];
        p.jitter_hi = range[1];
      }
      p.crop_pad = j.value("crop_pad", 4);
      return Augmenter::classical(p);
    }
    if (kind == "mixup") {
      MixupParams p;
      p.alpha = j.value("alpha", 1.0);
      return Augmenter::mixup(p);
    }
    if (kind == "density") {
      DensityParams p;
      p.components_per_class = j.value("components_per_class", 1);
      p.fit_seed = j.value("fit_seed", std::uint64_t{0});
      return fit_density(p, train_split);
    }
    if (kind == "compose")
      return compose(build(j.at("outer")), build(j.at("inner")));
    config_error("unknown augmenter kind '" + kind + "'");
  };
  return build(spec.body);
}

nlohmann::json record_to_json(const MetricsRecord& rec) {
  nlohmann::json j;
  j["method"] = rec.method;
  j["p_aug"] = rec.p_aug;
  j["seed"] = rec.seed;
  j["clean_error"] = rec.clean_error;
  j["final_train_loss"] = rec.final_train_loss;
  nlohmann::json rua = nlohmann::json::array();
  for (const auto& [name, risk] : rec.rua)
    rua.push_back({{"preset", name}, {"risk", risk}});
  j["rua"] = rua;
  nlohmann::json stress = nlohmann::json::array();
  for (const StressCell& c : rec.stress)
    stress.push_back({{"population", c.population},
                      {"norm", norm_name(c.norm)},
                      {"eps", c.eps},
                      {"mean", c.mean},
                      {"p10", c.p10},
                      {"p25", c.p25},
                      {"p50", c.p50},
                      {"p75", c.p75},
                      {"p90", c.p90}});
  j["stress"] = stress;
  nlohmann::json infl = nlohmann::json::array();
  for (const auto& s : rec.influence)
    infl.push_back({{"test_kind", s.test_kind},
                    {"train_kind", s.train_kind},
                    {"count", s.count},
                    {"min", s.min},
                    {"p10", s.p10},
                    {"p25", s.p25},
                    {"p50", s.p50},
                    {"p75", s.p75},
                    {"p90", s.p90},
                    {"max", s.max}});
  j["influence"] = infl;
  j["error"] = rec.error;
  return j;
}

MetricsRecord record_from_json(const nlohmann::json& j) {
  MetricsRecord rec;
  rec.method = j.at("method").get<std::string>();
  rec.p_aug = j.at("p_aug").get<double>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.clean_error = j.at("clean_error").get<double>();
  rec.final_train_loss = j.at("final_train_loss").get<double>();
  for (const auto& e : j.at("rua"))
    rec.rua.emplace_back(e.at("preset").get<std::string>(),
                         e.at("risk").get<double>());
  for (const auto& e : j.at("stress")) {
    StressCell c;
    c.population = e.at("population").get<std::string>();
    c.norm = parse_norm(e.at("norm").get<std::string>());
    c.eps = e.at("eps").get<double>();
    c.mean = e.at("mean").get<double>();
    c.p10 = e.at("p10").get<double>();
    c.p25 = e.at("p25").get<double>();
    c.p50 = e.at("p50").get<double>();
    c.p75 = e.at("p75").get<double>();
    c.p90 = e.at("p90").get<double>();
    rec.stress.push_back(std::move(c));
  }
  for (const auto& e : j.at("influence")) {
    MetricsRecord::InfluenceSummary s;
    s.test_kind = e.at("test_kind").get<std::string>();
    s.train_kind = e.at("train_kind").get<std::string>();
    s.count = e.at("count").get<int>();
    s.min = e.at("min").get<double>();
    s.p10 = e.at("p10").get<double>();
    s.p25 = e.at("p25").get<double>();
    s.p50 = e.at("p50").get<double>();
    s.p75 = e.at("p75").get<double>();
    s.p90 = e.at("p90").get<double>();
    s.max = e.at("max").get<double>();
    rec.influence.push_back(std::move(s));
  }
  rec.error = j.value("error", std::string());
  return rec;
}

namespace {

LabeledDataset head_subset(const LabeledDataset& ds, int max_points,
                           const char* tag) {
  LabeledDataset out;
  out.dim = ds.dim;
  out.classes = ds.classes;
  out.name = ds.name + ":" + tag;
  out.shape = ds.shape;
  const std::size_t n = std::min<std::size_t>(ds.size(), max_points);
  out.samples.assign(ds.samples.begin(), ds.samples.begin() + n);
  return out;
}

void check_rate(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::runtime_error("metric '" + what + "' left [0,1]: " +
                             format_double(v));
}

bool subset_includes(const std::vector<double>& subset, double p_aug) {
  if (subset.empty()) return true;
  for (double p : subset)
    if (std::abs(p - p_aug) < 1e-12) return true;
  return false;
}

MetricsRecord compute_cell(const ExperimentConfig& cfg,
                           const LabeledDataset& train_split,
                           const LabeledDataset& test_split,
                           const AugmenterSpec& method, double p_aug,
                           std::uint64_t seed, std::size_t ordinal) {
  MetricsRecord rec;
  rec.method = method.name;
  rec.p_aug = p_aug;
  rec.seed = seed;

  const Augmenter augmenter = build_augmenter(method, train_split);

  TrainConfig tc = cfg.train_template;
  tc.seed = seed;
  tc.p_aug = p_aug;
  tc.augmenter = augmenter;
  // each repetition seed re-initializes the model as well
  ModelSpec model_spec = cfg.model;
  model_spec.init_seed = hash_combine(cfg.model.init_seed, seed);
  auto [model, report] = train(model_spec, train_split, tc, &test_split);
  rec.clean_error = report.clean_test_error;
  rec.final_train_loss = report.final_train_loss;
  check_rate(rec.clean_error, "clean_error");

  for (const AttackPreset& preset : cfg.attacks) {
    const double risk = risk_under_attack(model, test_split, preset.cfg);
    check_rate(risk, "rua:" + preset.name);
    rec.rua.emplace_back(preset.name, risk);
  }

  if (cfg.stress && subset_includes(cfg.stress->p_aug_subset, p_aug)) {
    const StressPlan& plan = *cfg.stress;
    const LabeledDataset train_pop =
        head_subset(train_split, plan.max_points, "stress");
    const LabeledDataset test_pop =
        head_subset(test_split, plan.max_points, "stress");
    const std::vector<AugmentedSample> aug_pop = stochastic_apply(
        augmenter, 1.0, train_pop, hash_combine(plan.seed, ordinal));
    std::vector<StressConfig> stress_cfgs;
    for (const auto& [norm, eps] : plan.surfaces) {
      StressConfig sc;
      sc.eps = eps;
      sc.n_sphere = plan.n_sphere;
      sc.norm = norm;
      sc.seed = hash_combine(hash_combine(plan.seed, ordinal),
                             static_cast<std::uint64_t>(stress_cfgs.size()));
      stress_cfgs.push_back(sc);
    }
    rec.stress = stress_report(model, train_pop, aug_pop, test_pop, stress_cfgs);
    for (const StressCell& c : rec.stress)
      check_rate(c.mean, "stress:" + c.population);
  }

  if (cfg.influence && subset_includes(cfg.influence->p_aug_subset, p_aug)) {
    const InfluencePlan& plan = *cfg.influence;
    InfluenceConfig ic = plan.cfg;

    Batch hessian_batch;
    hessian_batch.reserve(train_split.size());
    for (const LabeledSample& s : train_split.samples)
      hessian_batch.push_back({s.features, Target(s.label)});

    InfluencePopulations pops;
    const LabeledDataset train_pop =
        head_subset(train_split, plan.max_train_points, "influence");
    for (const LabeledSample& s : train_pop.samples)
      pops.original_train.push_back({s.features, Target(s.label)});
    const std::vector<AugmentedSample> aug_pop = stochastic_apply(
        augmenter, 1.0, train_pop,
        hash_combine(hash_combine(ic.seed, ordinal), 0x696e666cULL));
    for (const AugmentedSample& s : aug_pop)
      pops.augmented_train.push_back({s.features, Target(s.soft_label)});

    const AttackConfig attack_cfg = preset_attack(plan.attack_preset);
    const LabeledDataset test_pop =
        head_subset(test_split, plan.n_test_points, "influence");
    for (const LabeledSample& s : test_pop.samples) {
      pops.clean_test.push_back({s.features, Target(s.label)});
      const AttackOutcome outcome =
          pgd(model, s.features, s.label, attack_cfg, test_split.image_like());
      std::vector<double> adv = s.features;
      for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += outcome.delta[i];
      pops.adversarial_test.push_back({std::move(adv), Target(s.label)});
    }

    const std::vector<InfluenceRecord> records =
        influence_matrix(model, hessian_batch, pops, ic);

    for (const char* test_kind : {"clean", "adversarial"}) {
      for (const char* train_kind : {"original", "augmented"}) {
        std::vector<double> scores;
        for (const InfluenceRecord& r : records)
          if (r.test_kind == test_kind && r.train_kind == train_kind)
            scores.push_back(r.score);
        if (scores.empty()) continue;
        MetricsRecord::InfluenceSummary s;
        s.test_kind = test_kind;
        s.train_kind = train_kind;
        s.count = static_cast<int>(scores.size());
        s.min = *std::min_element(scores.begin(), scores.end());
        s.max = *std::max_element(scores.begin(), scores.end());
        s.p10 = quantile(scores, 0.10);
        s.p25 = quantile(scores, 0.25);
        s.p50 = quantile(scores, 0.50);
        s.p75 = quantile(scores, 0.75);
        s.p90 = quantile(scores, 0.90);
        rec.influence.push_back(std::move(s));
      }
    }
  }

  return rec;
}

}  // namespace

std::vector<MetricsRecord> run_matrix(const ExperimentConfig& cfg) {
  const LabeledDataset full = build_dataset(cfg.dataset);
  const auto [train_split, test_split] = split(full, cfg.split);
  const std::string hash = config_hash(cfg);

  const fs::path records_dir = fs::path(cfg.output_dir) / "records";
  fs::create_directories(records_dir);

  struct Cell {
    const AugmenterSpec* method;
    double p_aug;
    std::uint64_t seed;
    std::string key;
  };
  std::vector<Cell> cells;
  for (const AugmenterSpec& method : cfg.methods)
    for (double p_aug : cfg.p_aug_grid)
      for (std::uint64_t seed : cfg.seeds)
        cells.push_back(
            {&method, p_aug, seed, cell_key(method.name, p_aug, seed)});

  std::vector<MetricsRecord> records(cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      const fs::path cell_path = records_dir / (cell.key + ".json");

      if (fs::exists(cell_path)) {
        try {
          std::ifstream in(cell_path);
          const nlohmann::json j = nlohmann::json::parse(in);
          if (j.value("config_hash", "") == hash) {
            records[i] = record_from_json(j.at("record"));
            continue;
          }
        } catch (const std::exception&) {
          // unreadable or stale cell file: recompute below
        }
      }

      MetricsRecord rec;
      try {
        rec = compute_cell(cfg, train_split, test_split, *cell.method,
                           cell.p_aug, cell.seed, i);
      } catch (const std::exception& e) {
        rec.method = cell.method->name;
        rec.p_aug = cell.p_aug;
        rec.seed = cell.seed;
        rec.error = e.what();
      }

      try {
        nlohmann::json j;
        j["config_hash"] = hash;
        j["cell"] = cell.key;
        j["record"] = record_to_json(rec);
        const fs::path tmp = records_dir / (cell.key + ".tmp");
        {
          std::ofstream out(tmp, std::ios::trunc);
          out << j.dump(2) << '\n';
          if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        }
        fs::rename(tmp, cell_path);
      } catch (const std::exception& e) {
        if (rec.error.empty())
          rec.error = std::string("cell persistence failed: ") + e.what();
      }
      records[i] = std::move(rec);
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(cells.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return records;
}

void emit_reports(const ExperimentConfig& cfg,
                  const std::vector<MetricsRecord>& records_in) {
  if (records_in.empty()) throw std::invalid_argument("emit_reports: no records");
  // canonical row order, independent of worker scheduling or record source
  std::vector<MetricsRecord> records = records_in;
  std::stable_sort(records.begin(), records.end(),
                   [](const MetricsRecord& a, const MetricsRecord& b) {
                     if (a.method != b.method) return a.method < b.method;
                     if (a.p_aug != b.p_aug) return a.p_aug < b.p_aug;
                     return a.seed < b.seed;
                   });
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  std::vector<std::string> files;

  auto open_csv = [&](const std::string& name, const char* header) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out)
      throw std::runtime_error("emit_reports: cannot open " +
                               (dir / name).string());
    out << header << '\n';
    files.push_back(name);
    return out;
  };

  {
    std::ofstream out =
        open_csv("error.csv", "method,p_aug,seed,clean_error,final_train_loss");
    for (const MetricsRecord& r : records) {
      if (r.failed()) continue;
      out << r.method << ',' << format_double(r.p_aug) << ',' << r.seed << ','
          << format_double(r.clean_error) << ','
          << format_double(r.final_train_loss) << '\n';
    }
  }

  if (!cfg.attacks.empty()) {
    auto attack_by_name = [&](const std::string& name) -> const AttackConfig& {
      for (const AttackPreset& p : cfg.attacks)
        if (p.name == name) return p.cfg;
      throw std::runtime_error("emit_reports: record references attack '" +
                               name + "' absent from the config");
    };
    std::ofstream out =
        open_csv("rua.csv", "method,p_aug,seed,preset,norm,eps,alpha,iters,risk");
    for (const MetricsRecord& r : records) {
      if (r.failed()) continue;
      for (const auto& [name, risk] : r.rua) {
        const AttackConfig& a = attack_by_name(name);
        out << r.method << ',' << format_double(r.p_aug) << ',' << r.seed << ','
            << name << ',' << norm_name(a.norm) << ',' << format_double(a.eps)
            << ',' << format_double(a.alpha) << ',' << a.iters << ','
            << format_double(risk) << '\n';
      }
    }
  }

  if (cfg.stress) {
    std::ofstream out = open_csv(
        "stress.csv",
        "method,p_aug,seed,population,norm,eps,mean,p10,p25,p50,p75,p90");
    for (const MetricsRecord& r : records) {
      if (r.failed()) continue;
      for (const StressCell& c : r.stress)
        out << r.method << ',' << format_double(r.p_aug) << ',' << r.seed << ','
            << c.population << ',' << norm_name(c.norm) << ','
            << format_double(c.eps) << ',' << format_double(c.mean) << ','
            << format_double(c.p10) << ',' << format_double(c.p25) << ','
            << format_double(c.p50) << ',' << format_double(c.p75) << ','
            << format_double(c.p90) << '\n';
    }
  }

  if (cfg.influence) {
    std::ofstream out = open_csv(
        "influence.csv",
        "method,p_aug,seed,test_kind,train_kind,count,min,p10,p25,p50,p75,p90,max");
    for (const MetricsRecord& r : records) {
      if (r.failed()) continue;
      for (const auto& s : r.influence)
        out << r.method << ',' << format_double(r.p_aug) << ',' << r.seed << ','
            << s.test_kind << ',' << s.train_kind << ',' << s.count << ','
            << format_double(s.min) << ',' << format_double(s.p10) << ','
            << format_double(s.p25) << ',' << format_double(s.p50) << ','
            << format_double(s.p75) << ',' << format_double(s.p90) << ','
            << format_double(s.max) << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["config_hash"] = config_hash(cfg);
  manifest["seeds"] = cfg.seeds;
  manifest["p_aug_grid"] = cfg.p_aug_grid;
  nlohmann::json methods = nlohmann::json::array();
  for (const AugmenterSpec& m : cfg.methods) methods.push_back(m.name);
  manifest["methods"] = methods;
  manifest["cells"] = records.size();
  nlohmann::json failures = nlohmann::json::array();
  for (const MetricsRecord& r : records)
    if (r.failed())
      failures.push_back({{"cell", cell_key(r.method, r.p_aug, r.seed)},
                          {"error", r.error}});
  manifest["failures"] = failures;
  manifest["files"] = files;
  {
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out)
      throw std::runtime_error("emit_reports: cannot open manifest.json");
    out << manifest.dump(2) << '\n';
  }
}

std::vector<MetricsRecord> load_records(const std::string& records_dir) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(records_dir))
    if (entry.path().extension() == ".json") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  std::vector<MetricsRecord> records;
  for (const fs::path& p : paths) {
    std::ifstream in(p);
    const nlohmann::json j = nlohmann::json::parse(in);
    records.push_back(record_from_json(j.at("record")));
  }
  return records;
}

}  // namespace augrisk
