// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/attack.hpp"

#include <cmath>
#include <stdexcept>

#include "augrisk/kernels.hpp"
#include "augrisk/numfmt.hpp"
#include "augrisk/rng.hpp"

namespace augrisk {

namespace {

void project(std::vector<double>& delta, double eps, NormKind norm) {
  if (norm == NormKind::l2) {
    const double n = std::sqrt(kernels::dot(delta.data(), delta.data(), delta.size()));
    if (n > eps) kernels::scal(eps / n, delta.data(), delta.size());
  } else {
    kernels::clamp(-eps, eps, delta.data(), delta.size());
  }
}

void check_ball(const std::vector<double>& delta, double eps, NormKind norm) {
  if (vector_norm(delta, norm) > eps + 1e-9)
    throw std::logic_error("pgd: iterate left the eps-ball");
}

}  // namespace

AttackOutcome pgd(const DifferentiableModel& m, const std::vector<double>& x,
                  int label, const AttackConfig& cfg, bool clip_unit_box,
                  std::vector<double>* iterate_norms) {
  if (!(cfg.eps > 0)) throw std::invalid_argument("pgd: eps must be > 0");
  if (!(cfg.alpha > 0)) throw std::invalid_argument("pgd: alpha must be > 0");
  if (cfg.iters < 0) throw std::invalid_argument("pgd: iters must be >= 0");
  if (label < 0 || label >= m.classes())
    throw std::invalid_argument("pgd: label outside class range");
  if (static_cast<int>(x.size()) != m.input_dim())
    throw std::invalid_argument("pgd: input dimension mismatch");

  const std::size_t d = x.size();
  std::vector<double> delta(d, 0.0);
  if (cfg.random_start) {
    Rng rng = Rng::stream(cfg.random_start_seed, 0x70676430ULL);  // "pgd0"
    if (cfg.norm == NormKind::linf) {
      for (double& v : delta) v = rng.uniform(-cfg.eps, cfg.eps);
    } else {
      // uniform in the l2 ball: uniform direction, radius ~ eps * u^(1/d)
      double norm2 = 0.0;
      for (double& v : delta) {
        v = rng.normal();
        norm2 += v * v;
      }
      const double r =
          cfg.eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
      kernels::scal(r / std::sqrt(norm2), delta.data(), d);
    }
    if (clip_unit_box) {
      std::vector<double> xp = x;
      kernels::axpy(1.0, delta.data(), xp.data(), d);
      kernels::clamp(0.0, 1.0, xp.data(), d);
      for (std::size_t i = 0; i < d; ++i) delta[i] = xp[i] - x[i];
    }
    check_ball(delta, cfg.eps, cfg.norm);
  }

  std::vector<double> xp(d);
  for (int it = 0; it < cfg.iters; ++it) {
    xp = x;
    kernels::axpy(1.0, delta.data(), xp.data(), d);
    const std::vector<double> g = m.grad_input(xp, Target(label));

    if (cfg.raw_step) {
      kernels::axpy(cfg.alpha, g.data(), delta.data(), d);
    } else if (cfg.norm == NormKind::l2) {
      const double gn = std::sqrt(kernels::dot(g.data(), g.data(), d));
      if (gn > 0.0) kernels::axpy(cfg.alpha / gn, g.data(), delta.data(), d);
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        if (g[i] > 0.0)
          delta[i] += cfg.alpha;
        else if (g[i] < 0.0)
          delta[i] -= cfg.alpha;
      }
    }

    project(delta, cfg.eps, cfg.norm);
    if (clip_unit_box) {
      xp = x;
      kernels::axpy(1.0, delta.data(), xp.data(), d);
      kernels::clamp(0.0, 1.0, xp.data(), d);
      for (std::size_t i = 0; i < d; ++i) delta[i] = xp[i] - x[i];
    }
    check_ball(delta, cfg.eps, cfg.norm);
    if (iterate_norms) iterate_norms->push_back(vector_norm(delta, cfg.norm));
  }

  AttackOutcome out;
  out.delta = delta;
  xp = x;
  kernels::axpy(1.0, delta.data(), xp.data(), d);
  out.perturbed_prediction = m.predict(xp);
  out.success = out.perturbed_prediction != label;
  return out;
}

double risk_under_attack(const DifferentiableModel& m,
                         const LabeledDataset& test_ds,
                         const AttackConfig& cfg) {
  if (test_ds.samples.empty())
    throw std::invalid_argument("risk_under_attack: empty test set");
  const bool clip = test_ds.image_like();
  std::size_t hits = 0;
  for (const LabeledSample& s : test_ds.samples)
    if (pgd(m, s.features, s.label, cfg, clip).success) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test_ds.size());
}

LabeledDataset adversarial_dataset(const DifferentiableModel& m,
                                   const LabeledDataset& test_ds,
                                   const AttackConfig& cfg) {
  if (test_ds.samples.empty())
    throw std::invalid_argument("adversarial_dataset: empty test set");
  LabeledDataset out;
  out.dim = test_ds.dim;
  out.classes = test_ds.classes;
  out.name = test_ds.name + ":adversarial";
  out.shape = test_ds.shape;
  out.samples.reserve(test_ds.size());
  const bool clip = test_ds.image_like();
  for (const LabeledSample& s : test_ds.samples) {
    const AttackOutcome outcome = pgd(m, s.features, s.label, cfg, clip);
    LabeledSample adv;
    adv.features = s.features;
    kernels::axpy(1.0, outcome.delta.data(), adv.features.data(),
                  adv.features.size());
    adv.label = s.label;
    out.samples.push_back(std::move(adv));
  }
  return out;
}

std::string preset_name(const AttackConfig& cfg) {
  return std::string(norm_name(cfg.norm)) + "-e" + format_double(cfg.eps) +
         "-a" + format_double(cfg.alpha) + "-i" + std::to_string(cfg.iters);
}

const std::vector<AttackPreset>& attack_presets() {
  static const std::vector<AttackPreset> presets = [] {
    std::vector<AttackPreset> out;
    struct Row {
      NormKind norm;
      double eps, alpha;
    };
    // eps/5 rule everywhere, plus the alternate l2 eps=0.25 row that steps
    // with alpha=0.5
    const Row rows[] = {
        {NormKind::l2, 0.25, 0.05},  {NormKind::l2, 0.25, 0.5},
        {NormKind::l2, 0.5, 0.1},    {NormKind::linf, 0.03, 0.006},
        {NormKind::linf, 0.05, 0.01}, {NormKind::linf, 0.1, 0.02},
    };
    for (const Row& r : rows) {
      for (int iters : {10, 100}) {
        AttackConfig cfg;
        cfg.norm = r.norm;
        cfg.eps = r.eps;
        cfg.alpha = r.alpha;
        cfg.iters = iters;
        out.push_back({preset_name(cfg), cfg});
      }
    }
    return out;
  }();
  return presets;
}

AttackConfig preset_attack(const std::string& name) {
  for (const AttackPreset& p : attack_presets())
    if (p.name == name) return p.cfg;
  std::string known;
  for (const AttackPreset& p : attack_presets()) {
    if (!known.empty()) known += ", ";
    known += p.name;
  }
  throw std::invalid_argument("unknown attack preset '" + name +
                              "'; known presets: " + known);
}

}  // namespace augrisk
