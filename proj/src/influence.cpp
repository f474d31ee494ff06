// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/influence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "augrisk/kernels.hpp"
#include "augrisk/numfmt.hpp"

namespace augrisk {

namespace {

std::vector<double> apply_damped_hessian(const DifferentiableModel& m,
                                         const Batch& hessian_batch,
                                         const InfluenceConfig& cfg,
                                         const std::vector<double>& p) {
  std::vector<double> hp = m.hvp(hessian_batch, p);
  kernels::axpy(cfg.weight_decay + cfg.damping, p.data(), hp.data(), hp.size());
  return hp;
}

}  // namespace

std::vector<double> inverse_hvp(const DifferentiableModel& m,
                                const Batch& hessian_batch,
                                const std::vector<double>& v,
                                const InfluenceConfig& cfg) {
  if (v.size() != m.param_count())
    throw std::invalid_argument("inverse_hvp: vector dimension mismatch");
  if (cfg.damping < 0)
    throw std::invalid_argument("inverse_hvp: damping must be >= 0");
  if (!(cfg.cg_tol > 0))
    throw std::invalid_argument("inverse_hvp: cg_tol must be > 0");
  if (cfg.cg_max_iters < 1)
    throw std::invalid_argument("inverse_hvp: cg_max_iters must be >= 1");

  const std::size_t n = v.size();
  const double b_norm = std::sqrt(kernels::dot(v.data(), v.data(), n));
  std::vector<double> x(n, 0.0);
  if (b_norm == 0.0) return x;

  std::vector<double> r = v;  // residual of x = 0
  std::vector<double> p = r;
  double rs = kernels::dot(r.data(), r.data(), n);
  const double target = cfg.cg_tol * b_norm;

  for (int it = 0; it < cfg.cg_max_iters; ++it) {
    const std::vector<double> ap = apply_damped_hessian(m, hessian_batch, cfg, p);
    const double p_ap = kernels::dot(p.data(), ap.data(), n);
    if (!(p_ap > 0))
      throw std::runtime_error(
          "inverse_hvp: CG hit a non-positive-curvature direction; raise "
          "damping");
    const double alpha = rs / p_ap;
    kernels::axpy(alpha, p.data(), x.data(), n);
    kernels::axpy(-alpha, ap.data(), r.data(), n);
    const double rs_new = kernels::dot(r.data(), r.data(), n);
    if (std::sqrt(rs_new) <= target) {
      // confirm with the true residual; keep iterating if the recurrence drifted
      std::vector<double> res = apply_damped_hessian(m, hessian_batch, cfg, x);
      kernels::axpy(-1.0, v.data(), res.data(), n);
      const double true_res = std::sqrt(kernels::dot(res.data(), res.data(), n));
      if (true_res <= target) return x;
    }
    const double beta = rs_new / rs;
    kernels::scal(beta, p.data(), n);
    kernels::axpy(1.0, r.data(), p.data(), n);
    rs = rs_new;
  }

  std::vector<double> res = apply_damped_hessian(m, hessian_batch, cfg, x);
  kernels::axpy(-1.0, v.data(), res.data(), n);
  const double final_res = std::sqrt(kernels::dot(res.data(), res.data(), n));
  if (final_res <= target) return x;
  throw std::runtime_error(
      "inverse_hvp: CG did not converge within " +
      std::to_string(cfg.cg_max_iters) + " iterations (residual " +
      format_double(final_res) + ", target " + format_double(target) +
      "); raise damping or cg_max_iters");
}

double influence(const DifferentiableModel& m, const Batch& hessian_batch,
                 const Example& x_train, const Example& x_test,
                 const InfluenceConfig& cfg) {
  const std::vector<double> g_test = m.grad_params(x_test.features, x_test.target);
  const std::vector<double> u = inverse_hvp(m, hessian_batch, g_test, cfg);
  const std::vector<double> g_train =
      m.grad_params(x_train.features, x_train.target);
  return kernels::dot(u.data(), g_train.data(), u.size());
}

std::vector<InfluenceRecord> influence_matrix(const DifferentiableModel& m,
                                              const Batch& hessian_batch,
                                              const InfluencePopulations& pops,
                                              const InfluenceConfig& cfg) {
  if (pops.original_train.empty() || pops.augmented_train.empty() ||
      pops.clean_test.empty() || pops.adversarial_test.empty())
    throw std::invalid_argument("influence_matrix: every population must be non-empty");

  // train-side gradients once, reused for every test point
  auto grads_of = [&](const std::vector<Example>& pop) {
    std::vector<std::vector<double>> grads;
    grads.reserve(pop.size());
    for (const Example& ex : pop)
      grads.push_back(m.grad_params(ex.features, ex.target));
    return grads;
  };
  const std::vector<std::vector<double>> g_original = grads_of(pops.original_train);
  const std::vector<std::vector<double>> g_augmented = grads_of(pops.augmented_train);

  std::vector<InfluenceRecord> records;
  records.reserve((pops.clean_test.size() + pops.adversarial_test.size()) *
                  (pops.original_train.size() + pops.augmented_train.size()));

  auto run_tests = [&](const std::vector<Example>& tests, const char* test_kind) {
    for (std::size_t ti = 0; ti < tests.size(); ++ti) {
      const std::vector<double> g_test =
          m.grad_params(tests[ti].features, tests[ti].target);
      std::vector<double> u;
      try {
        u = inverse_hvp(m, hessian_batch, g_test, cfg);
      } catch (const std::exception& e) {
        throw std::runtime_error("influence_matrix: solve failed for " +
                                 std::string(test_kind) + " test index " +
                                 std::to_string(ti) + ": " + e.what());
      }
      auto emit = [&](const std::vector<std::vector<double>>& grads,
                      const char* train_kind) {
        for (std::size_t si = 0; si < grads.size(); ++si) {
          InfluenceRecord rec;
          rec.train_index = static_cast<int>(si);
          rec.test_index = static_cast<int>(ti);
          rec.score = kernels::dot(u.data(), grads[si].data(), u.size());
          rec.test_kind = test_kind;
          rec.train_kind = train_kind;
          records.push_back(std::move(rec));
        }
      };
      emit(g_original, "original");
      emit(g_augmented, "augmented");
    }
  };
  run_tests(pops.clean_test, "clean");
  run_tests(pops.adversarial_test, "adversarial");
  return records;
}

void save_influence_csv(const std::vector<InfluenceRecord>& records,
                        const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_influence_csv: cannot open " + path);
  out << "train_index,train_kind,test_index,test_kind,score\n";
  for (const InfluenceRecord& r : records)
    out << r.train_index << ',' << r.train_kind << ',' << r.test_index << ','
        << r.test_kind << ',' << format_double(r.score) << '\n';
  if (!out)
    throw std::runtime_error("save_influence_csv: write failed for " + path);
}

LossGradDiagnostics loss_and_gradnorm_distributions(
    const DifferentiableModel& m, const Batch& original, const Batch& augmented,
    int batch_size) {
  if (batch_size < 1)
    throw std::invalid_argument("loss_and_gradnorm_distributions: batch_size must be >= 1");

  LossGradDiagnostics diag;
  auto run = [&](const Batch& pop, std::vector<double>& losses,
                 std::vector<double>& gradnorms) {
    losses.reserve(pop.size());
    for (const Example& ex : pop) losses.push_back(m.loss(ex.features, ex.target));
    for (std::size_t start = 0; start < pop.size();
         start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop =
          std::min(pop.size(), start + static_cast<std::size_t>(batch_size));
      Batch chunk(pop.begin() + start, pop.begin() + stop);
      std::vector<double> grad;
      batch_loss(m, chunk, &grad);
      const double norm =
          std::sqrt(kernels::dot(grad.data(), grad.data(), grad.size()));
      gradnorms.push_back(norm / static_cast<double>(m.param_count()));
    }
  };
  run(original, diag.loss_original, diag.gradnorm_original);
  run(augmented, diag.loss_augmented, diag.gradnorm_augmented);
  return diag;
}

void save_histogram_csv(const LossGradDiagnostics& diag, int bins,
                        const std::string& path) {
  if (bins < 1) throw std::invalid_argument("save_histogram_csv: bins must be >= 1");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_histogram_csv: cannot open " + path);

  struct Series {
    const char* name;
    const std::vector<double>* values;
  };
  const Series series[] = {
      {"loss_original", &diag.loss_original},
      {"loss_augmented", &diag.loss_augmented},
      {"gradnorm_original", &diag.gradnorm_original},
      {"gradnorm_augmented", &diag.gradnorm_augmented},
  };

  // shared geometric edges across series of the same metric family; values
  // are floored at 1e-12 so zeros land in the lowest bin
  constexpr double kFloor = 1e-12;
  out << "# geometric bin edges per series; values floored at " << format_double(kFloor) << '\n';
  out << "series,bin_lo,bin_hi,count\n";
  for (const Series& s : series) {
    if (s.values->empty()) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double v : *s.values) {
      const double f = std::max(v, kFloor);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    if (hi <= lo) hi = lo * (1.0 + 1e-9);
    const double log_lo = std::log(lo), log_hi = std::log(hi);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : *s.values) {
      const double f = std::max(v, kFloor);
      int b = static_cast<int>((std::log(f) - log_lo) / (log_hi - log_lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++counts[b];
    }
    for (int b = 0; b < bins; ++b) {
      const double e0 = std::exp(log_lo + (log_hi - log_lo) * b / bins);
      const double e1 = std::exp(log_lo + (log_hi - log_lo) * (b + 1) / bins);
      out << s.name << ',' << format_double(e0) << ',' << format_double(e1)
          << ',' << counts[b] << '\n';
    }
  }
  if (!out)
    throw std::runtime_error("save_histogram_csv: write failed for " + path);
}

}  // namespace augrisk
