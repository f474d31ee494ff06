// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/stress.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "augrisk/numfmt.hpp"
#include "augrisk/stats.hpp"

namespace augrisk {

std::vector<double> sample_sphere(const std::vector<double>& center,
                                  double eps, NormKind norm, Rng& rng) {
  if (!(eps > 0)) throw std::invalid_argument("sample_sphere: eps must be > 0");
  const std::size_t d = center.size();
  if (d == 0) throw std::invalid_argument("sample_sphere: empty center");

  std::vector<double> p(d);
  if (norm == NormKind::l2) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : p) {
        v = rng.normal();
        norm2 += v * v;
      }
    } while (norm2 < 1e-300);
    const double scale = eps / std::sqrt(norm2);
    for (std::size_t i = 0; i < d; ++i) p[i] = center[i] + scale * p[i];
  } else {
    const std::uint64_t face = rng.below(2 * d);
    const std::size_t face_dim = face / 2;
    const double face_sign = (face % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < d; ++i)
      p[i] = center[i] + rng.uniform(-eps, eps);
    p[face_dim] = center[face_dim] + face_sign * eps;
  }

  // shell exactness check
  double offset_norm;
  if (norm == NormKind::l2) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = p[i] - center[i];
      acc += diff * diff;
    }
    offset_norm = std::sqrt(acc);
  } else {
    offset_norm = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      offset_norm = std::max(offset_norm, std::abs(p[i] - center[i]));
  }
  if (std::abs(offset_norm - eps) > 1e-9)
    throw std::logic_error("sample_sphere: point left the shell");
  return p;
}

StressResult prediction_change_stress_points(
    const DifferentiableModel& m, const std::vector<std::vector<double>>& points,
    const StressConfig& cfg) {
  if (points.empty())
    throw std::invalid_argument("prediction_change_stress: empty point set");
  if (!(cfg.eps > 0))
    throw std::invalid_argument("prediction_change_stress: eps must be > 0");
  if (cfg.n_sphere < 1)
    throw std::invalid_argument("prediction_change_stress: n_sphere must be >= 1");

  StressResult result;
  result.per_point.reserve(points.size());
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::vector<double>& x = points[i];
    const int center_pred = m.predict(x);
    Rng rng = Rng::stream(cfg.seed, i);
    int changed = 0;
    for (int j = 0; j < cfg.n_sphere; ++j) {
      const std::vector<double> y = sample_sphere(x, cfg.eps, cfg.norm, rng);
      if (m.predict(y) != center_pred) ++changed;
    }
    const double stress = static_cast<double>(changed) / cfg.n_sphere;
    result.per_point.push_back(stress);
    total += stress;
  }
  result.mean = total / static_cast<double>(points.size());
  return result;
}

StressResult prediction_change_stress(const DifferentiableModel& m,
                                      const LabeledDataset& ds,
                                      const StressConfig& cfg) {
  std::vector<std::vector<double>> points;
  points.reserve(ds.size());
  for (const LabeledSample& s : ds.samples) points.push_back(s.features);
  return prediction_change_stress_points(m, points, cfg);
}

double prediction_change_risk_oracle(const DifferentiableModel& m,
                                     const LabeledDataset& ds, double eps,
                                     NormKind norm, int grid_resolution) {
  if (ds.dim > 3)
    throw std::invalid_argument(
        "prediction_change_risk_oracle: oracle restricted to low dimension (d <= 3)");
  if (ds.samples.empty())
    throw std::invalid_argument("prediction_change_risk_oracle: empty dataset");
  if (grid_resolution < 2)
    throw std::invalid_argument("prediction_change_risk_oracle: grid_resolution must be >= 2");
  if (!(eps > 0))
    throw std::invalid_argument("prediction_change_risk_oracle: eps must be > 0");

  const int d = ds.dim;
  std::vector<std::vector<double>> offsets;
  std::vector<int> idx(d, 0);
  std::vector<double> axis(grid_resolution);
  for (int i = 0; i < grid_resolution; ++i)
    axis[i] = -eps + 2.0 * eps * i / (grid_resolution - 1);
  for (;;) {
    std::vector<double> off(d);
    for (int i = 0; i < d; ++i) off[i] = axis[idx[i]];
    if (vector_norm(off, norm) <= eps + 1e-12) offsets.push_back(off);
    int k = 0;
    while (k < d && ++idx[k] == grid_resolution) idx[k++] = 0;
    if (k == d) break;
  }

  std::size_t flagged = 0;
  std::vector<double> probe(d);
  for (const LabeledSample& s : ds.samples) {
    const int center_pred = m.predict(s.features);
    for (const std::vector<double>& off : offsets) {
      for (int i = 0; i < d; ++i) probe[i] = s.features[i] + off[i];
      if (m.predict(probe) != center_pred) {
        ++flagged;
        break;
      }
    }
  }
  return static_cast<double>(flagged) / static_cast<double>(ds.size());
}

std::vector<StressCell> stress_report(const DifferentiableModel& m,
                                      const LabeledDataset& non_aug,
                                      const std::vector<AugmentedSample>& aug,
                                      const LabeledDataset& test,
                                      const std::vector<StressConfig>& cfgs) {
  if (non_aug.samples.empty() || aug.empty() || test.samples.empty())
    throw std::invalid_argument("stress_report: every population must be non-empty");

  std::vector<std::vector<double>> aug_points;
  aug_points.reserve(aug.size());
  for (const AugmentedSample& s : aug) aug_points.push_back(s.features);

  std::vector<StressCell> cells;
  for (const StressConfig& cfg : cfgs) {
    struct Pop {
      const char* name;
      StressResult result;
    };
    Pop pops[] = {
        {"train", prediction_change_stress(m, non_aug, cfg)},
        {"augmented", prediction_change_stress_points(m, aug_points, cfg)},
        {"test", prediction_change_stress(m, test, cfg)},
    };
    for (Pop& p : pops) {
      StressCell cell;
      cell.population = p.name;
      cell.norm = cfg.norm;
      cell.eps = cfg.eps;
      cell.mean = p.result.mean;
      cell.p10 = quantile(p.result.per_point, 0.10);
      cell.p25 = quantile(p.result.per_point, 0.25);
      cell.p50 = quantile(p.result.per_point, 0.50);
      cell.p75 = quantile(p.result.per_point, 0.75);
      cell.p90 = quantile(p.result.per_point, 0.90);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void save_stress_csv(const std::vector<StressCell>& cells,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_stress_csv: cannot open " + path);
  out << "population,norm,eps,mean,p10,p25,p50,p75,p90\n";
  for (const StressCell& c : cells) {
    out << c.population << ',' << norm_name(c.norm) << ','
        << format_double(c.eps) << ',' << format_double(c.mean) << ','
        << format_double(c.p10) << ',' << format_double(c.p25) << ','
        << format_double(c.p50) << ',' << format_double(c.p75) << ','
        << format_double(c.p90) << '\n';
  }
  if (!out) throw std::runtime_error("save_stress_csv: write failed for " + path);
}

}  // namespace augrisk
