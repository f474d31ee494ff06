// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "augrisk/kernels.hpp"
#include "augrisk/numfmt.hpp"

namespace augrisk {

std::vector<double> one_hot(int label, int classes) {
  if (label < 0 || label >= classes)
    throw std::invalid_argument("one_hot: label outside [0,classes)");
  std::vector<double> v(classes, 0.0);
  v[label] = 1.0;
  return v;
}

namespace {

void clip_unit(std::vector<double>& x, bool image_like) {
  if (image_like) kernels::clamp(0.0, 1.0, x.data(), x.size());
}

void hflip_inplace(std::vector<double>& x, const std::optional<ImageShape>& shape) {
  if (!shape) {
    std::reverse(x.begin(), x.end());
    return;
  }
  const int h = shape->height, w = shape->width, ch = shape->channels;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w / 2; ++xx)
      for (int c = 0; c < ch; ++c)
        std::swap(x[(static_cast<std::size_t>(y) * w + xx) * ch + c],
                  x[(static_cast<std::size_t>(y) * w + (w - 1 - xx)) * ch + c]);
}

// Zero a random outer band: u1 leading and u2 trailing coordinates, clamped
// so at least one coordinate survives.
void crop_flat(std::vector<double>& x, int max_margin, Rng& rng) {
  const int d = static_cast<int>(x.size());
  int u1 = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_margin) + 1));
  int u2 = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_margin) + 1));
  u1 = std::min(u1, d - 1);
  u2 = std::min(u2, d - 1 - u1);
  std::fill(x.begin(), x.begin() + u1, 0.0);
  std::fill(x.end() - u2, x.end(), 0.0);
}

std::vector<double> crop_image(const std::vector<double>& x,
                               const ImageShape& shape, int pad, int oy,
                               int ox) {
  const int h = shape.height, w = shape.width, ch = shape.channels;
  std::vector<double> out(x.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    const int sy = y + oy - pad;  // source row in the unpadded image
    if (sy < 0 || sy >= h) continue;
    for (int xx = 0; xx < w; ++xx) {
      const int sx = xx + ox - pad;
      if (sx < 0 || sx >= w) continue;
      for (int c = 0; c < ch; ++c)
        out[(static_cast<std::size_t>(y) * w + xx) * ch + c] =
            x[(static_cast<std::size_t>(sy) * w + sx) * ch + c];
    }
  }
  return out;
}

void validate_classical(const ClassicalParams& p) {
  if (!(p.jitter_lo > 0.0) || !(p.jitter_hi >= p.jitter_lo))
    throw std::invalid_argument("classical: jitter range must satisfy 0 < lo <= hi");
  if (p.rotation_max_deg < 0.0)
    throw std::invalid_argument("classical: rotation_max_deg must be >= 0");
  if (p.crop_pad < 0)
    throw std::invalid_argument("classical: crop_pad must be >= 0");
}

}  // namespace

namespace detail {

AugmentedSample mix_pair(const AugmentedSample& s, const LabeledSample& partner,
                         int classes, double m) {
  AugmentedSample out;
  out.features.resize(s.features.size());
  for (std::size_t i = 0; i < s.features.size(); ++i)
    out.features[i] = (1.0 - m) * s.features[i] + m * partner.features[i];
  const std::vector<double> partner_label = one_hot(partner.label, classes);
  out.soft_label.resize(classes);
  for (int k = 0; k < classes; ++k)
    out.soft_label[k] = (1.0 - m) * s.soft_label[k] + m * partner_label[k];
  return out;
}

ClassicalDraw draw_classical(const ClassicalParams& p, Rng& rng) {
  ClassicalDraw d;
  d.flip = rng.bernoulli(0.5);
  d.angle_deg = rng.uniform(-p.rotation_max_deg, p.rotation_max_deg);
  d.brightness = rng.uniform(p.jitter_lo, p.jitter_hi);
  d.contrast = rng.uniform(p.jitter_lo, p.jitter_hi);
  d.saturation = rng.uniform(p.jitter_lo, p.jitter_hi);
  const int span = 2 * p.crop_pad + 1;
  d.crop_oy = static_cast<int>(rng.below(span));
  d.crop_ox = static_cast<int>(rng.below(span));
  return d;
}

std::vector<double> rotate_bilinear(const std::vector<double>& img,
                                    const ImageShape& shape,
                                    double angle_deg) {
  const int h = shape.height, w = shape.width, ch = shape.channels;
  const double th = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  std::vector<double> out(img.size(), 0.0);
  auto at = [&](int y, int x, int cc) -> double {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return img[(static_cast<std::size_t>(y) * w + x) * ch + cc];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = c * (x - cx) + s * (y - cy) + cx;
      const double sy = -s * (x - cx) + c * (y - cy) + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      for (int cc = 0; cc < ch; ++cc) {
        const double v = (1 - fy) * ((1 - fx) * at(y0, x0, cc) + fx * at(y0, x0 + 1, cc)) +
                         fy * ((1 - fx) * at(y0 + 1, x0, cc) + fx * at(y0 + 1, x0 + 1, cc));
        out[(static_cast<std::size_t>(y) * w + x) * ch + cc] = v;
      }
    }
  }
  return out;
}

}  // namespace detail

Augmenter Augmenter::noise(NoiseParams p) {
  if (p.eps < 0) throw std::invalid_argument("noise: eps must be >= 0");
  Augmenter a;
  a.kind_ = Kind::noise;
  a.params_ = p;
  return a;
}

Augmenter Augmenter::crop(CropParams p) {
  if (p.max_margin < 0 || p.pad < 0)
    throw std::invalid_argument("crop: margins must be >= 0");
  Augmenter a;
  a.kind_ = Kind::crop;
  a.params_ = p;
  return a;
}

Augmenter Augmenter::permute(PermuteParams p) {
  if (p.mode == PermuteParams::Mode::random_swap && p.swap_pairs < 1)
    throw std::invalid_argument("permute: swap_pairs must be >= 1");
  Augmenter a;
  a.kind_ = Kind::permute;
  a.params_ = p;
  return a;
}

Augmenter Augmenter::classical(ClassicalParams p) {
  validate_classical(p);
  Augmenter a;
  a.kind_ = Kind::classical;
  a.params_ = p;
  return a;
}

Augmenter Augmenter::mixup(MixupParams p) {
  if (!(p.alpha > 0)) throw std::invalid_argument("mixup: alpha must be > 0");
  Augmenter a;
  a.kind_ = Kind::mixup;
  a.params_ = p;
  return a;
}

Augmenter Augmenter::density(DensityParams p) {
  if (p.components_per_class < 1)
    throw std::invalid_argument("density: components_per_class must be >= 1");
  Augmenter a;
  a.kind_ = Kind::density;
  a.params_ = p;
  return a;
}

std::optional<int> Augmenter::intrinsic_dim() const {
  if (kind_ == Kind::density && density_) return density_->dim;
  if (kind_ == Kind::compose) {
    if (auto d = outer_->intrinsic_dim()) return d;
    return inner_->intrinsic_dim();
  }
  return std::nullopt;
}

AugmentedSample Augmenter::apply(const LabeledSample& s,
                                 const LabeledDataset& peers, Rng& rng,
                                 std::size_t self_index) const {
  AugmentedSample soft;
  soft.features = s.features;
  soft.soft_label = one_hot(s.label, peers.classes);
  return apply(soft, peers, rng, self_index);
}

AugmentedSample Augmenter::apply(const AugmentedSample& s,
                                 const LabeledDataset& peers, Rng& rng,
                                 std::size_t self_index) const {
  if (static_cast<int>(s.features.size()) != peers.dim)
    throw std::invalid_argument("augment: sample dimension does not match peers");
  if (auto d = intrinsic_dim(); d && *d != peers.dim)
    throw std::invalid_argument("augment: augmenter fitted for dimension " +
                                std::to_string(*d) + ", data has " +
                                std::to_string(peers.dim));

  AugmentedSample out = s;
  switch (kind_) {
    case Kind::compose: {
      AugmentedSample mid = inner_->apply(s, peers, rng, self_index);
      return outer_->apply(mid, peers, rng, self_index);
    }
    case Kind::noise: {
      const auto& p = std::get<NoiseParams>(params_);
      for (double& v : out.features) v += rng.uniform(0.0, p.eps);
      clip_unit(out.features, peers.image_like());
      break;
    }
    case Kind::crop: {
      const auto& p = std::get<CropParams>(params_);
      if (peers.image_like() && p.pad > 0) {
        const int span = 2 * p.pad + 1;
        const int oy = static_cast<int>(rng.below(span));
        const int ox = static_cast<int>(rng.below(span));
        out.features = crop_image(out.features, *peers.shape, p.pad, oy, ox);
      } else {
        crop_flat(out.features, p.max_margin, rng);
      }
      break;
    }
    case Kind::permute: {
      const auto& p = std::get<PermuteParams>(params_);
      if (p.mode == PermuteParams::Mode::horizontal_flip) {
        hflip_inplace(out.features, peers.shape);
      } else {
        const std::size_t d = out.features.size();
        for (int k = 0; k < p.swap_pairs; ++k) {
          const std::size_t i = rng.below(d);
          const std::size_t j = rng.below(d);
          std::swap(out.features[i], out.features[j]);
        }
      }
      break;
    }
    case Kind::classical: {
      const auto& p = std::get<ClassicalParams>(params_);
      const detail::ClassicalDraw draw = detail::draw_classical(p, rng);
      if (peers.image_like()) {
        const ImageShape& shape = *peers.shape;
        if (draw.flip) hflip_inplace(out.features, peers.shape);
        if (p.rotation_max_deg > 0)
          out.features = detail::rotate_bilinear(out.features, shape, draw.angle_deg);
        // brightness, then mean-preserving contrast, then saturation (RGB only)
        for (double& v : out.features) v *= draw.brightness;
        double mean = 0.0;
        for (double v : out.features) mean += v;
        mean /= static_cast<double>(out.features.size());
        for (double& v : out.features) v = mean + (v - mean) * draw.contrast;
        if (shape.channels == 3) {
          for (std::size_t px = 0; px + 2 < out.features.size(); px += 3) {
            const double gray = (out.features[px] + out.features[px + 1] +
                                 out.features[px + 2]) / 3.0;
            for (int c = 0; c < 3; ++c)
              out.features[px + c] = gray + (out.features[px + c] - gray) * draw.saturation;
          }
        }
        if (p.crop_pad > 0)
          out.features = crop_image(out.features, shape, p.crop_pad,
                                    draw.crop_oy, draw.crop_ox);
        clip_unit(out.features, true);
      } else {
        // flat data: rotation/jitter have no geometric meaning, so classical
        // degrades to noise . crop . flip with parameters derived from the
        // image-mode knobs (documented in the README)
        if (draw.flip) hflip_inplace(out.features, peers.shape);
        const int margin = std::min(p.crop_pad, peers.dim - 1);
        if (margin > 0) crop_flat(out.features, margin, rng);
        const double eps = (p.jitter_hi - p.jitter_lo) / 2.0;
        for (double& v : out.features) v += rng.uniform(0.0, eps);
      }
      break;
    }
    case Kind::mixup: {
      const auto& p = std::get<MixupParams>(params_);
      const std::size_t n = peers.size();
      std::size_t j;
      if (self_index != npos && self_index < n) {
        if (n < 2)
          throw std::invalid_argument("mixup: needs at least 2 peer samples");
        j = rng.below(n - 1);
        if (j >= self_index) ++j;
      } else {
        if (n == 0) throw std::invalid_argument("mixup: empty peer dataset");
        j = rng.below(n);
      }
      const LabeledSample& partner = peers.samples[j];
      const double m = rng.beta(p.alpha, p.alpha);
      out = detail::mix_pair(s, partner, peers.classes, m);
      break;
    }
    case Kind::density: {
      if (!density_)
        throw std::runtime_error("augment: unfitted augmenter (density kind needs fit_density)");
      // condition on the sample's class; ties break toward the lowest index
      const int klass = static_cast<int>(
          std::max_element(out.soft_label.begin(), out.soft_label.end()) -
          out.soft_label.begin());
      const ClassMixture& mix = density_->per_class[klass];
      double u = rng.uniform();
      std::size_t comp = 0;
      for (; comp + 1 < mix.weights.size(); ++comp) {
        if (u < mix.weights[comp]) break;
        u -= mix.weights[comp];
      }
      for (int i = 0; i < density_->dim; ++i)
        out.features[i] = mix.means[comp][i] +
                          std::sqrt(mix.vars[comp][i]) * rng.normal();
      out.soft_label = one_hot(klass, peers.classes);
      clip_unit(out.features, peers.image_like());
      break;
    }
  }
  return out;
}

Augmenter compose(Augmenter outer, Augmenter inner) {
  const auto d_outer = outer.intrinsic_dim();
  const auto d_inner = inner.intrinsic_dim();
  if (d_outer && d_inner && *d_outer != *d_inner)
    throw std::invalid_argument("compose: augmenters pin different dimensions (" +
                                std::to_string(*d_outer) + " vs " +
                                std::to_string(*d_inner) + ")");
  Augmenter a;
  a.kind_ = Augmenter::Kind::compose;
  a.outer_ = std::make_shared<const Augmenter>(std::move(outer));
  a.inner_ = std::make_shared<const Augmenter>(std::move(inner));
  return a;
}

Augmenter fit_density(const DensityParams& params, const LabeledDataset& ds) {
  if (params.components_per_class < 1)
    throw std::invalid_argument("fit_density: components_per_class must be >= 1");
  ds.validate();

  const int k = params.components_per_class;
  const int d = ds.dim;
  constexpr double kVarFloor = 1e-8;
  constexpr int kMaxIters = 200;

  auto model = std::make_shared<DensityModel>();
  model->dim = d;
  model->classes = ds.classes;
  model->per_class.resize(ds.classes);

  std::vector<std::vector<const LabeledSample*>> by_class(ds.classes);
  for (const LabeledSample& s : ds.samples) by_class[s.label].push_back(&s);

  for (int klass = 0; klass < ds.classes; ++klass) {
    const auto& members = by_class[klass];
    const auto n = members.size();
    if (n < static_cast<std::size_t>(k))
      throw std::invalid_argument("fit_density: class " + std::to_string(klass) +
                                  " has " + std::to_string(n) +
                                  " samples, needs at least " + std::to_string(k));

    Rng rng = Rng::stream(params.fit_seed, 0x676d6dULL, klass);  // "gmm"

    // per-coordinate variance of the class, floor applied
    std::vector<double> gmean(d, 0.0), gvar(d, 0.0);
    for (const LabeledSample* s : members)
      for (int i = 0; i < d; ++i) gmean[i] += s->features[i];
    for (int i = 0; i < d; ++i) gmean[i] /= static_cast<double>(n);
    for (const LabeledSample* s : members)
      for (int i = 0; i < d; ++i) {
        const double diff = s->features[i] - gmean[i];
        gvar[i] += diff * diff;
      }
    for (int i = 0; i < d; ++i)
      gvar[i] = std::max(gvar[i] / static_cast<double>(n), kVarFloor);

    ClassMixture mix;
    mix.weights.assign(k, 1.0 / k);
    mix.vars.assign(k, gvar);
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = i;
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i)
      std::swap(pick[i], pick[i + rng.below(n - i)]);
    for (int j = 0; j < k; ++j) mix.means.push_back(members[pick[j]]->features);

    std::vector<std::vector<double>> resp(n, std::vector<double>(k));
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kMaxIters; ++iter) {
      // E-step in log space
      double ll = 0.0;
      for (std::size_t si = 0; si < n; ++si) {
        const std::vector<double>& x = members[si]->features;
        double max_lp = -std::numeric_limits<double>::infinity();
        std::vector<double> lp(k);
        for (int j = 0; j < k; ++j) {
          double v = std::log(mix.weights[j]);
          for (int i = 0; i < d; ++i) {
            const double var = mix.vars[j][i];
            const double diff = x[i] - mix.means[j][i];
            v += -0.5 * std::log(2.0 * std::numbers::pi * var) -
                 diff * diff / (2.0 * var);
          }
          lp[j] = v;
          max_lp = std::max(max_lp, v);
        }
        double se = 0.0;
        for (int j = 0; j < k; ++j) se += std::exp(lp[j] - max_lp);
        const double lse = max_lp + std::log(se);
        ll += lse;
        for (int j = 0; j < k; ++j) resp[si][j] = std::exp(lp[j] - lse);
      }

      // M-step
      for (int j = 0; j < k; ++j) {
        double nj = 0.0;
        for (std::size_t si = 0; si < n; ++si) nj += resp[si][j];
        if (nj < 1e-9) {
          // dead component: reseed on a random member
          mix.means[j] = members[rng.below(n)]->features;
          mix.vars[j] = gvar;
          mix.weights[j] = 1e-6;
          continue;
        }
        std::vector<double> mean(d, 0.0);
        for (std::size_t si = 0; si < n; ++si)
          for (int i = 0; i < d; ++i)
            mean[i] += resp[si][j] * members[si]->features[i];
        for (int i = 0; i < d; ++i) mean[i] /= nj;
        std::vector<double> var(d, 0.0);
        for (std::size_t si = 0; si < n; ++si)
          for (int i = 0; i < d; ++i) {
            const double diff = members[si]->features[i] - mean[i];
            var[i] += resp[si][j] * diff * diff;
          }
        for (int i = 0; i < d; ++i) var[i] = std::max(var[i] / nj, kVarFloor);
        mix.means[j] = std::move(mean);
        mix.vars[j] = std::move(var);
        mix.weights[j] = nj / static_cast<double>(n);
      }
      double wsum = 0.0;
      for (double w : mix.weights) wsum += w;
      for (double& w : mix.weights) w /= wsum;

      if (std::abs(ll - prev_ll) < 1e-9 * (1.0 + std::abs(ll))) break;
      prev_ll = ll;
    }
    model->per_class[klass] = std::move(mix);
  }

  Augmenter a;
  a.kind_ = Augmenter::Kind::density;
  a.params_ = params;
  a.density_ = std::move(model);
  return a;
}

std::vector<AugmentedSample> stochastic_apply(const Augmenter& a, double p_aug,
                                              const LabeledDataset& ds,
                                              std::uint64_t seed) {
  if (!(p_aug >= 0.0 && p_aug <= 1.0))
    throw std::invalid_argument("stochastic_apply: p_aug must be in [0,1]");
  std::vector<AugmentedSample> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Rng rng = Rng::stream(seed, i);
    if (rng.bernoulli(p_aug)) {
      out.push_back(a.apply(ds.samples[i], ds, rng, i));
    } else {
      AugmentedSample s;
      s.features = ds.samples[i].features;
      s.soft_label = one_hot(ds.samples[i].label, ds.classes);
      out.push_back(std::move(s));
    }
  }
  return out;
}

void save_augmented_csv(const std::vector<AugmentedSample>& samples,
                        const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_augmented_csv: cannot open " + path);
  for (const AugmentedSample& s : samples) {
    for (double v : s.features) out << format_double(v) << ',';
    for (std::size_t k = 0; k < s.soft_label.size(); ++k) {
      out << format_double(s.soft_label[k]);
      out << (k + 1 == s.soft_label.size() ? '\n' : ',');
    }
  }
  if (!out) throw std::runtime_error("save_augmented_csv: write failed for " + path);
}

}  // namespace augrisk
