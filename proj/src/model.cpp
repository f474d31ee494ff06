// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
#include "augrisk/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "augrisk/kernels.hpp"
#include "augrisk/rng.hpp"
#include "json.hpp"

namespace augrisk {
namespace {

// ---------------------------------------------------------------------------
// Dual numbers: value + tangent. Running the reverse pass on duals whose
// parameter tangents are seeded with v yields the gradient tangent H v.
// ---------------------------------------------------------------------------

struct Dual {
  double v = 0.0;
  double t = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.t + b.t}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.t - b.t}; }
inline Dual operator-(Dual a, double b) { return {a.v - b, a.t}; }
inline Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.t * b.v + a.v * b.t};
}
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.t}; }
inline Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.t - a.v * inv * b.t) * inv};
}
inline Dual& operator+=(Dual& a, Dual b) {
  a.v += b.v;
  a.t += b.t;
  return a;
}
inline Dual& operator-=(Dual& a, Dual b) {
  a.v -= b.v;
  a.t -= b.t;
  return a;
}
inline Dual exp_(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.t};
}
inline double exp_(double a) { return std::exp(a); }
inline Dual log_(Dual a) { return {std::log(a.v), a.t / a.v}; }
inline double log_(double a) { return std::log(a); }
inline Dual tanh_(Dual a) {
  const double th = std::tanh(a.v);
  return {th, (1.0 - th * th) * a.t};
}
inline double tanh_(double a) { return std::tanh(a); }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

template <class T>
T promote(double x);
template <>
double promote<double>(double x) {
  return x;
}
template <>
Dual promote<Dual>(double x) {
  return {x, 0.0};
}

// ---- templated linear algebra; double overloads go through the kernels ----

template <class T>
void mat_vec(const T* a, const T* x, T* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    T acc{};
    const T* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}
inline void mat_vec(const double* a, const double* x, double* y,
                    std::size_t rows, std::size_t cols) {
  kernels::matvec(a, x, y, rows, cols);
}

template <class T>
void mat_vec_t(const T* a, const T* x, T* y, std::size_t rows,
               std::size_t cols) {
  std::fill(y, y + cols, T{});
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += x[r] * row[c];
  }
}
inline void mat_vec_t(const double* a, const double* x, double* y,
                      std::size_t rows, std::size_t cols) {
  kernels::matvec_t(a, x, y, rows, cols);
}

template <class T>
void rank1_update(const T* x, const T* y, T* a, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += x[r] * y[c];
  }
}
inline void rank1_update(const double* x, const double* y, double* a,
                         std::size_t rows, std::size_t cols) {
  kernels::ger(1.0, x, y, a, rows, cols);
}

// ---------------------------------------------------------------------------

constexpr std::size_t kConvK = 3;  // fixed 3x3 kernels, zero padding 1

std::size_t conv_weight_index(const LayerInfo& l, int co, int ci, int ky,
                              int kx) {
  return l.weight_offset +
         ((static_cast<std::size_t>(co) * l.in + ci) * kConvK + ky) * kConvK +
         kx;
}

template <class T>
using Acts = std::vector<std::vector<T>>;

template <class T>
void forward_pass(const std::vector<LayerInfo>& layers, Activation act,
                  const T* params, const std::vector<double>& x,
                  Acts<T>& acts) {
  acts.resize(layers.size() + 1);
  acts[0].resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) acts[0][i] = promote<T>(x[i]);

  for (std::size_t li = 0; li < layers.size(); ++li) {
    const LayerInfo& l = layers[li];
    const std::vector<T>& in = acts[li];
    std::vector<T>& out = acts[li + 1];
    switch (l.kind) {
      case LayerInfo::Kind::dense: {
        out.resize(l.out);
        mat_vec(params + l.weight_offset, in.data(), out.data(), l.out, l.in);
        for (int i = 0; i < l.out; ++i) out[i] += params[l.bias_offset + i];
        break;
      }
      case LayerInfo::Kind::activation: {
        out.resize(in.size());
        if (act == Activation::relu) {
          for (std::size_t i = 0; i < in.size(); ++i)
            out[i] = value_of(in[i]) > 0.0 ? in[i] : T{};
        } else {
          for (std::size_t i = 0; i < in.size(); ++i) out[i] = tanh_(in[i]);
        }
        break;
      }
      case LayerInfo::Kind::conv3x3: {
        const int h = l.height, w = l.width, cin = l.in, cout = l.out;
        out.assign(static_cast<std::size_t>(h) * w * cout, T{});
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            for (int co = 0; co < cout; ++co) {
              T acc = promote<T>(0.0);
              acc += params[l.bias_offset + co];
              for (int ky = 0; ky < static_cast<int>(kConvK); ++ky) {
                const int yy = y + ky - 1;
                if (yy < 0 || yy >= h) continue;
                for (int kx = 0; kx < static_cast<int>(kConvK); ++kx) {
                  const int xc = xx + kx - 1;
                  if (xc < 0 || xc >= w) continue;
                  const std::size_t base =
                      (static_cast<std::size_t>(yy) * w + xc) * cin;
                  for (int ci = 0; ci < cin; ++ci)
                    acc += params[conv_weight_index(l, co, ci, ky, kx)] *
                           in[base + ci];
                }
              }
              out[(static_cast<std::size_t>(y) * w + xx) * cout + co] = acc;
            }
          }
        }
        break;
      }
      case LayerInfo::Kind::global_avg_pool: {
        const int h = l.height, w = l.width, ch = l.in;
        out.assign(ch, T{});
        const double inv = 1.0 / (static_cast<double>(h) * w);
        for (std::size_t px = 0; px < static_cast<std::size_t>(h) * w; ++px)
          for (int c = 0; c < ch; ++c) out[c] += in[px * ch + c];
        for (int c = 0; c < ch; ++c) out[c] = inv * out[c];
        break;
      }
    }
  }
}

void target_probs(const Target& target, int classes, std::vector<double>& out) {
  out.assign(classes, 0.0);
  if (std::holds_alternative<int>(target)) {
    const int y = std::get<int>(target);
    if (y < 0 || y >= classes)
      throw std::invalid_argument("model: class id " + std::to_string(y) +
                                  " outside [0," + std::to_string(classes) +
                                  ")");
    out[y] = 1.0;
  } else {
    const auto& soft = std::get<std::vector<double>>(target);
    check_soft_target(soft, classes);
    out = soft;
  }
}

// Cross-entropy of softmax(z) against the target probabilities. The max
// shift is treated as a constant: softmax is invariant to it, so both the
// value and all derivatives are exact.
template <class T>
T ce_loss(const std::vector<T>& z, const std::vector<double>& probs) {
  double m = -std::numeric_limits<double>::infinity();
  for (const T& zi : z) m = std::max(m, value_of(zi));
  T se{};
  for (const T& zi : z) se += exp_(zi - m);
  T loss = log_(se);
  for (std::size_t k = 0; k < z.size(); ++k) loss -= probs[k] * (z[k] - m);
  return loss;
}

template <class T>
void softmax_minus_target(const std::vector<T>& z,
                          const std::vector<double>& probs,
                          std::vector<T>& dz) {
  double m = -std::numeric_limits<double>::infinity();
  for (const T& zi : z) m = std::max(m, value_of(zi));
  dz.resize(z.size());
  T se{};
  for (std::size_t k = 0; k < z.size(); ++k) {
    dz[k] = exp_(z[k] - m);
    se += dz[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k)
    dz[k] = dz[k] / se - promote<T>(probs[k]);
}

// Reverse pass. `grad` accumulates (+=) parameter gradients; `grad_input`,
// when non-null, receives the gradient w.r.t. the input vector.
template <class T>
void backward_pass(const std::vector<LayerInfo>& layers, Activation act,
                   const T* params, const Acts<T>& acts, std::vector<T>& dz,
                   T* grad, std::vector<T>* grad_input) {
  std::vector<T> d_prev;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const LayerInfo& l = layers[li];
    const std::vector<T>& in = acts[li];
    switch (l.kind) {
      case LayerInfo::Kind::dense: {
        rank1_update(dz.data(), in.data(), grad + l.weight_offset, l.out, l.in);
        for (int i = 0; i < l.out; ++i) grad[l.bias_offset + i] += dz[i];
        d_prev.resize(l.in);
        mat_vec_t(params + l.weight_offset, dz.data(), d_prev.data(), l.out,
                  l.in);
        break;
      }
      case LayerInfo::Kind::activation: {
        d_prev.resize(in.size());
        if (act == Activation::relu) {
          for (std::size_t i = 0; i < in.size(); ++i)
            d_prev[i] = value_of(in[i]) > 0.0 ? dz[i] : T{};
        } else {
          const std::vector<T>& out = acts[li + 1];
          for (std::size_t i = 0; i < in.size(); ++i)
            d_prev[i] = dz[i] * (promote<T>(1.0) - out[i] * out[i]);
        }
        break;
      }
      case LayerInfo::Kind::conv3x3: {
        const int h = l.height, w = l.width, cin = l.in, cout = l.out;
        d_prev.assign(static_cast<std::size_t>(h) * w * cin, T{});
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            for (int co = 0; co < cout; ++co) {
              const T g = dz[(static_cast<std::size_t>(y) * w + xx) * cout + co];
              grad[l.bias_offset + co] += g;
              for (int ky = 0; ky < static_cast<int>(kConvK); ++ky) {
                const int yy = y + ky - 1;
                if (yy < 0 || yy >= h) continue;
                for (int kx = 0; kx < static_cast<int>(kConvK); ++kx) {
                  const int xc = xx + kx - 1;
                  if (xc < 0 || xc >= w) continue;
                  const std::size_t base =
                      (static_cast<std::size_t>(yy) * w + xc) * cin;
                  for (int ci = 0; ci < cin; ++ci) {
                    grad[conv_weight_index(l, co, ci, ky, kx)] +=
                        g * in[base + ci];
                    d_prev[base + ci] +=
                        g * params[conv_weight_index(l, co, ci, ky, kx)];
                  }
                }
              }
            }
          }
        }
        break;
      }
      case LayerInfo::Kind::global_avg_pool: {
        const int h = l.height, w = l.width, ch = l.in;
        const double inv = 1.0 / (static_cast<double>(h) * w);
        d_prev.assign(static_cast<std::size_t>(h) * w * ch, T{});
        for (std::size_t px = 0; px < static_cast<std::size_t>(h) * w; ++px)
          for (int c = 0; c < ch; ++c) d_prev[px * ch + c] = inv * dz[c];
        break;
      }
    }
    dz.swap(d_prev);
  }
  if (grad_input) *grad_input = dz;
}

template <class T>
T example_loss_and_grad(const std::vector<LayerInfo>& layers, Activation act,
                        const T* params, int classes,
                        const std::vector<double>& x, const Target& target,
                        T* grad, std::vector<T>* grad_input) {
  Acts<T> acts;
  forward_pass(layers, act, params, x, acts);
  std::vector<double> probs;
  target_probs(target, classes, probs);
  const T loss = ce_loss(acts.back(), probs);
  std::vector<T> dz;
  softmax_minus_target(acts.back(), probs, dz);
  backward_pass(layers, act, params, acts, dz, grad, grad_input);
  return loss;
}

}  // namespace

void check_soft_target(const std::vector<double>& soft, int classes) {
  if (static_cast<int>(soft.size()) != classes)
    throw std::invalid_argument("model: soft label has " +
                                std::to_string(soft.size()) +
                                " entries, expected " + std::to_string(classes));
  double sum = 0.0;
  for (double p : soft) {
    if (!(p >= -1e-12) || !std::isfinite(p))
      throw std::invalid_argument("model: soft label entry negative or non-finite");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("model: soft label does not sum to 1");
}

DifferentiableModel::DifferentiableModel(ModelSpec spec, int input_dim,
                                         int classes,
                                         std::optional<ImageShape> shape)
    : spec_(std::move(spec)),
      input_dim_(input_dim),
      classes_(classes),
      shape_(shape) {
  if (input_dim_ < 1)
    throw std::invalid_argument("model: input_dim must be >= 1");
  if (classes_ < 2) throw std::invalid_argument("model: classes must be >= 2");
  if (shape_ && 1LL * shape_->height * shape_->width * shape_->channels !=
                    input_dim_)
    throw std::invalid_argument("model: image shape does not match input_dim");

  std::size_t offset = 0;
  auto add_dense = [&](int in, int out) {
    LayerInfo l;
    l.kind = LayerInfo::Kind::dense;
    l.in = in;
    l.out = out;
    l.weight_offset = offset;
    l.weight_count = static_cast<std::size_t>(in) * out;
    l.bias_offset = offset + l.weight_count;
    l.bias_count = out;
    offset = l.bias_offset + l.bias_count;
    layers_.push_back(l);
  };
  auto add_act = [&](std::size_t width) {
    LayerInfo l;
    l.kind = LayerInfo::Kind::activation;
    l.in = static_cast<int>(width);
    l.out = static_cast<int>(width);
    layers_.push_back(l);
  };

  switch (spec_.arch) {
    case ModelSpec::Arch::linear:
      add_dense(input_dim_, classes_);
      break;
    case ModelSpec::Arch::mlp: {
      if (spec_.hidden.empty())
        throw std::invalid_argument("model: mlp needs at least one hidden width");
      int prev = input_dim_;
      for (int hsize : spec_.hidden) {
        if (hsize < 1)
          throw std::invalid_argument("model: hidden widths must be >= 1");
        add_dense(prev, hsize);
        add_act(hsize);
        prev = hsize;
      }
      add_dense(prev, classes_);
      break;
    }
    case ModelSpec::Arch::conv: {
      if (!shape_)
        throw std::invalid_argument("model: conv architecture needs an image shape");
      if (spec_.channels.empty())
        throw std::invalid_argument("model: conv needs at least one channel count");
      int cin = shape_->channels;
      const int h = shape_->height, w = shape_->width;
      for (int cout : spec_.channels) {
        if (cout < 1)
          throw std::invalid_argument("model: channel counts must be >= 1");
        LayerInfo l;
        l.kind = LayerInfo::Kind::conv3x3;
        l.in = cin;
        l.out = cout;
        l.height = h;
        l.width = w;
        l.weight_offset = offset;
        l.weight_count = static_cast<std::size_t>(cout) * cin * kConvK * kConvK;
        l.bias_offset = offset + l.weight_count;
        l.bias_count = cout;
        offset = l.bias_offset + l.bias_count;
        layers_.push_back(l);
        add_act(static_cast<std::size_t>(h) * w * cout);
        cin = cout;
      }
      LayerInfo pool;
      pool.kind = LayerInfo::Kind::global_avg_pool;
      pool.in = cin;
      pool.out = cin;
      pool.height = h;
      pool.width = w;
      layers_.push_back(pool);
      add_dense(cin, classes_);
      break;
    }
  }

  params_.assign(offset, 0.0);
  Rng rng = Rng::stream(spec_.init_seed, /*tag=*/0x696e6974ULL);  // "init"
  for (const LayerInfo& l : layers_) {
    if (l.weight_count == 0) continue;
    const int fan_in = l.kind == LayerInfo::Kind::conv3x3
                           ? l.in * static_cast<int>(kConvK * kConvK)
                           : l.in;
    const double sd = spec_.init_scale / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < l.weight_count; ++i)
      params_[l.weight_offset + i] = sd * rng.normal();
  }
}

std::vector<double> DifferentiableModel::forward(
    const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw std::invalid_argument("model: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(input_dim_));
  Acts<double> acts;
  forward_pass(layers_, spec_.activation, params_.data(), x, acts);
  return acts.back();
}

int DifferentiableModel::predict(const std::vector<double>& x) const {
  const std::vector<double> z = forward(x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double DifferentiableModel::loss(const std::vector<double>& x,
                                 const Target& target) const {
  const std::vector<double> z = forward(x);
  std::vector<double> probs;
  target_probs(target, classes_, probs);
  return ce_loss(z, probs);
}

std::vector<double> DifferentiableModel::grad_input(
    const std::vector<double>& x, const Target& target) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw std::invalid_argument("model: input dimension mismatch");
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> gin;
  example_loss_and_grad<double>(layers_, spec_.activation, params_.data(),
                                classes_, x, target, grad.data(), &gin);
  return gin;
}

std::vector<double> DifferentiableModel::grad_params(
    const std::vector<double>& x, const Target& target) const {
  std::vector<double> grad(params_.size(), 0.0);
  accumulate_grad_params(x, target, grad);
  return grad;
}

double DifferentiableModel::accumulate_grad_params(
    const std::vector<double>& x, const Target& target,
    std::vector<double>& grad) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw std::invalid_argument("model: input dimension mismatch");
  if (grad.size() != params_.size())
    throw std::invalid_argument("model: gradient buffer size mismatch");
  return example_loss_and_grad<double>(layers_, spec_.activation,
                                       params_.data(), classes_, x, target,
                                       grad.data(), nullptr);
}

std::vector<double> DifferentiableModel::hvp(const Batch& batch,
                                             const std::vector<double>& v) const {
  if (v.size() != params_.size())
    throw std::invalid_argument("model: hvp direction has wrong dimension");
  if (batch.empty()) throw std::invalid_argument("model: hvp needs a batch");

  std::vector<Dual> dual_params(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i)
    dual_params[i] = {params_[i], v[i]};

  std::vector<Dual> grad(params_.size(), Dual{});
  for (const Example& ex : batch)
    example_loss_and_grad<Dual>(layers_, spec_.activation, dual_params.data(),
                                classes_, ex.features, ex.target, grad.data(),
                                nullptr);

  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> out(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) out[i] = grad[i].t * inv;
  return out;
}

double batch_loss(const DifferentiableModel& m, const Batch& batch,
                  std::vector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double total = 0.0;
  if (grad) {
    grad->assign(m.param_count(), 0.0);
    for (const Example& ex : batch)
      total += m.accumulate_grad_params(ex.features, ex.target, *grad);
    const double inv = 1.0 / static_cast<double>(batch.size());
    kernels::scal(inv, grad->data(), grad->size());
    return total * inv;
  }
  for (const Example& ex : batch) total += m.loss(ex.features, ex.target);
  return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Checkpoint container. Layout:
//   bytes 0..7   magic "ARCKPT01"
//   u32 LE       JSON header length
//   ...          JSON header (spec fields, dims, shape)
//   u64 LE       parameter count
//   ...          parameters as little-endian IEEE-754 doubles
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'R', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

const char* arch_name(ModelSpec::Arch a) {
  switch (a) {
    case ModelSpec::Arch::linear: return "linear";
    case ModelSpec::Arch::mlp: return "mlp";
    case ModelSpec::Arch::conv: return "conv";
  }
  return "linear";
}

ModelSpec::Arch arch_from_name(const std::string& s) {
  if (s == "linear") return ModelSpec::Arch::linear;
  if (s == "mlp") return ModelSpec::Arch::mlp;
  if (s == "conv") return ModelSpec::Arch::conv;
  throw std::runtime_error("checkpoint: unknown architecture '" + s + "'");
}

}  // namespace

void DifferentiableModel::save(const std::string& path) const {
  nlohmann::json header;
  header["format"] = 1;
  header["arch"] = arch_name(spec_.arch);
  header["hidden"] = spec_.hidden;
  header["channels"] = spec_.channels;
  header["activation"] = spec_.activation == Activation::relu ? "relu" : "tanh";
  header["init_seed"] = spec_.init_seed;
  header["init_scale"] = spec_.init_scale;
  header["input_dim"] = input_dim_;
  header["classes"] = classes_;
  if (shape_)
    header["shape"] = {{"height", shape_->height},
                       {"width", shape_->width},
                       {"channels", shape_->channels}};
  else
    header["shape"] = nullptr;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_u64(out, params_.size());
  for (double p : params_) put_u64(out, std::bit_cast<std::uint64_t>(p));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

DifferentiableModel DifferentiableModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t header_len = get_u32(in);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (!in) throw std::runtime_error("checkpoint: truncated header in " + path);

  nlohmann::json header = nlohmann::json::parse(text);
  ModelSpec spec;
  spec.arch = arch_from_name(header.at("arch").get<std::string>());
  spec.hidden = header.at("hidden").get<std::vector<int>>();
  spec.channels = header.at("channels").get<std::vector<int>>();
  spec.activation = header.at("activation").get<std::string>() == "tanh"
                        ? Activation::tanh
                        : Activation::relu;
  spec.init_seed = header.at("init_seed").get<std::uint64_t>();
  spec.init_scale = header.at("init_scale").get<double>();
  const int input_dim = header.at("input_dim").get<int>();
  const int classes = header.at("classes").get<int>();
  std::optional<ImageShape> shape;
  if (!header.at("shape").is_null()) {
    ImageShape s;
    s.height = header["shape"].at("height").get<int>();
    s.width = header["shape"].at("width").get<int>();
    s.channels = header["shape"].at("channels").get<int>();
    shape = s;
  }

  DifferentiableModel model(spec, input_dim, classes, shape);
  const std::uint64_t count = get_u64(in);
  if (count != model.params_.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  for (std::uint64_t i = 0; i < count; ++i)
    model.params_[i] = std::bit_cast<double>(get_u64(in));
  if (!in) throw std::runtime_error("checkpoint: truncated parameters in " + path);
  return model;
}

}  // namespace augrisk
