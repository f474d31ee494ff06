// Copyright (C) 2026 the augrisk authors
// SPDX-License-Identifier: Apache-2.0
//
// Small differentiable classifiers with the full derivative surface the
// attack/stress/influence estimators need: cross-entropy loss (hard or soft
// targets), gradients w.r.t. inputs and parameters, and Hessian-vector
// products computed exactly by forward-over-reverse differentiation.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "augrisk/dataset.hpp"

namespace augrisk {

enum class Activation { relu, tanh };

struct ModelSpec {
  enum class Arch { linear, mlp, conv };

  Arch arch = Arch::linear;
  std::vector<int> hidden;    // mlp: hidden layer widths, all >= 1
  std::vector<int> channels;  // conv: 3x3 block output channels, all >= 1
  Activation activation = Activation::relu;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;
};

/// A hard class id or a probability vector over the classes.
using Target = std::variant<int, std::vector<double>>;

/// Features plus target; the unit every batch API works on.
struct Example {
  std::vector<double> features;
  Target target;
};

using Batch = std::vector<Example>;

/// Parameter packing of one compiled layer. Dense layers pack the row-major
/// weight matrix followed by the bias; conv layers pack
/// weight[c_out][c_in][3][3] followed by the bias.
struct LayerInfo {
  enum class Kind { dense, conv3x3, activation, global_avg_pool };
  Kind kind = Kind::dense;
  int in = 0;   // dense input width / conv input channels
  int out = 0;  // dense output width / conv output channels
  int height = 0, width = 0;  // conv spatial dims (preserved by padding)
  std::size_t weight_offset = 0, weight_count = 0;
  std::size_t bias_offset = 0, bias_count = 0;
};

class DifferentiableModel {
 public:
  /// Compiles the spec for the given input dimension and class count and
  /// initializes parameters from spec.init_seed. Conv models additionally
  /// need the image shape of the inputs.
  DifferentiableModel(ModelSpec spec, int input_dim, int classes,
                      std::optional<ImageShape> shape = std::nullopt);

  const ModelSpec& spec() const { return spec_; }
  int input_dim() const { return input_dim_; }
  int classes() const { return classes_; }
  const std::optional<ImageShape>& input_shape() const { return shape_; }
  const std::vector<LayerInfo>& layout() const { return layers_; }

  std::size_t param_count() const { return params_.size(); }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& params() { return params_; }

  /// Logits; length equals classes(). Throws on dimension mismatch.
  std::vector<double> forward(const std::vector<double>& x) const;

  /// Argmax of the logits; ties break toward the lowest class index.
  int predict(const std::vector<double>& x) const;

  /// Cross-entropy of softmax(logits) against the target.
  double loss(const std::vector<double>& x, const Target& target) const;

  std::vector<double> grad_input(const std::vector<double>& x,
                                 const Target& target) const;

  std::vector<double> grad_params(const std::vector<double>& x,
                                  const Target& target) const;

  /// grad += dLoss/dparams at (x, target); returns the loss value.
  double accumulate_grad_params(const std::vector<double>& x,
                                const Target& target,
                                std::vector<double>& grad) const;

  /// H v, where H is the Hessian of the mean loss over the batch
  /// (data term only; no weight-decay contribution).
  std::vector<double> hvp(const Batch& batch,
                          const std::vector<double>& v) const;

  /// Binary checkpoint: magic, JSON header with the spec fields, then the
  /// flat parameter vector as little-endian IEEE-754 doubles.
  void save(const std::string& path) const;
  static DifferentiableModel load(const std::string& path);

 private:
  ModelSpec spec_;
  int input_dim_ = 0;
  int classes_ = 0;
  std::optional<ImageShape> shape_;
  std::vector<LayerInfo> layers_;
  std::vector<double> params_;
};

/// Mean loss over the batch; when grad is non-null it receives the mean
/// parameter gradient (data term only).
double batch_loss(const DifferentiableModel& m, const Batch& batch,
                  std::vector<double>* grad = nullptr);

/// Validates a soft-label vector: length, non-negativity, sums to 1
/// within 1e-9. Throws std::invalid_argument otherwise.
void check_soft_target(const std::vector<double>& soft, int classes);

}  // namespace augrisk
