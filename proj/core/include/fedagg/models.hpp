// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "fedagg/data.hpp"
#include "fedagg/matrix.hpp"
#include "fedagg/params.hpp"

namespace fedagg {

enum class Activation { kRelu, kTanh };

std::string_view to_string(Activation activation);
std::optional<Activation> parse_activation(std::string_view name);

/// Fully connected softmax classifier. No hidden layers gives multinomial
/// logistic regression.
struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  Activation activation = Activation::kRelu;
  std::size_t num_classes = 2;

  void validate() const;
  std::size_t parameter_count() const;
  /// Tensors "dense_<k>/kernel" (in x out, row-major) and "dense_<k>/bias" per layer.
  ManifestPtr manifest() const;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  std::size_t local_epochs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Kernels uniform in +-1/sqrt(fan_in), biases zero.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

Matrix forward_logits(const ParamVector& params, const ModelSpec& spec, const Matrix& features);
Matrix predict_proba(const ParamVector& params, const ModelSpec& spec, const Matrix& features);

struct LossAndGradient {
  double loss;
  ParamVector gradient;
};

/// Mean cross-entropy and its exact gradient.
LossAndGradient loss_and_gradient(const ParamVector& params, const ModelSpec& spec,
                                  const Matrix& features, std::span<const int> labels);

/// Mini-batch SGD with a per-epoch shuffle drawn from `config.seed`. A zero
/// learning rate is accepted and returns the input unchanged.
ParamVector sgd_train(const ParamVector& params, const ModelSpec& spec, const Dataset& dataset,
                      const TrainConfig& config);

struct EvalMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Argmax accuracy (ties go to the lowest class index) and mean cross-entropy.
EvalMetrics evaluate(const ParamVector& params, const ModelSpec& spec, const Dataset& dataset);

}  // namespace fedagg
