// SPDX-License-Identifier: Apache-2.0
#include "fedagg/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fedagg/error.hpp"

namespace fedagg {

namespace {

struct Layer {
  std::size_t in;
  std::size_t out;
  std::size_t kernel;  // offset of the first kernel entry
  std::size_t bias;
};

std::vector<Layer> layout(const ModelSpec& spec) {
  std::vector<Layer> layers;
  std::size_t in = spec.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    layers.push_back({in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  };
  for (auto width : spec.hidden_dims) {
    add(width);
  }
  add(spec.num_classes);
  return layers;
}

void check_inputs(const ParamVector& params, const ModelSpec& spec, const Matrix& features,
                  const char* context) {
  spec.validate();
  if (params.size() != spec.parameter_count() || params.manifest() != *spec.manifest()) {
    throw ShapeError(fmt::format("{}: parameters do not match the model layout", context));
  }
  if (features.cols() != spec.input_dim) {
    throw ShapeError(fmt::format("{}: feature width {} but model expects {}", context,
                                 features.cols(), spec.input_dim));
  }
}

// Per-sample forward/backward workspace; z[l] and a[l] are the pre- and
// post-activation outputs of layer l.
class Network {
 public:
  Network(const ModelSpec& spec, std::span<const double> params)
      : spec_(spec), params_(params), layers_(layout(spec)) {
    z_.resize(layers_.size());
    a_.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      z_[l].resize(layers_[l].out);
      a_[l].resize(layers_[l].out);
    }
  }

  /// Returns the logits of `x`.
  std::span<const double> forward(std::span<const double> x) {
    input_ = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      std::span<const double> in = l == 0 ? x : std::span<const double>(a_[l - 1]);
      auto& z = z_[l];
      for (std::size_t j = 0; j < layer.out; ++j) {
        z[j] = params_[layer.bias + j];
      }
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double xi = in[i];
        const double* w = params_.data() + layer.kernel + i * layer.out;
        for (std::size_t j = 0; j < layer.out; ++j) {
          z[j] += xi * w[j];
        }
      }
      const bool hidden = l + 1 < layers_.size();
      for (std::size_t j = 0; j < layer.out; ++j) {
        a_[l][j] = hidden ? activate(z[j]) : z[j];
      }
    }
    return a_.back();
  }

  /// Accumulates d(loss)/d(params) * scale for the last forwarded sample,
  /// given d(loss)/d(logits) in `delta` (overwritten).
  void backward(std::vector<double> delta, double scale, std::span<double> grad) {
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Layer& layer = layers_[l];
      std::span<const double> in = l == 0 ? input_ : std::span<const double>(a_[l - 1]);
      for (std::size_t j = 0; j < layer.out; ++j) {
        grad[layer.bias + j] += scale * delta[j];
      }
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double xi = scale * in[i];
        double* g = grad.data() + layer.kernel + i * layer.out;
        for (std::size_t j = 0; j < layer.out; ++j) {
          g[j] += xi * delta[j];
        }
      }
      if (l == 0) {
        break;
      }
      std::vector<double> prev(layer.in, 0.0);
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double* w = params_.data() + layer.kernel + i * layer.out;
        double sum = 0.0;
        for (std::size_t j = 0; j < layer.out; ++j) {
          sum += w[j] * delta[j];
        }
        prev[i] = sum * activation_derivative(z_[l - 1][i], a_[l - 1][i]);
      }
      delta = std::move(prev);
    }
  }

 private:
  double activate(double z) const {
    return spec_.activation == Activation::kRelu ? std::max(z, 0.0) : std::tanh(z);
  }
  double activation_derivative(double z, double a) const {
    return spec_.activation == Activation::kRelu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
  }

  const ModelSpec& spec_;
  std::span<const double> params_;
  std::vector<Layer> layers_;
  std::span<const double> input_;
  std::vector<std::vector<double>> z_;
  std::vector<std::vector<double>> a_;
};

// Writes softmax(logits) into probs and returns log-sum-exp.
double softmax(std::span<const double> logits, std::span<double> probs) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    probs[k] = std::exp(logits[k] - peak);
    sum += probs[k];
  }
  for (auto& p : probs) {
    p /= sum;
  }
  return peak + std::log(sum);
}

void check_labels(std::span<const int> labels, std::size_t num_classes, const char* context) {
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= num_classes) {
      throw ArgumentError(fmt::format("{}: label {} at row {} outside [0, {})", context, labels[r],
                                      r, num_classes));
    }
  }
}

// Mean loss over `rows`; adds the mean gradient into `grad` when non-empty.
double batch_loss(const ModelSpec& spec, std::span<const double> params, const Matrix& features,
                  std::span<const int> labels, std::span<const std::size_t> rows,
                  std::span<double> grad) {
  Network net(spec, params);
  std::vector<double> probs(spec.num_classes);
  const double scale = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (auto r : rows) {
    const auto logits = net.forward(features.row(r));
    const double lse = softmax(logits, probs);
    const auto y = static_cast<std::size_t>(labels[r]);
    loss += lse - logits[y];
    if (!grad.empty()) {
      std::vector<double> delta(probs);
      delta[y] -= 1.0;
      net.backward(std::move(delta), scale, grad);
    }
  }
  return loss * scale;
}

}  // namespace

std::string_view to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  return std::nullopt;
}

void ModelSpec::validate() const {
  if (input_dim == 0) {
    throw ArgumentError("model input_dim must be >= 1");
  }
  if (num_classes < 2) {
    throw ArgumentError(fmt::format("model num_classes must be >= 2, got {}", num_classes));
  }
  if (std::find(hidden_dims.begin(), hidden_dims.end(), 0u) != hidden_dims.end()) {
    throw ArgumentError("model hidden layer widths must be >= 1");
  }
}

std::size_t ModelSpec::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layout(*this)) {
    count += layer.in * layer.out + layer.out;
  }
  return count;
}

ManifestPtr ModelSpec::manifest() const {
  validate();
  std::vector<TensorShape> entries;
  const auto layers = layout(*this);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    entries.push_back({fmt::format("dense_{}/kernel", l), {layers[l].in, layers[l].out}});
    entries.push_back({fmt::format("dense_{}/bias", l), {layers[l].out}});
  }
  return std::make_shared<const ShapeManifest>(std::move(entries));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError(fmt::format("learning_rate must be > 0, got {}", learning_rate));
  }
  if (batch_size == 0) {
    throw ArgumentError("batch_size must be >= 1");
  }
  if (local_epochs == 0) {
    throw ArgumentError("local_epochs must be >= 1");
  }
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  const ManifestPtr manifest = spec.manifest();
  std::vector<double> values(manifest->total_size(), 0.0);
  std::mt19937_64 rng(seed);
  for (const auto& layer : layout(spec)) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
      values[layer.kernel + k] = dist(rng);
    }
  }
  return ParamVector(manifest, std::move(values));
}

Matrix forward_logits(const ParamVector& params, const ModelSpec& spec, const Matrix& features) {
  check_inputs(params, spec, features, "forward_logits");
  Network net(spec, params.values());
  Matrix logits(features.rows(), spec.num_classes);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto out = net.forward(features.row(r));
    std::copy(out.begin(), out.end(), logits.row(r).begin());
  }
  return logits;
}

Matrix predict_proba(const ParamVector& params, const ModelSpec& spec, const Matrix& features) {
  Matrix probs = forward_logits(params, spec, features);
  std::vector<double> logits(spec.num_classes);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    std::copy(row.begin(), row.end(), logits.begin());
    softmax(logits, row);
  }
  return probs;
}

LossAndGradient loss_and_gradient(const ParamVector& params, const ModelSpec& spec,
                                  const Matrix& features, std::span<const int> labels) {
  check_inputs(params, spec, features, "loss_and_gradient");
  if (labels.size() != features.rows()) {
    throw ShapeError("loss_and_gradient: label count differs from feature rows");
  }
  if (labels.empty()) {
    throw ArgumentError("loss_and_gradient: empty batch");
  }
  check_labels(labels, spec.num_classes, "loss_and_gradient");
  std::vector<std::size_t> rows(labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> grad(params.size(), 0.0);
  const double loss = batch_loss(spec, params.values(), features, labels, rows, grad);
  return {loss, ParamVector(params.manifest_ptr(), std::move(grad))};
}

ParamVector sgd_train(const ParamVector& params, const ModelSpec& spec, const Dataset& dataset,
                      const TrainConfig& config) {
  if (dataset.empty()) {
    throw ArgumentError("sgd_train: empty dataset");
  }
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw ArgumentError(fmt::format("sgd_train: learning_rate must be >= 0, got {}",
                                    config.learning_rate));
  }
  if (config.batch_size == 0 || config.local_epochs == 0) {
    throw ArgumentError("sgd_train: batch_size and local_epochs must be >= 1");
  }
  check_inputs(params, spec, dataset.features, "sgd_train");
  check_labels(dataset.labels, spec.num_classes, "sgd_train");

  std::vector<double> w(params.values().begin(), params.values().end());
  std::vector<double> grad(w.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);

  for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      batch_loss(spec, w, dataset.features, dataset.labels,
                 std::span<const std::size_t>(order).subspan(start, stop - start), grad);
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= config.learning_rate * grad[i];
      }
    }
  }
  return ParamVector(params.manifest_ptr(), std::move(w));
}

EvalMetrics evaluate(const ParamVector& params, const ModelSpec& spec, const Dataset& dataset) {
  if (dataset.empty()) {
    throw ArgumentError("evaluate: empty dataset");
  }
  check_inputs(params, spec, dataset.features, "evaluate");
  check_labels(dataset.labels, spec.num_classes, "evaluate");

  Network net(spec, params.values());
  std::vector<double> probs(spec.num_classes);
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    const auto logits = net.forward(dataset.features.row(r));
    std::size_t predicted = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
      if (logits[k] > logits[predicted]) {
        predicted = k;
      }
    }
    const auto y = static_cast<std::size_t>(dataset.labels[r]);
    if (predicted == y) {
      ++correct;
    }
    loss += softmax(logits, probs) - logits[y];
  }
  const auto n = static_cast<double>(dataset.size());
  return {static_cast<double>(correct) / n, loss / n};
}

}  // namespace fedagg
