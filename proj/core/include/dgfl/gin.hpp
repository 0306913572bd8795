#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dgfl/rng.hpp"
#include "dgfl/tudata.hpp"

namespace dgfl {

struct GinDims {
  std::size_t feature_dim = 0;
  std::size_t hidden = 64;
  std::size_t layers = 3;
  std::size_t num_classes = 2;

  std::size_t layer_input(std::size_t layer) const { return layer == 0 ? feature_dim : hidden; }
  std::size_t parameter_count() const;

  friend bool operator==(const GinDims&, const GinDims&) = default;
};

/// GIN with eps = 0, one linear map + ReLU per layer, mean readout and a
/// linear classifier. Parameters live in one flat vector in canonical order:
/// for each layer its weight (d_in x d_out, row-major) then bias, then the
/// classifier weight (hidden x classes) and bias.
class GinModel {
 public:
  GinModel() = default;
  /// All-zero parameters.
  explicit GinModel(GinDims dims);

  /// Glorot-uniform weights in +-sqrt(6 / (d_in + d_out)), zero biases.
  static GinModel initialize(GinDims dims, std::uint64_t seed);
  /// Throws ShapeError when the vector length does not match dims.
  static GinModel unflatten(GinDims dims, std::vector<double> params);

  const GinDims& dims() const noexcept { return dims_; }
  std::span<const double> flatten() const noexcept { return params_; }
  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }

  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;
  std::size_t classifier_weight_offset() const;
  std::size_t classifier_bias_offset() const;

 private:
  GinDims dims_;
  std::vector<double> params_;
};

/// Activations kept by forward() for backpropagation, one entry per layer.
struct ActivationCache {
  /// (A + I) H_l, node_count x d_in, row-major.
  std::vector<std::vector<double>> aggregated;
  /// Pre-activations, node_count x hidden.
  std::vector<std::vector<double>> preactivation;
  /// Mean-pooled final node representation.
  std::vector<double> readout;
};

struct ForwardResult {
  std::vector<double> logits;
  ActivationCache cache;
};

ForwardResult forward(const GinModel& model, const Graph& graph);

/// Model gradient (or pseudo-gradient) in canonical parameter order.
struct GradientVector {
  std::vector<double> values;
  int source_round = 0;
  int source_client = -1;

  double norm() const;
  friend bool operator==(const GradientVector&, const GradientVector&) = default;
};

struct LossAndGrad {
  double mean_loss = 0.0;
  GradientVector grad;
};

/// Mean softmax cross-entropy over the batch and its analytic gradient.
LossAndGrad loss_and_grad(const GinModel& model, std::span<const Graph* const> batch);
LossAndGrad loss_and_grad(const GinModel& model, std::span<const Graph> batch);

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  AdamHyper hyper;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamHyper h)
      : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0), hyper(h) {}
};

/// Bias-corrected Adam with L2-coupled weight decay (grad += wd * param before the moments).
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state);

/// Predicted class: argmax of logits, ties to the lowest index.
int predict(const GinModel& model, const Graph& graph);

/// Fraction of graphs whose predicted class equals the label.
double evaluate(const GinModel& model, std::span<const Graph* const> test);

/// Mean cross-entropy without gradient.
double mean_loss(const GinModel& model, std::span<const Graph* const> graphs);

}  // namespace dgfl
