#include "dgfl/gin.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dgfl/errors.hpp"

namespace dgfl {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using ConstVec = Eigen::Map<const Eigen::RowVectorXd>;
using MutVec = Eigen::Map<Eigen::RowVectorXd>;

/// out = (A + I) in, for an undirected edge list.
void neighbor_sum(const std::vector<Edge>& edges, const RowMat& in, RowMat& out) {
  out = in;
  for (const auto& [u, v] : edges) {
    out.row(u) += in.row(v);
    out.row(v) += in.row(u);
  }
}

std::vector<double> to_vector(const RowMat& m) { return {m.data(), m.data() + m.size()}; }

/// log-sum-exp softmax; returns (cross-entropy, probabilities).
double softmax_cross_entropy(const std::vector<double>& logits, int label, std::vector<double>& probs) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) total += (probs[c] = std::exp(logits[c] - peak));
  for (double& p : probs) p /= total;
  return peak + std::log(total) - logits[static_cast<std::size_t>(label)];
}

/// Accumulates d(loss)/d(params) of one graph into grad, given d(loss)/d(logits).
void backward(const GinModel& model, const Graph& graph, const ActivationCache& cache,
              const std::vector<double>& dlogits, std::span<double> grad) {
  const GinDims& dims = model.dims();
  const auto n = static_cast<Eigen::Index>(graph.node_count);
  const auto hidden = static_cast<Eigen::Index>(dims.hidden);
  const auto classes = static_cast<Eigen::Index>(dims.num_classes);
  const double* p = model.params().data();

  const ConstVec dlog(dlogits.data(), classes);
  const ConstVec readout(cache.readout.data(), hidden);
  MutMap(grad.data() + model.classifier_weight_offset(), hidden, classes) += readout.transpose() * dlog;
  MutVec(grad.data() + model.classifier_bias_offset(), classes) += dlog;

  const ConstMap classifier(p + model.classifier_weight_offset(), hidden, classes);
  const Eigen::RowVectorXd dreadout = dlog * classifier.transpose();
  RowMat dh = dreadout.replicate(n, 1) / static_cast<double>(n);

  RowMat ds;
  for (std::size_t l = dims.layers; l-- > 0;) {
    const auto d_in = static_cast<Eigen::Index>(dims.layer_input(l));
    const ConstMap z(cache.preactivation[l].data(), n, hidden);
    const ConstMap s(cache.aggregated[l].data(), n, d_in);
    const RowMat dz = dh.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    MutMap(grad.data() + model.weight_offset(l), d_in, hidden) += s.transpose() * dz;
    MutVec(grad.data() + model.bias_offset(l), hidden) += dz.colwise().sum();
    if (l == 0) break;
    const ConstMap w(p + model.weight_offset(l), d_in, hidden);
    ds = dz * w.transpose();
    neighbor_sum(graph.edges, ds, dh);
  }
}

}  // namespace

std::size_t GinDims::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < layers; ++l) count += layer_input(l) * hidden + hidden;
  return count + hidden * num_classes + num_classes;
}

GinModel::GinModel(GinDims dims) : dims_(dims), params_(dims.parameter_count(), 0.0) {}

GinModel GinModel::initialize(GinDims dims, std::uint64_t seed) {
  GinModel model(dims);
  Rng rng(seed);
  const auto fill = [&](std::size_t offset, std::size_t d_in, std::size_t d_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < d_in * d_out; ++k) model.params_[offset + k] = dist(rng);
  };
  for (std::size_t l = 0; l < dims.layers; ++l) fill(model.weight_offset(l), dims.layer_input(l), dims.hidden);
  fill(model.classifier_weight_offset(), dims.hidden, dims.num_classes);
  return model;
}

GinModel GinModel::unflatten(GinDims dims, std::vector<double> params) {
  if (params.size() != dims.parameter_count())
    throw ShapeError("parameter vector has " + std::to_string(params.size()) + " entries, model needs " +
                     std::to_string(dims.parameter_count()));
  GinModel model;
  model.dims_ = dims;
  model.params_ = std::move(params);
  return model;
}

std::size_t GinModel::weight_offset(std::size_t layer) const {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer; ++l) offset += dims_.layer_input(l) * dims_.hidden + dims_.hidden;
  return offset;
}

std::size_t GinModel::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + dims_.layer_input(layer) * dims_.hidden;
}

std::size_t GinModel::classifier_weight_offset() const { return weight_offset(dims_.layers); }

std::size_t GinModel::classifier_bias_offset() const {
  return classifier_weight_offset() + dims_.hidden * dims_.num_classes;
}

ForwardResult forward(const GinModel& model, const Graph& graph) {
  const GinDims& dims = model.dims();
  if (graph.feature_dim != dims.feature_dim)
    throw ShapeError("graph feature_dim " + std::to_string(graph.feature_dim) + " != model feature_dim " +
                     std::to_string(dims.feature_dim));
  if (graph.features.size() != graph.node_count * graph.feature_dim || graph.node_count == 0)
    throw ShapeError("graph feature matrix does not match node_count");

  const auto n = static_cast<Eigen::Index>(graph.node_count);
  const auto hidden = static_cast<Eigen::Index>(dims.hidden);
  const double* p = model.params().data();

  ForwardResult result;
  ActivationCache& cache = result.cache;
  cache.aggregated.reserve(dims.layers);
  cache.preactivation.reserve(dims.layers);

  RowMat h = ConstMap(graph.features.data(), n, static_cast<Eigen::Index>(dims.feature_dim));
  RowMat s;
  for (std::size_t l = 0; l < dims.layers; ++l) {
    const auto d_in = static_cast<Eigen::Index>(dims.layer_input(l));
    neighbor_sum(graph.edges, h, s);
    const ConstMap w(p + model.weight_offset(l), d_in, hidden);
    const ConstVec b(p + model.bias_offset(l), hidden);
    RowMat z = s * w;
    z.rowwise() += b;
    cache.aggregated.push_back(to_vector(s));
    h = z.cwiseMax(0.0);
    cache.preactivation.push_back(to_vector(z));
  }

  const Eigen::RowVectorXd readout = h.colwise().mean();
  cache.readout.assign(readout.data(), readout.data() + readout.size());

  const auto classes = static_cast<Eigen::Index>(dims.num_classes);
  const ConstMap classifier(p + model.classifier_weight_offset(), hidden, classes);
  const Eigen::RowVectorXd logits =
      readout * classifier + ConstVec(p + model.classifier_bias_offset(), classes);
  result.logits.assign(logits.data(), logits.data() + logits.size());
  return result;
}

double GradientVector::norm() const {
  return std::sqrt(std::inner_product(values.begin(), values.end(), values.begin(), 0.0));
}

LossAndGrad loss_and_grad(const GinModel& model, std::span<const Graph* const> batch) {
  if (batch.empty()) throw InputError("loss_and_grad: empty batch");
  LossAndGrad out;
  out.grad.values.assign(model.dims().parameter_count(), 0.0);
  std::vector<double> probs;
  double total = 0.0;
  for (const Graph* graph : batch) {
    if (graph->label < 0 || static_cast<std::size_t>(graph->label) >= model.dims().num_classes)
      throw ShapeError("graph label outside model classes");
    const ForwardResult fr = forward(model, *graph);
    total += softmax_cross_entropy(fr.logits, graph->label, probs);
    probs[static_cast<std::size_t>(graph->label)] -= 1.0;
    backward(model, *graph, fr.cache, probs, out.grad.values);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  out.mean_loss = total * scale;
  if (!std::isfinite(out.mean_loss)) throw NumericError("non-finite loss");
  for (double& g : out.grad.values) g *= scale;
  return out;
}

LossAndGrad loss_and_grad(const GinModel& model, std::span<const Graph> batch) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(batch.size());
  for (const Graph& g : batch) ptrs.push_back(&g);
  return loss_and_grad(model, ptrs);
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state) {
  if (params.size() != grad.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw ShapeError("adam_step: length mismatch");
  const AdamHyper& h = state.hyper;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grad[k] + h.weight_decay * params[k];
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

int predict(const GinModel& model, const Graph& graph) {
  const auto logits = forward(model, graph).logits;
  // max_element returns the first maximum, i.e. the lowest class on ties.
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double evaluate(const GinModel& model, std::span<const Graph* const> test) {
  if (test.empty()) throw InputError("evaluate: empty test set");
  std::size_t correct = 0;
  for (const Graph* g : test) correct += predict(model, *g) == g->label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double mean_loss(const GinModel& model, std::span<const Graph* const> graphs) {
  if (graphs.empty()) throw InputError("mean_loss: empty graph list");
  std::vector<double> probs;
  double total = 0.0;
  for (const Graph* g : graphs) total += softmax_cross_entropy(forward(model, *g).logits, g->label, probs);
  return total / static_cast<double>(graphs.size());
}

}  // namespace dgfl
