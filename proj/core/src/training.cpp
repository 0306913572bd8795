#include "dgfl/training.hpp"

#include <algorithm>
#include <string>

#include "dgfl/baselines.hpp"
#include "dgfl/errors.hpp"

namespace dgfl {

LocalTrainResult local_train(ClientState& client, std::span<const Graph> graphs, const TrainOptions& options,
                             Rng& rng) {
  if (client.shard.empty()) throw StateError("client " + std::to_string(client.id) + " has an empty shard");
  if (options.batch_size == 0) throw StateError("batch_size must be positive");

  std::vector<double>& params = client.model.params();
  client.w_before = params;

  std::vector<std::size_t> order;
  std::vector<std::size_t> members;
  std::vector<const Graph*> batch;
  LocalTrainResult result;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    order = client.shard;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      members.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      std::sort(members.begin(), members.end());
      batch.clear();
      for (std::size_t idx : members) batch.push_back(&graphs[idx]);

      LossAndGrad lg = loss_and_grad(client.model, batch);
      double loss = lg.mean_loss;
      if (options.prox_anchor != nullptr && options.prox_mu != 0.0) {
        const ProximalTerm prox = fedprox_local_objective(params, *options.prox_anchor, loss, options.prox_mu);
        loss = prox.loss;
        for (std::size_t k = 0; k < params.size(); ++k) lg.grad.values[k] += prox.grad_adjustment[k];
      }
      adam_step(params, lg.grad.values, client.opt);
      epoch_loss += loss * static_cast<double>(batch.size());
    }
    result.loss = epoch_loss / static_cast<double>(order.size());
  }

  if (options.epochs == 0) {
    batch.clear();
    for (std::size_t idx : client.shard) batch.push_back(&graphs[idx]);
    result.loss = mean_loss(client.model, batch);
  }

  result.gradient.values.resize(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) result.gradient.values[k] = client.w_before[k] - params[k];
  result.gradient.source_client = client.id;
  client.current_gradient = result.gradient;
  return result;
}

void apply_gradient(ClientState& client, const GradientVector& g) {
  std::vector<double>& params = client.model.params();
  if (g.values.size() != params.size() || client.w_before.size() != params.size())
    throw ShapeError("apply_gradient: gradient has " + std::to_string(g.values.size()) +
                     " entries, model has " + std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) params[k] = client.w_before[k] - g.values[k];
}

}  // namespace dgfl
