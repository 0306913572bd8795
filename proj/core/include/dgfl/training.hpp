#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgfl/client.hpp"
#include "dgfl/rng.hpp"

namespace dgfl {

struct TrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 128;
  /// FedProx proximal coefficient; ignored when prox_anchor is null.
  double prox_mu = 0.0;
  const std::vector<double>* prox_anchor = nullptr;
};

struct LocalTrainResult {
  /// Pseudo-gradient w_before - w_after.
  GradientVector gradient;
  /// Sample-weighted mean batch loss of the last epoch (shard loss when epochs == 0).
  double loss = 0.0;
};

/// Runs `epochs` passes of mini-batch Adam over the client's shard. The shard is
/// reshuffled each epoch; batch members are processed in ascending index order.
/// Leaves the client at w_after with w_before recorded for apply_gradient().
LocalTrainResult local_train(ClientState& client, std::span<const Graph> graphs, const TrainOptions& options,
                             Rng& rng);

/// Sets parameters to w_before - g. Optimizer moments are untouched.
void apply_gradient(ClientState& client, const GradientVector& g);

}  // namespace dgfl
