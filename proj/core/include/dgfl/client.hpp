#pragma once

#include <cstddef>
#include <vector>

#include "dgfl/gin.hpp"

namespace dgfl {

/// A gradient delivered to a receiver during the current round.
struct GradientMessage {
  int sender = -1;
  GradientVector gradient;
};

/// One peer: its model, optimizer, data shard and per-round protocol state.
struct ClientState {
  int id = 0;
  GinModel model;
  AdamState opt;
  std::vector<std::size_t> shard;
  /// N_i; all other clients in a fully connected topology.
  std::vector<int> neighbors;
  /// S_i; cleared at the start of every round.
  std::vector<GradientMessage> senders;
  /// Parameters at the start of the round's local training.
  std::vector<double> w_before;
  GradientVector current_gradient;
};

}  // namespace dgfl
