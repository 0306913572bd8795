#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dgfl/client.hpp"
#include "dgfl/confidence.hpp"
#include "dgfl/round_log.hpp"
#include "dgfl/training.hpp"

namespace dgfl {

/// How the aggregated pseudo-gradient becomes parameters.
enum class UpdateRule {
  /// w = w_before - g
  kDirect,
  /// w = Adam step from w_before with g as the gradient
  kAdam,
};

struct ProtocolOptions {
  TrainOptions train;
  ConfidenceSettings confidence;
  UpdateRule update_rule = UpdateRule::kDirect;
  std::uint64_t master_seed = 0;
  bool evaluate = true;
  /// Fill RoundLog::pairwise_confidence (n^2 confidence evaluations per round).
  bool record_pairwise = false;
  std::size_t threads = 1;
};

/// One client per shard, all starting from `initial`. With fully_connected, every
/// client's neighbor set is all other clients and at least two clients are required.
std::vector<ClientState> init_clients(const std::vector<std::vector<std::size_t>>& shards, const GinModel& initial,
                                      const AdamHyper& hyper, bool fully_connected);

/// Uniform draw from the client's neighbor set.
int sample_receiver(const ClientState& client, Rng& rng);

/// One synchronous round: every client trains and sends its pseudo-gradient to a
/// random neighbor; after the barrier every client filters its senders by mean
/// confidence, aggregates and applies the result.
RoundLog run_round(std::vector<ClientState>& clients, std::span<const Graph> graphs,
                   std::span<const Graph* const> test, int round, const ProtocolOptions& options);

}  // namespace dgfl
