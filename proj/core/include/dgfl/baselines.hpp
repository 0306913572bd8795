#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dgfl/client.hpp"
#include "dgfl/round_log.hpp"
#include "dgfl/training.hpp"

namespace dgfl {

/// Central server of the client-server baselines.
struct ServerState {
  std::vector<double> global_params;
  int round = 0;
  /// |D_i| per client, in client-id order.
  std::vector<std::size_t> client_sizes;
};

/// |D_i| / |D_all| per client.
std::vector<double> fedavg_weights(std::span<const std::size_t> sizes);

/// Size-weighted mean of client parameter vectors, reduced in client-id order.
std::vector<double> fedavg_aggregate(std::span<const std::vector<double>> client_params,
                                     std::span<const std::size_t> sizes);

struct ProximalTerm {
  double loss = 0.0;
  std::vector<double> grad_adjustment;
};

/// Adds (mu/2)||w - w_global||^2 to base_loss; the adjustment is mu (w - w_global).
ProximalTerm fedprox_local_objective(std::span<const double> w, std::span<const double> w_global,
                                     double base_loss, double mu);

struct CsRoundOptions {
  TrainOptions train;
  /// 0 for FedAvg.
  double prox_mu = 0.0;
  std::uint64_t master_seed = 0;
  bool evaluate = true;
  std::size_t threads = 1;
};

/// Broadcast, local training on every client, size-weighted aggregation. All clients
/// report the global model's accuracy on the shared test set.
RoundLog run_cs_round(ServerState& server, std::vector<ClientState>& clients, std::span<const Graph> graphs,
                      std::span<const Graph* const> test, int round, const CsRoundOptions& options);

}  // namespace dgfl
