#include "dgfl/baselines.hpp"

#include <chrono>
#include <numeric>
#include <string>

#include "dgfl/errors.hpp"
#include "dgfl/parallel.hpp"

namespace dgfl {

std::vector<double> fedavg_weights(std::span<const std::size_t> sizes) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total == 0) throw InputError("fedavg: client sizes must be positive");
  std::vector<double> weights;
  weights.reserve(sizes.size());
  for (std::size_t s : sizes) {
    if (s == 0) throw InputError("fedavg: client sizes must be positive");
    weights.push_back(static_cast<double>(s) / static_cast<double>(total));
  }
  return weights;
}

std::vector<double> fedavg_aggregate(std::span<const std::vector<double>> client_params,
                                     std::span<const std::size_t> sizes) {
  if (client_params.empty()) throw InputError("fedavg: no client parameters");
  if (client_params.size() != sizes.size()) throw ShapeError("fedavg: one size per client required");
  const std::size_t length = client_params.front().size();
  for (const auto& p : client_params) {
    if (p.size() != length) throw ShapeError("fedavg: parameter vectors differ in length");
  }
  const auto weights = fedavg_weights(sizes);

  // Written as w_0 + sum_i a_i (w_i - w_0), which equals sum_i a_i w_i because the
  // weights sum to one, and returns w_0 bitwise when every client agrees.
  std::vector<double> out = client_params.front();
  for (std::size_t i = 1; i < client_params.size(); ++i) {
    const auto& w = client_params[i];
    for (std::size_t k = 0; k < length; ++k) out[k] += weights[i] * (w[k] - client_params.front()[k]);
  }
  return out;
}

ProximalTerm fedprox_local_objective(std::span<const double> w, std::span<const double> w_global,
                                     double base_loss, double mu) {
  if (w.size() != w_global.size()) throw ShapeError("fedprox: parameter length mismatch");
  ProximalTerm out;
  out.grad_adjustment.resize(w.size());
  double squared = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double diff = w[k] - w_global[k];
    squared += diff * diff;
    out.grad_adjustment[k] = mu * diff;
  }
  out.loss = base_loss + 0.5 * mu * squared;
  return out;
}

RoundLog run_cs_round(ServerState& server, std::vector<ClientState>& clients, std::span<const Graph> graphs,
                      std::span<const Graph* const> test, int round, const CsRoundOptions& options) {
  if (clients.empty()) throw StateError("run_cs_round: no clients");
  if (server.client_sizes.size() != clients.size()) throw StateError("run_cs_round: client size table mismatch");
  const auto started = std::chrono::steady_clock::now();

  RoundLog log;
  log.round = round;
  log.clients.resize(clients.size());

  parallel_for(clients.size(), options.threads, [&](std::size_t i) {
    ClientState& client = clients[i];
    if (server.global_params.size() != client.model.params().size())
      throw ShapeError("run_cs_round: global parameters do not match client model");
    client.model.params() = server.global_params;
    client.senders.clear();

    TrainOptions train = options.train;
    train.prox_mu = options.prox_mu;
    train.prox_anchor = options.prox_mu != 0.0 ? &server.global_params : nullptr;
    Rng rng = make_rng(options.master_seed, Stream::kTraining, static_cast<std::uint64_t>(client.id),
                       static_cast<std::uint64_t>(round));
    LocalTrainResult trained = local_train(client, graphs, train, rng);
    trained.gradient.source_round = round;
    client.current_gradient.source_round = round;

    ClientRoundEntry& entry = log.clients[i];
    entry.loss = trained.loss;
    entry.grad_norm = trained.gradient.norm();
  });

  std::vector<std::vector<double>> uploads;
  uploads.reserve(clients.size());
  for (const ClientState& c : clients) uploads.push_back(c.model.params());
  server.global_params = fedavg_aggregate(uploads, server.client_sizes);
  server.round = round;

  if (options.evaluate && !test.empty()) {
    const GinModel global = GinModel::unflatten(clients.front().model.dims(), server.global_params);
    const double accuracy = evaluate(global, test);
    for (ClientRoundEntry& entry : log.clients) entry.accuracy = accuracy;
    log.evaluated = true;
  }

  log.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return log;
}

}  // namespace dgfl
