#include "dgfl/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "dgfl/errors.hpp"
#include "dgfl/parallel.hpp"

namespace dgfl {

std::vector<ClientState> init_clients(const std::vector<std::vector<std::size_t>>& shards, const GinModel& initial,
                                      const AdamHyper& hyper, bool fully_connected) {
  const std::size_t n = shards.size();
  if (n == 0) throw TopologyError("no clients");
  if (fully_connected && n < 2) throw TopologyError("a decentralized run needs at least 2 clients");

  std::vector<ClientState> clients(n);
  for (std::size_t i = 0; i < n; ++i) {
    ClientState& c = clients[i];
    c.id = static_cast<int>(i);
    c.model = initial;
    c.opt = AdamState(initial.params().size(), hyper);
    c.shard = shards[i];
    if (fully_connected) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) c.neighbors.push_back(static_cast<int>(j));
      }
    }
  }
  return clients;
}

int sample_receiver(const ClientState& client, Rng& rng) {
  if (client.neighbors.empty())
    throw TopologyError("client " + std::to_string(client.id) + " has no neighbors");
  std::uniform_int_distribution<std::size_t> pick(0, client.neighbors.size() - 1);
  return client.neighbors[pick(rng)];
}

namespace {

void require_finite(const std::vector<double>& values, int round, int client, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v))
      throw NumericError("round " + std::to_string(round) + " client " + std::to_string(client) + ": non-finite " + what);
  }
}

}  // namespace

RoundLog run_round(std::vector<ClientState>& clients, std::span<const Graph> graphs,
                   std::span<const Graph* const> test, int round, const ProtocolOptions& options) {
  if (round < 1) throw StateError("rounds are numbered from 1");
  const std::size_t n = clients.size();
  if (n < 2) throw TopologyError("a decentralized run needs at least 2 clients");
  const auto started = std::chrono::steady_clock::now();

  RoundLog log;
  log.round = round;
  log.clients.resize(n);
  std::vector<int> receivers(n, -1);

  // Send phase.
  parallel_for(n, options.threads, [&](std::size_t i) {
    ClientState& client = clients[i];
    client.senders.clear();
    Rng train_rng = make_rng(options.master_seed, Stream::kTraining, static_cast<std::uint64_t>(client.id),
                             static_cast<std::uint64_t>(round));
    LocalTrainResult trained;
    try {
      trained = local_train(client, graphs, options.train, train_rng);
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(round) + " client " + std::to_string(client.id) + ": " + e.what());
    }
    require_finite(trained.gradient.values, round, client.id, "pseudo-gradient");
    client.current_gradient.source_round = round;

    Rng receiver_rng = make_rng(options.master_seed, Stream::kReceiver, static_cast<std::uint64_t>(client.id),
                                static_cast<std::uint64_t>(round));
    receivers[i] = sample_receiver(client, receiver_rng);

    ClientRoundEntry& entry = log.clients[i];
    entry.loss = trained.loss;
    entry.receiver = receivers[i];
    entry.grad_norm = trained.gradient.norm();
  });

  // Barrier: deliver every message of this round, in sender order.
  for (std::size_t i = 0; i < n; ++i) {
    clients[static_cast<std::size_t>(receivers[i])].senders.push_back(
        GradientMessage{clients[i].id, clients[i].current_gradient});
  }

  if (options.record_pairwise) {
    log.pairwise_confidence.assign(n, std::vector<double>(n, 1.0));
    ConfidenceSettings pairwise = options.confidence;
    pairwise.standardization = Standardization::kSquash;
    parallel_for(n, options.threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const GradientMessage msg{clients[j].id, clients[j].current_gradient};
        log.pairwise_confidence[i][j] =
            round_confidences(clients[i].current_gradient, std::span(&msg, 1), pairwise).at(msg.sender);
      }
    });
  }

  // Receive phase.
  parallel_for(n, options.threads, [&](std::size_t i) {
    ClientState& client = clients[i];
    ClientRoundEntry& entry = log.clients[i];
    entry.n_senders = client.senders.size();

    GradientVector update = client.current_gradient;
    if (!client.senders.empty()) {
      for (const GradientMessage& msg : client.senders) {
        if (msg.gradient.source_round != round)
          throw StateError("client " + std::to_string(client.id) + " read a gradient from round " +
                           std::to_string(msg.gradient.source_round) + " during round " + std::to_string(round));
      }
      entry.confidences = round_confidences(client.current_gradient, client.senders, options.confidence);
      const ConfidenceRecord record = make_confidence_record(round, entry.confidences);
      entry.sample = filter_senders(record);

      std::map<int, WeightedGradient> samples;
      for (const GradientMessage& msg : client.senders) {
        if (std::binary_search(entry.sample.begin(), entry.sample.end(), msg.sender))
          samples[msg.sender] = WeightedGradient{&msg.gradient, record.values.at(msg.sender)};
      }
      update = aggregate(client.current_gradient, samples);
      update.source_round = round;
    }
    require_finite(update.values, round, client.id, "aggregated gradient");

    if (options.update_rule == UpdateRule::kDirect) {
      apply_gradient(client, update);
    } else {
      client.model.params() = client.w_before;
      adam_step(client.model.params(), update.values, client.opt);
    }
    client.senders.clear();

    if (options.evaluate && !test.empty()) entry.accuracy = evaluate(client.model, test);
  });
  log.evaluated = options.evaluate && !test.empty();

  log.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return log;
}

}  // namespace dgfl
