#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace dgfl {

struct ClientRoundEntry {
  double loss = 0.0;
  /// Accuracy on the shared test set; meaningful only when the round was evaluated.
  double accuracy = 0.0;
  /// Chosen message receiver, -1 for client-server rounds.
  int receiver = -1;
  std::size_t n_senders = 0;
  /// Conf_{i,j} for every sender j of this round.
  std::map<int, double> confidences;
  /// Senders that passed the mean-confidence filter.
  std::vector<int> sample;
  /// L2 norm of the pseudo-gradient produced by local training.
  double grad_norm = 0.0;

  friend bool operator==(const ClientRoundEntry&, const ClientRoundEntry&) = default;
};

struct RoundLog {
  int round = 0;
  bool evaluated = false;
  std::vector<ClientRoundEntry> clients;
  /// Optional diagnostic: confidence between every ordered pair of round gradients.
  std::vector<std::vector<double>> pairwise_confidence;
  std::int64_t wall_time_ms = 0;

  double mean_accuracy() const {
    if (clients.empty()) return 0.0;
    double total = 0.0;
    for (const auto& c : clients) total += c.accuracy;
    return total / static_cast<double>(clients.size());
  }

  /// Equality ignoring wall time.
  bool same_content(const RoundLog& other) const {
    return round == other.round && evaluated == other.evaluated && clients == other.clients &&
           pairwise_confidence == other.pairwise_confidence;
  }
};

}  // namespace dgfl
