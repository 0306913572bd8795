#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dgfl/errors.hpp"
#include "dgfl/protocol.hpp"

using namespace dgfl;

namespace {

struct World {
  GraphDataset data = gen_synthetic(SyntheticSpec{}, 21);
  PartitionPlan plan = partition(data, 6, 0.1, 1.0, 21);
  GinModel initial = GinModel::initialize(GinDims{data.feature_dim, 16, 2, 2}, 4);
  std::vector<const Graph*> test;

  World() {
    for (std::size_t idx : plan.test_indices) test.push_back(&data.graphs[idx]);
  }
  std::vector<ClientState> clients() const { return init_clients(plan.client_shards, initial, AdamHyper{}, true); }
  ProtocolOptions options(std::size_t threads = 1) const {
    ProtocolOptions o;
    o.train.epochs = 2;
    o.master_seed = 99;
    o.threads = threads;
    return o;
  }
};

std::vector<RoundLog> run(const World& w, int rounds, const ProtocolOptions& opts, std::vector<ClientState>* out = nullptr) {
  auto clients = w.clients();
  std::vector<RoundLog> logs;
  for (int t = 1; t <= rounds; ++t) logs.push_back(run_round(clients, w.data.graphs, w.test, t, opts));
  if (out != nullptr) *out = std::move(clients);
  return logs;
}

}  // namespace

TEST(InitClients, FullyConnectedNeighbors) {
  const World w;
  const auto clients = w.clients();
  ASSERT_EQ(clients.size(), 6u);
  for (const ClientState& c : clients) {
    EXPECT_EQ(c.neighbors.size(), 5u);
    EXPECT_EQ(std::count(c.neighbors.begin(), c.neighbors.end(), c.id), 0);
    EXPECT_EQ(c.model.params(), w.initial.params());
    EXPECT_EQ(c.opt.first_moment.size(), w.initial.params().size());
  }
  EXPECT_THROW(init_clients({{0, 1}}, w.initial, AdamHyper{}, true), TopologyError);
  EXPECT_NO_THROW(init_clients({{0, 1}}, w.initial, AdamHyper{}, false));
}

TEST(SampleReceiver, TwoClientsAlwaysPickTheOther) {
  const World w;
  const auto pair = init_clients({{0}, {1}}, w.initial, AdamHyper{}, true);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(sample_receiver(pair[0], rng), 1);
    EXPECT_EQ(sample_receiver(pair[1], rng), 0);
  }
}

TEST(SampleReceiver, UniformOverNeighbors) {
  ClientState c;
  c.id = 4;
  for (int j = 0; j < 10; ++j)
    if (j != 4) c.neighbors.push_back(j);
  Rng rng(12345);
  std::vector<int> hits(10, 0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) ++hits[static_cast<std::size_t>(sample_receiver(c, rng))];
  EXPECT_EQ(hits[4], 0);
  const double p = 1.0 / 9.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (int j = 0; j < 10; ++j)
    if (j != 4) EXPECT_NEAR(hits[static_cast<std::size_t>(j)], draws * p, 3 * sigma) << "neighbor " << j;

  Rng a(7), b(7);
  EXPECT_EQ(sample_receiver(c, a), sample_receiver(c, b));
  ClientState lonely;
  EXPECT_THROW(sample_receiver(lonely, a), TopologyError);
}

TEST(RunRound, MessageConservation) {
  const World w;
  for (const RoundLog& log : run(w, 5, w.options())) {
    std::size_t received = 0;
    std::vector<std::size_t> expected(log.clients.size(), 0);
    for (std::size_t i = 0; i < log.clients.size(); ++i) {
      const int r = log.clients[i].receiver;
      ASSERT_GE(r, 0);
      EXPECT_NE(r, static_cast<int>(i));
      ++expected[static_cast<std::size_t>(r)];
    }
    for (std::size_t i = 0; i < log.clients.size(); ++i) {
      const ClientRoundEntry& e = log.clients[i];
      received += e.n_senders;
      EXPECT_EQ(e.n_senders, expected[i]);
      EXPECT_EQ(e.confidences.size(), e.n_senders);
      for (const auto& [sender, c] : e.confidences) EXPECT_EQ(log.clients[static_cast<std::size_t>(sender)].receiver, static_cast<int>(i));
      for (int s : e.sample) EXPECT_TRUE(e.confidences.contains(s));
      EXPECT_EQ(e.sample.empty(), e.n_senders == 0);
    }
    EXPECT_EQ(received, log.clients.size());
  }
}

TEST(RunRound, SenderListsClearedAfterRound) {
  const World w;
  std::vector<ClientState> clients;
  run(w, 2, w.options(), &clients);
  for (const ClientState& c : clients) EXPECT_TRUE(c.senders.empty());
}

TEST(RunRound, TwoClientHandTrace) {
  const GraphDataset data = gen_synthetic(SyntheticSpec{}, 2);
  const GinModel initial = GinModel::initialize(GinDims{data.feature_dim, 8, 2, 2}, 6);
  const std::vector<std::vector<std::size_t>> shards{{0, 1, 2, 3, 4, 5}, {10, 11, 12, 13}};
  auto clients = init_clients(shards, initial, AdamHyper{}, true);
  ProtocolOptions opts;
  opts.master_seed = 17;
  opts.evaluate = false;

  // Replay the round by hand: train both clients on their own streams, then
  // mix each local gradient with the other's, rescaled to the local norm.
  auto manual = init_clients(shards, initial, AdamHyper{}, true);
  std::vector<GradientVector> g(2);
  for (int i = 0; i < 2; ++i) {
    Rng rng = make_rng(17, Stream::kTraining, static_cast<std::uint64_t>(i), 1);
    g[static_cast<std::size_t>(i)] = local_train(manual[static_cast<std::size_t>(i)], data.graphs, opts.train, rng).gradient;
  }

  const RoundLog log = run_round(clients, data.graphs, {}, 1, opts);
  const DtwOptions dtw_opts = resolve_dtw_options(g[0].values.size(), ConfidenceSettings{});
  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t j = 1 - i;
    EXPECT_EQ(log.clients[i].receiver, static_cast<int>(j));
    EXPECT_EQ(log.clients[i].n_senders, 1u);
    const double conf = confidence(g[i], g[j], dtw_opts);
    EXPECT_EQ(log.clients[i].confidences.at(static_cast<int>(j)), conf);
    EXPECT_EQ(log.clients[i].sample, std::vector<int>{static_cast<int>(j)});
    const double scale = g[i].norm() / g[j].norm();
    for (std::size_t k = 0; k < g[i].values.size(); ++k) {
      const double mixed = (g[i].values[k] + conf * scale * g[j].values[k]) / (1.0 + conf);
      EXPECT_NEAR(clients[i].model.params()[k], initial.params()[k] - mixed, 1e-14);
    }
  }
}

TEST(RunRound, IdenticalClientsMoveTogether) {
  const GraphDataset data = gen_synthetic(SyntheticSpec{}, 2);
  const GinModel initial = GinModel::initialize(GinDims{data.feature_dim, 8, 2, 2}, 6);
  const std::vector<std::size_t> shard{0, 1, 2, 3, 4, 5, 6, 7};
  auto clients = init_clients({shard, shard}, initial, AdamHyper{}, true);
  ProtocolOptions opts;
  opts.evaluate = false;
  for (int t = 1; t <= 3; ++t) {
    const RoundLog log = run_round(clients, data.graphs, {}, t, opts);
    EXPECT_EQ(log.clients[0].confidences.at(1), 1.0);
    EXPECT_EQ(clients[0].model.params(), clients[1].model.params());
  }
}

TEST(RunRound, ClientWithoutSendersKeepsOwnUpdate) {
  const World w;
  auto clients = w.clients();
  const RoundLog log = run_round(clients, w.data.graphs, w.test, 1, w.options());
  bool seen = false;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (log.clients[i].n_senders != 0) continue;
    seen = true;
    const auto& g = clients[i].current_gradient.values;
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(clients[i].model.params()[k], w.initial.params()[k] - g[k]);
  }
  if (!seen) GTEST_SKIP() << "every client received a message with this seed";
}

TEST(RunRound, ReplayIsBitwiseAcrossThreadCounts) {
  const World w;
  const auto a = run(w, 4, w.options(1));
  const auto b = run(w, 4, w.options(1));
  const auto c = run(w, 4, w.options(4));
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_TRUE(a[t].same_content(b[t]));
    EXPECT_TRUE(a[t].same_content(c[t]));
  }
}

TEST(RunRound, PairwiseMatrixIsSymmetricWithUnitDiagonal) {
  const World w;
  ProtocolOptions opts = w.options();
  opts.record_pairwise = true;
  const auto logs = run(w, 1, opts);
  const auto& m = logs[0].pairwise_confidence;
  ASSERT_EQ(m.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(m[i][i], 1.0);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(m[i][j], m[j][i], 1e-12);
  }
}

TEST(RunRound, AdamUpdateRuleDiffersFromDirect) {
  const World w;
  ProtocolOptions adam = w.options();
  adam.update_rule = UpdateRule::kAdam;
  std::vector<ClientState> direct_clients, adam_clients;
  run(w, 2, w.options(), &direct_clients);
  run(w, 2, adam, &adam_clients);
  EXPECT_NE(direct_clients[0].model.params(), adam_clients[0].model.params());
  for (const ClientState& c : adam_clients)
    for (double v : c.model.params()) EXPECT_TRUE(std::isfinite(v));
}

TEST(RunRound, NumericFailureNamesRoundAndClient) {
  const World w;
  auto clients = w.clients();
  clients[2].model.params()[clients[2].model.classifier_bias_offset()] = std::nan("");
  try {
    run_round(clients, w.data.graphs, w.test, 3, w.options());
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("round 3"), std::string::npos) << what;
    EXPECT_NE(what.find("client 2"), std::string::npos) << what;
  }
}

TEST(RunRound, RejectsBadRoundAndTopology) {
  const World w;
  auto clients = w.clients();
  EXPECT_THROW(run_round(clients, w.data.graphs, w.test, 0, w.options()), StateError);
  auto single = init_clients({{0, 1}}, w.initial, AdamHyper{}, false);
  EXPECT_THROW(run_round(single, w.data.graphs, w.test, 1, w.options()), TopologyError);
}
