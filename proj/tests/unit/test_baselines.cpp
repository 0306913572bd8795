#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dgfl/baselines.hpp"
#include "dgfl/errors.hpp"
#include "dgfl/protocol.hpp"

using namespace dgfl;

namespace {

std::vector<double> naive_weighted_mean(const std::vector<std::vector<double>>& params, const std::vector<std::size_t>& sizes) {
  double total = 0;
  for (std::size_t s : sizes) total += static_cast<double>(s);
  std::vector<double> out(params.front().size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += static_cast<double>(sizes[i]) / total * params[i][k];
  return out;
}

}  // namespace

TEST(FedAvgWeights, ProportionalToSizes) {
  const std::vector<std::size_t> sizes{1, 3, 4};
  EXPECT_EQ(fedavg_weights(sizes), (std::vector<double>{0.125, 0.375, 0.5}));
  EXPECT_THROW(fedavg_weights(std::vector<std::size_t>{2, 0}), InputError);
  EXPECT_THROW(fedavg_weights(std::vector<std::size_t>{}), InputError);
}

TEST(FedAvgAggregate, HandExamples) {
  const std::vector<std::vector<double>> two{{1, 3}, {3, 5}};
  EXPECT_EQ(fedavg_aggregate(two, std::vector<std::size_t>{1, 1}), (std::vector<double>{2, 4}));
  const std::vector<std::vector<double>> skew{{0, 0}, {4, 8}};
  EXPECT_EQ(fedavg_aggregate(skew, std::vector<std::size_t>{1, 3}), (std::vector<double>{3, 6}));
  const std::vector<std::vector<double>> one{{0.1, -7}};
  EXPECT_EQ(fedavg_aggregate(one, std::vector<std::size_t>{9}), one.front());
}

TEST(FedAvgAggregate, IdenticalClientsAreFixedPoint) {
  const std::vector<double> w{0.1, -0.3, 1e-9, 12345.678};
  const std::vector<std::vector<double>> clients(5, w);
  EXPECT_EQ(fedavg_aggregate(clients, std::vector<std::size_t>{3, 1, 4, 1, 5}), w);
}

TEST(FedAvgAggregate, MatchesWeightedMeanOnRandomInputs) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> size(1, 200), count(1, 12), length(1, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = count(rng), p = length(rng);
    std::vector<std::vector<double>> params(n, std::vector<double>(p));
    std::vector<std::size_t> sizes(n);
    for (std::size_t i = 0; i < n; ++i) {
      sizes[i] = size(rng);
      for (double& v : params[i]) v = normal(rng);
    }
    const auto got = fedavg_aggregate(params, sizes);
    const auto want = naive_weighted_mean(params, sizes);
    for (std::size_t k = 0; k < p; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
  }
}

TEST(FedAvgAggregate, ShapeErrors) {
  const std::vector<std::vector<double>> ragged{{1, 2}, {3}};
  EXPECT_THROW(fedavg_aggregate(ragged, std::vector<std::size_t>{1, 1}), ShapeError);
  const std::vector<std::vector<double>> ok{{1, 2}, {3, 4}};
  EXPECT_THROW(fedavg_aggregate(ok, std::vector<std::size_t>{1}), ShapeError);
  EXPECT_THROW(fedavg_aggregate(std::vector<std::vector<double>>{}, std::vector<std::size_t>{}), InputError);
}

TEST(FedProxObjective, ProximalTermAndGradient) {
  const std::vector<double> w{1, 2, 3}, wg{1, 0, 5};
  const ProximalTerm t = fedprox_local_objective(w, wg, 0.25, 0.1);
  EXPECT_DOUBLE_EQ(t.loss, 0.25 + 0.05 * 8.0);
  EXPECT_EQ(t.grad_adjustment, (std::vector<double>{0.0, 0.1 * 2, 0.1 * -2}));

  const ProximalTerm zero = fedprox_local_objective(w, wg, 0.25, 0.0);
  EXPECT_EQ(zero.loss, 0.25);
  EXPECT_EQ(zero.grad_adjustment, std::vector<double>(3, 0.0));
  EXPECT_THROW(fedprox_local_objective(w, std::vector<double>{1}, 0, 1), ShapeError);
}

TEST(FedProxObjective, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::vector<double> w(6), wg(6);
  for (double& v : w) v = normal(rng);
  for (double& v : wg) v = normal(rng);
  const double mu = 0.37, h = 1e-6;
  const auto t = fedprox_local_objective(w, wg, 0.0, mu);
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto up = w, down = w;
    up[k] += h;
    down[k] -= h;
    const double fd = (fedprox_local_objective(up, wg, 0, mu).loss - fedprox_local_objective(down, wg, 0, mu).loss) / (2 * h);
    EXPECT_NEAR(t.grad_adjustment[k], fd, 1e-8);
  }
}

namespace {

struct CsWorld {
  GraphDataset data = gen_synthetic(SyntheticSpec{}, 31);
  PartitionPlan plan = partition(data, 4, 0.1, 1.0, 31);
  GinModel initial = GinModel::initialize(GinDims{data.feature_dim, 8, 2, 2}, 2);
  std::vector<const Graph*> test;
  CsWorld() {
    for (std::size_t idx : plan.test_indices) test.push_back(&data.graphs[idx]);
  }
  ServerState server() const {
    ServerState s;
    s.global_params = initial.params();
    for (const auto& shard : plan.client_shards) s.client_sizes.push_back(shard.size());
    return s;
  }
};

}  // namespace

TEST(CsRound, ServerHoldsWeightedMeanOfLocalModels) {
  const CsWorld w;
  ServerState server = w.server();
  auto clients = init_clients(w.plan.client_shards, w.initial, AdamHyper{}, false);
  CsRoundOptions opts;
  opts.master_seed = 6;
  const RoundLog log = run_cs_round(server, clients, w.data.graphs, w.test, 1, opts);

  // Replay one client to confirm it trained from the broadcast on its own stream.
  auto replay = init_clients(w.plan.client_shards, w.initial, AdamHyper{}, false);
  Rng rng = make_rng(6, Stream::kTraining, 2, 1);
  local_train(replay[2], w.data.graphs, opts.train, rng);
  EXPECT_EQ(replay[2].model.params(), clients[2].model.params());

  std::vector<std::vector<double>> uploads;
  for (const auto& c : clients) uploads.push_back(c.model.params());
  EXPECT_EQ(server.global_params, fedavg_aggregate(uploads, server.client_sizes));
  EXPECT_EQ(server.round, 1);

  EXPECT_TRUE(log.evaluated);
  const double acc = evaluate(GinModel::unflatten(w.initial.dims(), server.global_params), w.test);
  for (const auto& e : log.clients) {
    EXPECT_EQ(e.accuracy, acc);
    EXPECT_EQ(e.receiver, -1);
    EXPECT_EQ(e.n_senders, 0u);
  }
}

TEST(CsRound, FedProxZeroMuEqualsFedAvg) {
  const CsWorld w;
  ServerState a = w.server(), b = w.server();
  auto ca = init_clients(w.plan.client_shards, w.initial, AdamHyper{}, false);
  auto cb = ca;
  CsRoundOptions avg, prox;
  prox.prox_mu = 0.0;
  for (int t = 1; t <= 2; ++t) {
    run_cs_round(a, ca, w.data.graphs, w.test, t, avg);
    run_cs_round(b, cb, w.data.graphs, w.test, t, prox);
  }
  EXPECT_EQ(a.global_params, b.global_params);
}

TEST(CsRound, ProximalTermPullsTowardGlobal) {
  const CsWorld w;
  double drift_plain = 0, drift_prox = 0;
  for (double mu : {0.0, 50.0}) {
    ServerState s = w.server();
    auto clients = init_clients(w.plan.client_shards, w.initial, AdamHyper{}, false);
    CsRoundOptions opts;
    opts.prox_mu = mu;
    opts.train.epochs = 10;
    run_cs_round(s, clients, w.data.graphs, w.test, 1, opts);
    double drift = 0;
    for (const auto& c : clients)
      for (std::size_t k = 0; k < c.model.params().size(); ++k) drift += std::abs(c.model.params()[k] - w.initial.params()[k]);
    (mu == 0.0 ? drift_plain : drift_prox) = drift;
  }
  EXPECT_LT(drift_prox, drift_plain);
}

TEST(CsRound, DeterministicAcrossThreadCounts) {
  const CsWorld w;
  ServerState a = w.server(), b = w.server();
  auto ca = init_clients(w.plan.client_shards, w.initial, AdamHyper{}, false);
  auto cb = ca;
  CsRoundOptions one, four;
  four.threads = 4;
  for (int t = 1; t <= 3; ++t) {
    const RoundLog la = run_cs_round(a, ca, w.data.graphs, w.test, t, one);
    const RoundLog lb = run_cs_round(b, cb, w.data.graphs, w.test, t, four);
    EXPECT_TRUE(la.same_content(lb));
  }
  EXPECT_EQ(a.global_params, b.global_params);
}

TEST(CsRound, StateErrors) {
  const CsWorld w;
  ServerState s = w.server();
  std::vector<ClientState> none;
  EXPECT_THROW(run_cs_round(s, none, w.data.graphs, w.test, 1, {}), StateError);
  auto clients = init_clients(w.plan.client_shards, w.initial, AdamHyper{}, false);
  s.client_sizes.pop_back();
  EXPECT_THROW(run_cs_round(s, clients, w.data.graphs, w.test, 1, {}), StateError);
  s = w.server();
  s.global_params.pop_back();
  EXPECT_THROW(run_cs_round(s, clients, w.data.graphs, w.test, 1, {}), ShapeError);
}
