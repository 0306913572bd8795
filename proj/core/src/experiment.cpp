#include "dgfl/experiment.hpp"

#include <cstdio>
#include <string>

#include "dgfl/baselines.hpp"
#include "dgfl/checkpoint.hpp"
#include "dgfl/errors.hpp"
#include "dgfl/protocol.hpp"

namespace dgfl {

GraphDataset load_dataset(const ExperimentConfig& config) {
  if (config.source == DataSource::kTuDataset)
    return parse_tudataset(config.data_path, config.data_name, config.degree_cap);
  SyntheticSpec spec = config.synthetic;
  spec.degree_cap = config.degree_cap;
  return gen_synthetic(spec, config.synthetic_seed.value_or(config.seed));
}

ExperimentSetup prepare_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentSetup setup;
  setup.dataset = load_dataset(config);
  setup.plan = config.partition == PartitionScheme::kByFamily
                   ? partition_by_family(setup.dataset, config.n_clients, config.test_fraction, config.seed)
                   : partition(setup.dataset, config.n_clients, config.test_fraction, config.unevenness, config.seed);
  if (setup.plan.test_indices.empty()) throw ConfigError("test split is empty; raise data.test_fraction");

  const GinDims dims{setup.dataset.feature_dim, config.hidden, config.layers,
                     static_cast<std::size_t>(setup.dataset.num_classes)};
  setup.initial = GinModel::initialize(dims, config.init_seed.value_or(derive_seed(config.seed, Stream::kInit)));
  return setup;
}

namespace {

Checkpoint snapshot(const ExperimentConfig& config, int round, const std::vector<ClientState>& clients,
                    const std::vector<double>* global) {
  Checkpoint ckpt;
  ckpt.method = std::string(to_string(config.method));
  ckpt.round = round;
  ckpt.seed = config.seed;
  ckpt.dims = clients.front().model.dims();
  for (const ClientState& c : clients)
    ckpt.clients.push_back({c.model.params(), c.opt.first_moment, c.opt.second_moment, c.opt.step_count});
  if (global != nullptr) ckpt.global_params = *global;
  return ckpt;
}

/// Restores client and server state; returns the round the checkpoint was taken after.
int restore(const ExperimentConfig& config, const Checkpoint& ckpt, std::vector<ClientState>& clients,
            std::vector<double>* global) {
  if (ckpt.method != to_string(config.method))
    throw ConfigError("checkpoint method '" + ckpt.method + "' does not match config");
  if (ckpt.seed != config.seed) throw ConfigError("checkpoint seed does not match config");
  if (ckpt.clients.size() != clients.size() || !(ckpt.dims == clients.front().model.dims()))
    throw ConfigError("checkpoint shape does not match config");
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].model.params() = ckpt.clients[i].params;
    clients[i].opt.first_moment = ckpt.clients[i].first_moment;
    clients[i].opt.second_moment = ckpt.clients[i].second_moment;
    clients[i].opt.step_count = ckpt.clients[i].step_count;
  }
  if (global != nullptr) {
    if (ckpt.global_params.empty()) throw ConfigError("checkpoint has no server state");
    *global = ckpt.global_params;
  }
  return ckpt.round;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  return run_experiment(config, prepare_experiment(config), options);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentSetup& setup,
                                const RunOptions& options) {
  validate(config);
  const bool decentralized = config.method == Method::kDgfl;
  std::vector<ClientState> clients =
      init_clients(setup.plan.client_shards, setup.initial, config.adam, decentralized);

  std::vector<const Graph*> test;
  for (std::size_t idx : setup.plan.test_indices) test.push_back(&setup.dataset.graphs[idx]);
  const std::span<const Graph> graphs(setup.dataset.graphs);

  TrainOptions train;
  train.epochs = config.local_epochs;
  train.batch_size = config.batch_size;

  ServerState server;
  server.global_params = setup.initial.params();
  for (const auto& shard : setup.plan.client_shards) server.client_sizes.push_back(shard.size());

  int first_round = 1;
  if (!config.resume_from.empty()) {
    const Checkpoint ckpt = read_checkpoint(config.resume_from);
    first_round = restore(config, ckpt, clients, decentralized ? nullptr : &server.global_params) + 1;
    server.round = first_round - 1;
  }

  ExperimentResult result;
  for (int t = first_round; t <= config.rounds; ++t) {
    const bool evaluate = t % config.eval_interval == 0 || t == config.rounds;
    RoundLog log;
    if (decentralized) {
      ProtocolOptions opts;
      opts.train = train;
      opts.confidence = config.confidence;
      opts.update_rule = config.update_rule;
      opts.master_seed = config.seed;
      opts.evaluate = evaluate;
      opts.record_pairwise = config.record_pairwise;
      opts.threads = options.threads;
      log = run_round(clients, graphs, test, t, opts);
    } else {
      CsRoundOptions opts;
      opts.train = train;
      opts.prox_mu = config.method == Method::kFedProx ? config.mu : 0.0;
      opts.master_seed = config.seed;
      opts.evaluate = evaluate;
      opts.threads = options.threads;
      log = run_cs_round(server, clients, graphs, test, t, opts);
    }
    if (options.on_round) options.on_round(log);
    result.logs.push_back(std::move(log));

    if (config.checkpoint_every > 0 && t % static_cast<int>(config.checkpoint_every) == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "round_%06d.ckpt", t);
      write_checkpoint(std::filesystem::path(config.output_dir) / "checkpoints" / name,
                       snapshot(config, t, clients, decentralized ? nullptr : &server.global_params));
    }
  }

  result.summary = summarize(result.logs, std::string(to_string(config.method)), config.convergence);
  return result;
}

}  // namespace dgfl
