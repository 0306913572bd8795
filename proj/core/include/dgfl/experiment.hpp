#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dgfl/config.hpp"
#include "dgfl/metrics.hpp"
#include "dgfl/round_log.hpp"
#include "dgfl/tudata.hpp"

namespace dgfl {

struct RunOptions {
  std::size_t threads = 1;
  /// Called after every round, e.g. for progress output.
  std::function<void(const RoundLog&)> on_round;
};

/// Dataset, partition and initial model shared by every method run from one config.
struct ExperimentSetup {
  GraphDataset dataset;
  PartitionPlan plan;
  GinModel initial;
};

GraphDataset load_dataset(const ExperimentConfig& config);
ExperimentSetup prepare_experiment(const ExperimentConfig& config);

struct ExperimentResult {
  std::vector<RoundLog> logs;
  RunSummary summary;
};

/// Initializes the clients from identical parameters, then runs `rounds` rounds of
/// the configured method. Rounds that are multiples of eval_interval, and the
/// last round, are evaluated on the shared test set.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentSetup& setup,
                                const RunOptions& options = {});

}  // namespace dgfl
