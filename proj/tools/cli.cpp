#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgfl/config.hpp"
#include "dgfl/errors.hpp"
#include "dgfl/experiment.hpp"
#include "dgfl/metrics.hpp"
#include "dgfl/parallel.hpp"
#include "dgfl/tudata.hpp"

namespace dgfl::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string convergence_text(const RunSummary& s) {
  return s.convergence_round ? std::to_string(*s.convergence_round) : "n/a";
}

ExperimentConfig load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                                     const std::optional<std::string>& out) {
  ExperimentConfig config = load_config(path);
  if (seed) config.seed = *seed;
  if (out) config.output_dir = *out;
  return config;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::optional<std::string>& out_dir,
            std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = load_with_overrides(config_path, seed, out_dir);
  RunOptions options;
  options.threads = threads_from_env();
  options.on_round = [&err, &config](const RoundLog& log) {
    if (log.round % 10 == 0 || log.round == config.rounds)
      err << "round " << log.round << "/" << config.rounds << "  mean accuracy " << fixed(log.mean_accuracy(), 4) << "\n";
  };
  const ExperimentResult result = run_experiment(config, options);
  const fs::path dir = config.output_dir;
  emit_metrics(result.logs, result.summary, dir);
  write_atomic(dir / "config.toml", to_config_text(config));
  out << "method " << result.summary.method << "  rounds " << result.summary.rounds << "  final mean accuracy "
      << fixed(result.summary.final_mean_accuracy, 4) << "  convergence round " << convergence_text(result.summary)
      << "\n"
      << "wrote " << (dir / "metrics.csv").string() << " and " << (dir / "summary.json").string() << "\n";
  return kExitOk;
}

int cmd_gen_synth(const std::string& spec_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                  std::ostream& out) {
  const ExperimentConfig config = load_config(spec_path);
  SyntheticSpec spec = config.synthetic;
  spec.degree_cap = config.degree_cap;
  const std::uint64_t data_seed = seed.value_or(config.synthetic_seed.value_or(config.seed));
  const GraphDataset ds = gen_synthetic(spec, data_seed);
  write_tudataset(ds, out_dir);
  out << "wrote " << ds.size() << " graphs of '" << ds.name << "' to " << out_dir << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& data_dir, const std::string& name, std::size_t degree_cap, std::ostream& out) {
  const GraphDataset ds = parse_tudataset(data_dir, name, degree_cap);
  const DatasetStats stats = compute_stats(ds);
  out << "name         " << name << "\n"
      << "graphs       " << stats.graphs << "\n"
      << "classes      " << stats.classes << "\n"
      << "avg_nodes    " << fixed(stats.avg_nodes, 2) << "\n"
      << "avg_edges    " << fixed(stats.avg_edges, 2) << "\n"
      << "feature_dim  " << ds.feature_dim << "\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& config_paths, std::optional<std::uint64_t> seed,
                const std::optional<std::string>& out_dir, std::ostream& out, std::ostream& err) {
  std::vector<ExperimentConfig> configs;
  for (const auto& path : config_paths) configs.push_back(load_with_overrides(path, seed, std::nullopt));
  const ExperimentConfig& first = configs.front();
  for (const ExperimentConfig& c : configs) {
    const bool same_data = c.seed == first.seed && c.source == first.source && c.data_path == first.data_path &&
                           c.data_name == first.data_name && c.n_clients == first.n_clients &&
                           c.test_fraction == first.test_fraction && c.unevenness == first.unevenness &&
                           c.partition == first.partition && c.synthetic == first.synthetic &&
                           c.synthetic_seed == first.synthetic_seed && c.degree_cap == first.degree_cap &&
                           c.hidden == first.hidden && c.layers == first.layers && c.init_seed == first.init_seed;
    if (!same_data) throw ConfigError("compare: configs must share seed, data, partition and model settings");
  }

  const fs::path dir = out_dir.value_or(first.output_dir);
  const ExperimentSetup setup = prepare_experiment(first);
  RunOptions options;
  options.threads = threads_from_env();

  std::string joined = std::string("method,") + kMetricsHeader + "\n";
  std::map<std::string, int> used;
  out << "method        final_acc  convergence_round\n";
  for (std::size_t k = 0; k < configs.size(); ++k) {
    std::string label(to_string(configs[k].method));
    if (used[label]++ > 0) label += "-" + fs::path(config_paths[k]).stem().string();
    err << "running " << label << "\n";
    const ExperimentResult result = run_experiment(configs[k], setup, options);
    emit_metrics(result.logs, result.summary, dir / label);
    joined += metrics_rows(result.logs, label);
    char row[128];
    std::snprintf(row, sizeof row, "%-13s %-10s %s\n", label.c_str(), fixed(result.summary.final_mean_accuracy, 4).c_str(),
                  convergence_text(result.summary).c_str());
    out << row;
  }
  write_atomic(dir / "compare.csv", joined);
  out << "wrote " << (dir / "compare.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized graph federated learning simulator", "dgfl"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out_dir, "Override the output directory");

  std::string spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset in TUDataset layout");
  gen->add_option("--spec", spec_path, "Config file with a [synthetic] section")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--seed", synth_seed, "Dataset seed");

  std::string data_dir, name;
  std::size_t degree_cap = kDefaultDegreeCap;
  auto* inspect = app.add_subcommand("inspect", "Print dataset statistics");
  inspect->add_option("--data", data_dir, "Directory holding the TUDataset files")->required();
  inspect->add_option("--name", name, "Dataset name (file prefix)")->required();
  inspect->add_option("--degree-cap", degree_cap, "Degree cap for feature-less datasets");

  std::vector<std::string> compare_paths;
  std::optional<std::uint64_t> compare_seed;
  std::optional<std::string> compare_out;
  auto* compare = app.add_subcommand("compare", "Run several configs on identical partitions and seeds");
  compare->add_option("--configs", compare_paths, "Config files")->required()->check(CLI::ExistingFile);
  compare->add_option("--seed", compare_seed, "Override the master seed of every config");
  compare->add_option("--out", compare_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out_dir, out, err);
    if (*gen) return cmd_gen_synth(spec_path, synth_out, synth_seed, out);
    if (*inspect) return cmd_inspect(data_dir, name, degree_cap, out);
    if (*compare) return cmd_compare(compare_paths, compare_seed, compare_out, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace dgfl::cli
