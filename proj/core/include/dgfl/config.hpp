#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dgfl/confidence.hpp"
#include "dgfl/convergence.hpp"
#include "dgfl/gin.hpp"
#include "dgfl/protocol.hpp"
#include "dgfl/tudata.hpp"

namespace dgfl {

enum class Method { kDgfl, kFedAvg, kFedProx };
enum class DataSource { kTuDataset, kSynthetic };
enum class PartitionScheme { kRandom, kByFamily };

std::string_view to_string(Method m);
std::string_view to_string(DataSource s);
std::string_view to_string(PartitionScheme p);
std::string_view to_string(Similarity s);
std::string_view to_string(Standardization s);
std::string_view to_string(UpdateRule r);

/// Everything one experiment needs. Defaults reproduce the reference settings:
/// 10 clients, 10% test holdout, 3-layer GIN of width 64, Adam (lr 1e-3,
/// weight decay 5e-4), 5 local epochs, batch 128, FedProx mu 0.01.
struct ExperimentConfig {
  Method method = Method::kDgfl;
  int rounds = 200;
  std::uint64_t seed = 1;
  int eval_interval = 1;
  std::string output_dir = "runs/default";

  // [data]
  DataSource source = DataSource::kSynthetic;
  std::string data_path = "data";
  std::string data_name;
  std::size_t degree_cap = kDefaultDegreeCap;
  std::size_t n_clients = 10;
  double test_fraction = 0.1;
  double unevenness = 1.0;
  PartitionScheme partition = PartitionScheme::kRandom;

  // [synthetic]; the dataset seed defaults to the master seed.
  SyntheticSpec synthetic;
  std::optional<std::uint64_t> synthetic_seed;

  // [model]; the init seed defaults to one derived from the master seed.
  std::size_t hidden = 64;
  std::size_t layers = 3;
  std::optional<std::uint64_t> init_seed;

  // [train]
  std::size_t local_epochs = 5;
  std::size_t batch_size = 128;
  AdamHyper adam;
  double mu = 0.01;

  // [confidence] and [protocol]
  ConfidenceSettings confidence;
  UpdateRule update_rule = UpdateRule::kDirect;
  /// Record every pairwise confidence per round (diagnostics; costs n^2 DTWs).
  bool record_pairwise = false;

  // [convergence]
  ConvergenceCriterion convergence;

  // [checkpoint]
  std::size_t checkpoint_every = 0;
  std::string resume_from;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws RangeError naming the first invalid key.
void validate(const ExperimentConfig& config);

/// Parses the key-value config layout (see configs/README in the repo). Unknown keys
/// and syntax errors raise ConfigError/ParseError with the line number.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Serializes every field; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace dgfl
