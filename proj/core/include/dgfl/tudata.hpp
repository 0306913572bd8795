#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dgfl {

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// One labeled graph. Edges are undirected, stored once with first < second,
/// sorted and free of duplicates and self-loops.
struct Graph {
  std::size_t node_count = 0;
  std::vector<Edge> edges;
  /// Row-major node_count x feature_dim.
  std::vector<double> features;
  std::size_t feature_dim = 0;
  int label = 0;
  /// Generator family for synthetic graphs, -1 otherwise.
  int family = -1;

  double feature(std::size_t node, std::size_t column) const {
    return features[node * feature_dim + column];
  }
  std::vector<std::size_t> degrees() const;

  friend bool operator==(const Graph&, const Graph&) = default;
};

struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  int num_classes = 0;
  std::size_t feature_dim = 0;

  std::size_t size() const noexcept { return graphs.size(); }
  /// Throws FormatError when an invariant is broken.
  void validate() const;

  friend bool operator==(const GraphDataset&, const GraphDataset&) = default;
};

struct PartitionPlan {
  std::vector<std::vector<std::size_t>> client_shards;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

inline constexpr std::size_t kDefaultDegreeCap = 16;

/// Reads `<dir>/<name>_A.txt`, `_graph_indicator.txt`, `_graph_labels.txt` and the
/// optional `_node_labels.txt` / `_node_attributes.txt`. Node features come from
/// node labels (one-hot), else node attributes, else capped degree one-hot.
GraphDataset parse_tudataset(const std::filesystem::path& dir, const std::string& name,
                             std::size_t degree_cap = kDefaultDegreeCap);

/// Replaces node features with one-hot(min(degree, cap)); feature_dim = cap + 1.
std::vector<Graph> degree_features(std::vector<Graph> graphs, std::size_t max_degree_cap);

/// Writes the dataset in TUDataset layout. Node features go to `_node_attributes.txt`
/// so that re-parsing reproduces them exactly.
void write_tudataset(const GraphDataset& dataset, const std::filesystem::path& dir);

struct SyntheticFamily {
  std::size_t count = 50;
  std::size_t nodes = 10;
  double mean_degree = 2.0;

  friend bool operator==(const SyntheticFamily&, const SyntheticFamily&) = default;
};

/// Random-graph families with different mean degree. Within each family a graph
/// is labeled 1 iff its edge count is above the family median.
struct SyntheticSpec {
  std::string name = "SYNTH";
  std::vector<SyntheticFamily> families{{50, 10, 2.0}, {50, 10, 6.0}};
  std::size_t degree_cap = kDefaultDegreeCap;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

GraphDataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Uniform test holdout, then Dirichlet(1/max(unevenness, eps)) client proportions
/// over the remainder. unevenness == 0 gives an equal split.
PartitionPlan partition(const GraphDataset& dataset, std::size_t n_clients, double test_fraction,
                        double unevenness, std::uint64_t seed);

/// Uniform test holdout, then clients assigned to families in contiguous blocks
/// (client c serves family c * F / n) with an equal split inside each family.
PartitionPlan partition_by_family(const GraphDataset& dataset, std::size_t n_clients,
                                  double test_fraction, std::uint64_t seed);

struct DatasetStats {
  std::size_t graphs = 0;
  int classes = 0;
  double avg_nodes = 0.0;
  /// Undirected edges counted once.
  double avg_edges = 0.0;
};

DatasetStats compute_stats(const GraphDataset& dataset);

}  // namespace dgfl
