#include "dgfl/tudata.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string_view>

#include "dgfl/errors.hpp"
#include "dgfl/rng.hpp"

namespace dgfl {
namespace {

namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// File contents split into lines, CR stripped, trailing blank lines dropped.
std::optional<std::vector<std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> require_lines(const fs::path& path) {
  auto lines = read_lines(path);
  if (!lines) throw FormatError(path.string(), 0, "missing required file");
  return std::move(*lines);
}

std::optional<long long> parse_int(std::string_view token) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_real(std::string_view token) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    parts.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

void normalize_edges(std::vector<Edge>& edges) {
  for (auto& [u, v] : edges) {
    if (u > v) std::swap(u, v);
  }
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(node_count, 0);
  for (const auto& [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

void GraphDataset::validate() const {
  if (graphs.empty()) throw FormatError(name, 0, "dataset is empty");
  if (num_classes <= 0) throw FormatError(name, 0, "num_classes must be positive");
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const Graph& graph = graphs[g];
    const std::string where = "graph " + std::to_string(g);
    if (graph.node_count == 0) throw FormatError(name, 0, where + " has no nodes");
    if (graph.label < 0 || graph.label >= num_classes)
      throw FormatError(name, 0, where + " label out of range");
    if (graph.feature_dim != feature_dim) throw FormatError(name, 0, where + " feature_dim mismatch");
    if (graph.features.size() != graph.node_count * feature_dim)
      throw FormatError(name, 0, where + " feature matrix has wrong size");
    for (const auto& [u, v] : graph.edges) {
      if (u >= graph.node_count || v >= graph.node_count)
        throw FormatError(name, 0, where + " edge endpoint out of range");
      if (u >= v) throw FormatError(name, 0, where + " edge not stored as (low, high)");
    }
  }
}

std::vector<Graph> degree_features(std::vector<Graph> graphs, std::size_t max_degree_cap) {
  const std::size_t dim = max_degree_cap + 1;
  for (Graph& g : graphs) {
    const auto deg = g.degrees();
    g.feature_dim = dim;
    g.features.assign(g.node_count * dim, 0.0);
    for (std::size_t v = 0; v < g.node_count; ++v) g.features[v * dim + std::min(deg[v], max_degree_cap)] = 1.0;
  }
  return graphs;
}

GraphDataset parse_tudataset(const fs::path& dir, const std::string& name, std::size_t degree_cap) {
  const auto file = [&](const char* suffix) { return dir / (name + suffix); };
  const fs::path a_path = file("_A.txt");
  const fs::path indicator_path = file("_graph_indicator.txt");
  const fs::path labels_path = file("_graph_labels.txt");

  const auto indicator_lines = require_lines(indicator_path);
  const auto label_lines = require_lines(labels_path);
  const auto edge_lines = require_lines(a_path);

  // Node k (0-based) belongs to graph node_graph[k] at position node_local[k].
  std::vector<std::size_t> node_graph(indicator_lines.size());
  std::vector<std::uint32_t> node_local(indicator_lines.size());
  std::vector<std::size_t> graph_sizes;
  for (std::size_t k = 0; k < indicator_lines.size(); ++k) {
    const auto id = parse_int(indicator_lines[k]);
    if (!id || *id < 1) throw FormatError(indicator_path.string(), k + 1, "expected positive graph id");
    const auto g = static_cast<std::size_t>(*id - 1);
    if (g >= graph_sizes.size()) graph_sizes.resize(g + 1, 0);
    node_graph[k] = g;
    node_local[k] = static_cast<std::uint32_t>(graph_sizes[g]++);
  }
  const std::size_t graph_count = graph_sizes.size();
  if (graph_count == 0) throw FormatError(indicator_path.string(), 0, "no nodes");
  for (std::size_t g = 0; g < graph_count; ++g) {
    if (graph_sizes[g] == 0)
      throw FormatError(indicator_path.string(), 0, "graph " + std::to_string(g + 1) + " has no nodes");
  }

  if (label_lines.size() != graph_count)
    throw FormatError(labels_path.string(), label_lines.size(),
                      "expected " + std::to_string(graph_count) + " graph labels");

  GraphDataset ds;
  ds.name = name;
  ds.graphs.resize(graph_count);
  std::map<long long, int> remap;
  for (std::size_t g = 0; g < graph_count; ++g) {
    const auto raw = parse_int(label_lines[g]);
    if (!raw) throw FormatError(labels_path.string(), g + 1, "non-integer label");
    auto [it, inserted] = remap.try_emplace(*raw, static_cast<int>(remap.size()));
    ds.graphs[g].label = it->second;
    ds.graphs[g].node_count = graph_sizes[g];
  }
  ds.num_classes = static_cast<int>(remap.size());

  for (std::size_t line = 0; line < edge_lines.size(); ++line) {
    if (trim(edge_lines[line]).empty()) continue;
    const auto parts = split_commas(edge_lines[line]);
    if (parts.size() != 2) throw FormatError(a_path.string(), line + 1, "expected 'i, j'");
    const auto i = parse_int(parts[0]);
    const auto j = parse_int(parts[1]);
    if (!i || !j) throw FormatError(a_path.string(), line + 1, "non-integer node id");
    const auto n = static_cast<long long>(node_graph.size());
    if (*i < 1 || *j < 1 || *i > n || *j > n)
      throw FormatError(a_path.string(), line + 1, "node id outside graph indicator");
    const auto u = static_cast<std::size_t>(*i - 1);
    const auto v = static_cast<std::size_t>(*j - 1);
    if (node_graph[u] != node_graph[v]) throw FormatError(a_path.string(), line + 1, "edge crosses graphs");
    ds.graphs[node_graph[u]].edges.emplace_back(node_local[u], node_local[v]);
  }
  for (Graph& g : ds.graphs) normalize_edges(g.edges);

  const fs::path node_labels_path = file("_node_labels.txt");
  const fs::path node_attr_path = file("_node_attributes.txt");
  if (auto lines = read_lines(node_labels_path)) {
    if (lines->size() != node_graph.size())
      throw FormatError(node_labels_path.string(), lines->size(), "node label count mismatch");
    std::vector<long long> values(lines->size());
    for (std::size_t k = 0; k < lines->size(); ++k) {
      const auto v = parse_int((*lines)[k]);
      if (!v) throw FormatError(node_labels_path.string(), k + 1, "non-integer node label");
      values[k] = *v;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const auto dim = static_cast<std::size_t>(*hi - *lo + 1);
    for (Graph& g : ds.graphs) {
      g.feature_dim = dim;
      g.features.assign(g.node_count * dim, 0.0);
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      Graph& g = ds.graphs[node_graph[k]];
      g.features[node_local[k] * dim + static_cast<std::size_t>(values[k] - *lo)] = 1.0;
    }
    ds.feature_dim = dim;
  } else if (auto attr_lines = read_lines(node_attr_path)) {
    if (attr_lines->size() != node_graph.size())
      throw FormatError(node_attr_path.string(), attr_lines->size(), "node attribute count mismatch");
    std::size_t dim = 0;
    for (std::size_t k = 0; k < attr_lines->size(); ++k) {
      const auto parts = split_commas((*attr_lines)[k]);
      if (k == 0) {
        dim = parts.size();
        for (Graph& g : ds.graphs) {
          g.feature_dim = dim;
          g.features.assign(g.node_count * dim, 0.0);
        }
      } else if (parts.size() != dim) {
        throw FormatError(node_attr_path.string(), k + 1, "inconsistent attribute count");
      }
      Graph& g = ds.graphs[node_graph[k]];
      for (std::size_t c = 0; c < dim; ++c) {
        const auto x = parse_real(parts[c]);
        if (!x) throw FormatError(node_attr_path.string(), k + 1, "non-numeric attribute");
        g.features[node_local[k] * dim + c] = *x;
      }
    }
    ds.feature_dim = dim;
  } else {
    ds.graphs = degree_features(std::move(ds.graphs), degree_cap);
    ds.feature_dim = degree_cap + 1;
  }

  ds.validate();
  return ds;
}

void write_tudataset(const GraphDataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::string a, indicator, labels, attrs;
  std::size_t offset = 1;
  for (std::size_t g = 0; g < dataset.graphs.size(); ++g) {
    const Graph& graph = dataset.graphs[g];
    for (const auto& [u, v] : graph.edges) {
      a += std::to_string(offset + u) + ", " + std::to_string(offset + v) + "\n";
      a += std::to_string(offset + v) + ", " + std::to_string(offset + u) + "\n";
    }
    for (std::size_t v = 0; v < graph.node_count; ++v) {
      indicator += std::to_string(g + 1) + "\n";
      for (std::size_t c = 0; c < graph.feature_dim; ++c) {
        if (c) attrs += ", ";
        attrs += format_real(graph.feature(v, c));
      }
      attrs += "\n";
    }
    labels += std::to_string(graph.label) + "\n";
    offset += graph.node_count;
  }
  const auto file = [&](const char* suffix) { return dir / (dataset.name + suffix); };
  write_file(file("_A.txt"), a);
  write_file(file("_graph_indicator.txt"), indicator);
  write_file(file("_graph_labels.txt"), labels);
  write_file(file("_node_attributes.txt"), attrs);
}

GraphDataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.families.empty()) throw ConfigError("synthetic spec needs at least one family");
  for (std::size_t f = 0; f < spec.families.size(); ++f) {
    const auto& fam = spec.families[f];
    if (fam.count < 20) throw ConfigError("synthetic family " + std::to_string(f) + " needs >= 20 graphs");
    if (fam.nodes < 2) throw ConfigError("synthetic family " + std::to_string(f) + " needs >= 2 nodes");
    if (!(fam.mean_degree >= 0.0)) throw ConfigError("synthetic mean degree must be non-negative");
    for (std::size_t h = 0; h < f; ++h) {
      if (spec.families[h].mean_degree == fam.mean_degree)
        throw ConfigError("synthetic families must have distinct mean degrees");
    }
  }

  Rng rng = make_rng(seed, Stream::kSynthetic);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GraphDataset ds;
  ds.name = spec.name;
  ds.num_classes = 2;
  std::array<std::size_t, 2> class_counts{0, 0};

  for (std::size_t f = 0; f < spec.families.size(); ++f) {
    const auto& fam = spec.families[f];
    const double p = std::min(1.0, fam.mean_degree / static_cast<double>(fam.nodes - 1));
    std::vector<Graph> members(fam.count);
    for (Graph& g : members) {
      g.node_count = fam.nodes;
      g.family = static_cast<int>(f);
      for (std::uint32_t u = 0; u < fam.nodes; ++u) {
        for (std::uint32_t v = u + 1; v < fam.nodes; ++v) {
          if (unit(rng) < p) g.edges.emplace_back(u, v);
        }
      }
    }
    std::vector<double> counts;
    counts.reserve(members.size());
    for (const Graph& g : members) counts.push_back(static_cast<double>(g.edges.size()));
    std::sort(counts.begin(), counts.end());
    const std::size_t mid = counts.size() / 2;
    const double median = counts.size() % 2 ? counts[mid] : 0.5 * (counts[mid - 1] + counts[mid]);
    for (Graph& g : members) {
      g.label = static_cast<double>(g.edges.size()) > median ? 1 : 0;
      ++class_counts[static_cast<std::size_t>(g.label)];
      ds.graphs.push_back(std::move(g));
    }
  }
  if (class_counts[0] < 2 || class_counts[1] < 2)
    throw ConfigError("synthetic spec yields fewer than 2 graphs in some class");

  std::shuffle(ds.graphs.begin(), ds.graphs.end(), rng);
  ds.graphs = degree_features(std::move(ds.graphs), spec.degree_cap);
  ds.feature_dim = spec.degree_cap + 1;
  ds.validate();
  return ds;
}

namespace {

void check_partition_args(const GraphDataset& dataset, std::size_t n_clients, double test_fraction) {
  if (n_clients == 0) throw ConfigError("n_clients must be positive");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must be in (0, 1)");
  const double needed = static_cast<double>(n_clients) +
                        std::ceil(test_fraction * static_cast<double>(dataset.size()));
  if (static_cast<double>(dataset.size()) < needed)
    throw ConfigError("dataset has " + std::to_string(dataset.size()) + " graphs, too few for " +
                      std::to_string(n_clients) + " clients plus the test split");
}

/// Shuffled indices with the test holdout split off the front.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_test(const GraphDataset& dataset,
                                                                         double test_fraction, Rng& rng) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto test_size = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(dataset.size())));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  std::sort(test.begin(), test.end());
  return {std::move(test), std::move(rest)};
}

std::vector<std::size_t> equal_sizes(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> sizes(parts, total / parts);
  for (std::size_t c = 0; c < total % parts; ++c) ++sizes[c];
  return sizes;
}

/// Largest-remainder rounding of proportions to integer sizes summing to total.
std::vector<std::size_t> round_sizes(const std::vector<double>& proportions, std::size_t total) {
  const std::size_t n = proportions.size();
  std::vector<std::size_t> sizes(n);
  std::vector<std::pair<double, std::size_t>> remainders(n);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double exact = proportions[c] * static_cast<double>(total);
    sizes[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[c];
    remainders[c] = {exact - std::floor(exact), c};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++sizes[remainders[k % n].second];
  return sizes;
}

std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& items,
                                            const std::vector<std::size_t>& sizes) {
  std::vector<std::vector<std::size_t>> shards(sizes.size());
  std::size_t pos = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    shards[c].assign(items.begin() + static_cast<std::ptrdiff_t>(pos),
                     items.begin() + static_cast<std::ptrdiff_t>(pos + sizes[c]));
    std::sort(shards[c].begin(), shards[c].end());
    pos += sizes[c];
  }
  return shards;
}

}  // namespace

PartitionPlan partition(const GraphDataset& dataset, std::size_t n_clients, double test_fraction,
                        double unevenness, std::uint64_t seed) {
  check_partition_args(dataset, n_clients, test_fraction);
  if (!(unevenness >= 0.0) || !std::isfinite(unevenness)) throw ConfigError("unevenness must be >= 0");

  Rng rng = make_rng(seed, Stream::kPartition);
  auto [test, rest] = split_test(dataset, test_fraction, rng);

  std::vector<std::size_t> sizes;
  if (unevenness == 0.0) {
    sizes = equal_sizes(rest.size(), n_clients);
  } else {
    constexpr double kMinUnevenness = 1e-9;
    const double alpha = 1.0 / std::max(unevenness, kMinUnevenness);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> draws(n_clients);
    double sum = 0.0;
    for (double& d : draws) sum += (d = gamma(rng));
    if (sum > 0.0) {
      for (double& d : draws) d /= sum;
    } else {
      // All draws underflowed (extreme unevenness): give everything to one client.
      std::fill(draws.begin(), draws.end(), 0.0);
      draws[std::uniform_int_distribution<std::size_t>(0, n_clients - 1)(rng)] = 1.0;
    }
    sizes = round_sizes(draws, rest.size());
    for (std::size_t c = 0; c < n_clients; ++c) {
      while (sizes[c] == 0) {
        auto largest = std::max_element(sizes.begin(), sizes.end());
        --*largest;
        ++sizes[c];
      }
    }
  }

  return PartitionPlan{chunk(rest, sizes), std::move(test), seed};
}

PartitionPlan partition_by_family(const GraphDataset& dataset, std::size_t n_clients, double test_fraction,
                                  std::uint64_t seed) {
  check_partition_args(dataset, n_clients, test_fraction);
  int family_count = 0;
  for (const Graph& g : dataset.graphs) {
    if (g.family < 0) throw ConfigError("partition_by_family needs family-tagged graphs");
    family_count = std::max(family_count, g.family + 1);
  }
  const auto families = static_cast<std::size_t>(family_count);
  if (n_clients < families) throw ConfigError("fewer clients than families");

  Rng rng = make_rng(seed, Stream::kPartition);
  auto [test, rest] = split_test(dataset, test_fraction, rng);

  std::vector<std::vector<std::size_t>> by_family(families);
  for (std::size_t idx : rest) by_family[static_cast<std::size_t>(dataset.graphs[idx].family)].push_back(idx);

  PartitionPlan plan;
  plan.client_shards.resize(n_clients);
  plan.test_indices = std::move(test);
  plan.seed = seed;
  for (std::size_t f = 0; f < families; ++f) {
    std::vector<std::size_t> clients;
    for (std::size_t c = 0; c < n_clients; ++c) {
      if (c * families / n_clients == f) clients.push_back(c);
    }
    const auto sizes = equal_sizes(by_family[f].size(), clients.size());
    auto shards = chunk(by_family[f], sizes);
    for (std::size_t k = 0; k < clients.size(); ++k) {
      if (shards[k].empty()) throw ConfigError("family " + std::to_string(f) + " too small for its clients");
      plan.client_shards[clients[k]] = std::move(shards[k]);
    }
  }
  return plan;
}

DatasetStats compute_stats(const GraphDataset& dataset) {
  DatasetStats stats;
  stats.graphs = dataset.size();
  stats.classes = dataset.num_classes;
  if (dataset.graphs.empty()) return stats;
  double nodes = 0.0, edges = 0.0;
  for (const Graph& g : dataset.graphs) {
    nodes += static_cast<double>(g.node_count);
    edges += static_cast<double>(g.edges.size());
  }
  stats.avg_nodes = nodes / static_cast<double>(stats.graphs);
  stats.avg_edges = edges / static_cast<double>(stats.graphs);
  return stats;
}

}  // namespace dgfl
