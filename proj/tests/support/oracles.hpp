#pragma once

// Slow, independent reference implementations used as test oracles. None of
// them call into the library code they are checking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dgfl/gin.hpp"
#include "dgfl/tudata.hpp"

namespace dgfl::oracle {

namespace detail {

inline void walk(std::span<const double> a, std::span<const double> b, std::optional<std::size_t> band, std::size_t i,
                 std::size_t j, double cost, double& best) {
  if (band) {
    const std::size_t gap = i > j ? i - j : j - i;
    if (gap > *band) return;
  }
  cost += std::abs(a[i] - b[j]);
  if (i + 1 == a.size() && j + 1 == b.size()) {
    best = std::min(best, cost);
    return;
  }
  if (i + 1 < a.size()) walk(a, b, band, i + 1, j, cost, best);
  if (j + 1 < b.size()) walk(a, b, band, i, j + 1, cost, best);
  if (i + 1 < a.size() && j + 1 < b.size()) walk(a, b, band, i + 1, j + 1, cost, best);
}

}  // namespace detail

/// Minimum path cost over every monotone warping path, enumerated one by one.
/// Infinity when the band admits no path.
inline double brute_force_dtw(std::span<const double> a, std::span<const double> b,
                              std::optional<std::size_t> band = std::nullopt) {
  double best = std::numeric_limits<double>::infinity();
  detail::walk(a, b, band, 0, 0, 0.0, best);
  return best;
}

/// Forward pass written against the dense (A + I) matrix, reading parameters
/// straight out of the flat vector.
struct DenseForward {
  std::vector<double> logits;
  /// Pre-activations per layer, node-major.
  std::vector<std::vector<double>> preactivations;
};

inline DenseForward dense_forward(std::span<const double> params, const GinDims& dims, const Graph& g) {
  const std::size_t n = g.node_count;
  std::vector<double> m(n * n, 0.0);
  for (std::size_t v = 0; v < n; ++v) m[v * n + v] = 1.0;
  for (const auto& [u, v] : g.edges) {
    m[u * n + v] += 1.0;
    m[v * n + u] += 1.0;
  }

  DenseForward out;
  std::vector<double> h = g.features;
  std::size_t d = dims.feature_dim;
  std::size_t offset = 0;
  for (std::size_t layer = 0; layer < dims.layers; ++layer) {
    const std::size_t d_out = dims.hidden;
    const double* w = params.data() + offset;
    const double* bias = w + d * d_out;
    offset += d * d_out + d_out;

    std::vector<double> mixed(n * d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t c = 0; c < d; ++c) mixed[r * d + c] += m[r * n + k] * h[k * d + c];

    std::vector<double> z(n * d_out, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d_out; ++c) {
        double s = bias[c];
        for (std::size_t k = 0; k < d; ++k) s += mixed[r * d + k] * w[k * d_out + c];
        z[r * d_out + c] = s;
      }
    out.preactivations.push_back(z);
    for (double& x : z) x = std::max(x, 0.0);
    h = std::move(z);
    d = d_out;
  }

  std::vector<double> pooled(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) pooled[c] += h[r * d + c] / static_cast<double>(n);

  const double* wc = params.data() + offset;
  const double* bc = wc + d * dims.num_classes;
  out.logits.assign(bc, bc + dims.num_classes);
  for (std::size_t c = 0; c < dims.num_classes; ++c)
    for (std::size_t k = 0; k < d; ++k) out.logits[c] += pooled[k] * wc[k * dims.num_classes + c];
  return out;
}

inline double cross_entropy(const std::vector<double>& logits, int label) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double x : logits) z += std::exp(x - top);
  return top + std::log(z) - logits[static_cast<std::size_t>(label)];
}

inline double dense_mean_loss(std::span<const double> params, const GinDims& dims, std::span<const Graph> batch) {
  double total = 0.0;
  for (const Graph& g : batch) total += cross_entropy(dense_forward(params, dims, g).logits, g.label);
  return total / static_cast<double>(batch.size());
}

inline std::vector<bool> relu_pattern(std::span<const double> params, const GinDims& dims, std::span<const Graph> batch) {
  std::vector<bool> pattern;
  for (const Graph& g : batch)
    for (const auto& layer : dense_forward(params, dims, g).preactivations)
      for (double z : layer) pattern.push_back(z > 0.0);
  return pattern;
}

struct FiniteDifferenceCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-step moved a pre-activation across zero; the loss is
  /// not differentiable there, so the central difference is not a valid oracle.
  std::size_t skipped_at_kink = 0;
};

/// Central differences of the dense reference loss against `analytic`.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline FiniteDifferenceCheck check_gradient(std::span<const double> params, const GinDims& dims,
                                            std::span<const Graph> batch, std::span<const double> analytic,
                                            double step = 1e-5, double floor = 1e-6) {
  FiniteDifferenceCheck result;
  const std::vector<bool> base = relu_pattern(params, dims, batch);
  std::vector<double> p(params.begin(), params.end());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double saved = p[k];
    p[k] = saved + step;
    const double up = dense_mean_loss(p, dims, batch);
    const bool kink_up = relu_pattern(p, dims, batch) != base;
    p[k] = saved - step;
    const double down = dense_mean_loss(p, dims, batch);
    const bool kink_down = relu_pattern(p, dims, batch) != base;
    p[k] = saved;
    if (kink_up || kink_down) {
      ++result.skipped_at_kink;
      continue;
    }
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[k] - numeric) / scale);
    ++result.checked;
  }
  return result;
}

/// Random small graph with dense Gaussian node features.
inline Graph random_graph(std::mt19937_64& rng, std::size_t max_nodes, std::size_t feature_dim, int num_classes,
                          double edge_probability = 0.4) {
  std::uniform_int_distribution<std::size_t> nodes(1, max_nodes);
  std::bernoulli_distribution coin(edge_probability);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, num_classes - 1);

  Graph g;
  g.node_count = nodes(rng);
  for (std::uint32_t u = 0; u < g.node_count; ++u)
    for (std::uint32_t v = u + 1; v < g.node_count; ++v)
      if (coin(rng)) g.edges.emplace_back(u, v);
  g.feature_dim = feature_dim;
  g.features.resize(g.node_count * feature_dim);
  for (double& x : g.features) x = normal(rng);
  g.label = label(rng);
  return g;
}

}  // namespace dgfl::oracle
