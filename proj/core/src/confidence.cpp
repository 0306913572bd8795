#include "dgfl/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dgfl/errors.hpp"

namespace dgfl {

DtwOptions resolve_dtw_options(std::size_t gradient_length, const ConfidenceSettings& settings) {
  DtwOptions opts;
  const std::size_t max_len = std::max<std::size_t>(settings.max_sequence_length, 1);
  opts.stride = settings.stride != 0 ? settings.stride : std::max<std::size_t>(1, (gradient_length + max_len - 1) / max_len);
  const std::size_t sampled = (gradient_length + opts.stride - 1) / opts.stride;
  if (settings.band != 0) {
    opts.band_width = settings.band;
  } else if (settings.band_fraction < 1.0) {
    const auto band = static_cast<std::size_t>(std::ceil(settings.band_fraction * static_cast<double>(sampled)));
    opts.band_width = std::max<std::size_t>(1, band);
  }
  return opts;
}

double dtw(std::span<const double> a, std::span<const double> b, const DtwOptions& opts) {
  if (a.empty() || b.empty()) throw InputError("dtw: empty sequence");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t longest = std::max(n, m);
  std::size_t band = longest;
  if (opts.band_width) {
    if (*opts.band_width == 0) throw InputError("dtw: band width must be >= 1");
    band = std::min(*opts.band_width, longest);
    const std::size_t gap = n > m ? n - m : m - n;
    if (gap > band)
      throw InputError("dtw: band " + std::to_string(band) + " cannot reach the end cell (length gap " +
                       std::to_string(gap) + ")");
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Row 0 is the virtual origin: D(0,0) = 0, D(0,j>0) = inf.
  std::vector<double> prev(m + 1, kInf);
  std::vector<double> cur(m + 1, kInf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > band ? i - band : 1;
    const std::size_t hi = std::min(m, i + band);
    cur[lo - 1] = kInf;
    for (std::size_t j = lo; j <= hi; ++j) {
      const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = std::abs(a[i - 1] - b[j - 1]) + best;
    }
    if (hi < m) cur[hi + 1] = kInf;
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<double> z_normalize(std::span<const double> x) {
  std::vector<double> z(x.size(), 0.0);
  if (x.empty()) return z;
  const double count = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / count;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / count);
  if (!(sd > 0.0) || !std::isfinite(sd)) return z;
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - mean) / sd;
  return z;
}

std::vector<double> downsample(std::span<const double> x, std::size_t stride) {
  if (stride == 0) throw InputError("downsample: stride must be >= 1");
  std::vector<double> out;
  out.reserve((x.size() + stride - 1) / stride);
  for (std::size_t k = 0; k < x.size(); k += stride) out.push_back(x[k]);
  return out;
}

double normalized_dtw(std::span<const double> a, std::span<const double> b, const DtwOptions& opts) {
  const auto za = downsample(z_normalize(a), opts.stride);
  const auto zb = downsample(z_normalize(b), opts.stride);
  const double d = dtw(za, zb, opts);
  return d / static_cast<double>(za.size() + zb.size());
}

double dtw_std(std::span<const double> a, std::span<const double> b, const DtwOptions& opts) {
  if (a.size() != b.size())
    throw ShapeError("dtw_std: gradient lengths differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  const double d = normalized_dtw(a, b, opts);
  return d / (1.0 + d);
}

double dtw_std(const GradientVector& a, const GradientVector& b, const DtwOptions& opts) {
  return dtw_std(a.values, b.values, opts);
}

double confidence(const GradientVector& a, const GradientVector& b, const DtwOptions& opts) {
  return 1.0 - dtw_std(a, b, opts);
}

double cosine_confidence(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_confidence: length mismatch");
  const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.5;
  return std::clamp(0.5 * (1.0 + dot / (na * nb)), 0.0, 1.0);
}

double mean_confidence(const std::map<int, double>& values) {
  if (values.empty()) throw InputError("mean_confidence: no senders");
  double total = 0.0;
  for (const auto& [sender, c] : values) total += c;
  return total / static_cast<double>(values.size());
}

ConfidenceRecord make_confidence_record(int round, std::map<int, double> values) {
  ConfidenceRecord record;
  record.round = round;
  record.mean = mean_confidence(values);
  record.values = std::move(values);
  return record;
}

std::vector<int> filter_senders(const ConfidenceRecord& record) {
  std::vector<int> sample;
  for (const auto& [sender, c] : record.values) {
    if (c >= record.mean) sample.push_back(sender);
  }
  return sample;
}

std::map<int, double> round_confidences(const GradientVector& local, std::span<const GradientMessage> senders,
                                        const ConfidenceSettings& settings) {
  std::map<int, double> out;
  if (senders.empty()) return out;

  if (settings.similarity == Similarity::kCosine) {
    for (const auto& msg : senders) out[msg.sender] = cosine_confidence(local.values, msg.gradient.values);
    return out;
  }

  const DtwOptions opts = resolve_dtw_options(local.values.size(), settings);
  if (settings.standardization == Standardization::kSquash) {
    for (const auto& msg : senders) out[msg.sender] = confidence(local, msg.gradient, opts);
    return out;
  }

  // Min-max over this round's distances: the closest sender gets 1, the farthest 0.
  std::map<int, double> distances;
  for (const auto& msg : senders) {
    if (msg.gradient.values.size() != local.values.size()) throw ShapeError("round_confidences: length mismatch");
    distances[msg.sender] = normalized_dtw(local.values, msg.gradient.values, opts);
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [sender, d] : distances) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  for (const auto& [sender, d] : distances) out[sender] = hi > lo ? 1.0 - (d - lo) / (hi - lo) : 1.0;
  return out;
}

GradientVector aggregate(const GradientVector& local, const std::map<int, WeightedGradient>& samples) {
  GradientVector out = local;
  if (samples.empty()) return out;

  const std::size_t length = local.values.size();
  const double local_norm = local.norm();
  double total = 1.0;
  for (const auto& [sender, wg] : samples) {
    if (wg.gradient == nullptr) throw InputError("aggregate: null gradient for sender " + std::to_string(sender));
    if (wg.gradient->values.size() != length)
      throw ShapeError("aggregate: gradient from sender " + std::to_string(sender) + " has wrong length");
    if (!(wg.confidence >= 0.0 && wg.confidence <= 1.0))
      throw InputError("aggregate: confidence outside [0, 1]");
    total += wg.confidence;
  }

  // (g + sum_j c_j h_j) / (1 + sum_j c_j) written as g + sum_j (c_j / S)(h_j - g):
  // the same convex combination, and exact when every h_j equals g.
  std::vector<double> rescaled(length);
  for (const auto& [sender, wg] : samples) {
    const auto& g = wg.gradient->values;
    const double norm = wg.gradient->norm();
    const double scale = norm > 0.0 ? local_norm / norm : 0.0;
    for (std::size_t k = 0; k < length; ++k) rescaled[k] = norm == local_norm ? g[k] : g[k] * scale;
    const double weight = wg.confidence / total;
    for (std::size_t k = 0; k < length; ++k) out.values[k] += weight * (rescaled[k] - local.values[k]);
  }
  return out;
}

}  // namespace dgfl
