#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dgfl/client.hpp"
#include "dgfl/gin.hpp"

namespace dgfl {

struct DtwOptions {
  /// Sakoe-Chiba band half-width; cells with |i - j| > band are unreachable.
  std::optional<std::size_t> band_width;
  /// Keep every stride-th element before alignment (dtw_std only).
  std::size_t stride = 1;
};

enum class Similarity { kDtw, kCosine };
enum class Standardization { kSquash, kMinMaxRound };

/// Confidence configuration as exposed to experiments.
struct ConfidenceSettings {
  Similarity similarity = Similarity::kDtw;
  Standardization standardization = Standardization::kSquash;
  /// 0 = choose the smallest stride giving at most max_sequence_length samples.
  std::size_t stride = 0;
  /// 0 = band_fraction of the (downsampled) length, at least 1.
  std::size_t band = 0;
  std::size_t max_sequence_length = 2048;
  double band_fraction = 0.1;

  friend bool operator==(const ConfidenceSettings&, const ConfidenceSettings&) = default;
};

DtwOptions resolve_dtw_options(std::size_t gradient_length, const ConfidenceSettings& settings);

/// Classic DTW with |a_i - b_j| local cost. Throws InputError for empty input or
/// an infeasible band (|len a - len b| > band).
double dtw(std::span<const double> a, std::span<const double> b, const DtwOptions& opts = {});

/// (x - mean) / stddev; a constant sequence maps to zeros.
std::vector<double> z_normalize(std::span<const double> x);
std::vector<double> downsample(std::span<const double> x, std::size_t stride);

/// DTW of the z-normalized, downsampled sequences divided by their total length.
double normalized_dtw(std::span<const double> a, std::span<const double> b, const DtwOptions& opts);

/// d / (1 + d) of normalized_dtw; lies in [0, 1).
double dtw_std(std::span<const double> a, std::span<const double> b, const DtwOptions& opts);
double dtw_std(const GradientVector& a, const GradientVector& b, const DtwOptions& opts);

/// 1 - dtw_std. Symmetric, in (0, 1], and exactly 1 for identical inputs.
double confidence(const GradientVector& a, const GradientVector& b, const DtwOptions& opts);

/// (1 + cos) / 2, for similarity ablations.
double cosine_confidence(std::span<const double> a, std::span<const double> b);

struct ConfidenceRecord {
  int round = 0;
  std::map<int, double> values;
  double mean = 0.0;
};

/// Arithmetic mean over the senders (self excluded). Throws InputError when empty.
double mean_confidence(const std::map<int, double>& values);
ConfidenceRecord make_confidence_record(int round, std::map<int, double> values);

/// Senders whose confidence is >= the round mean, ascending by id.
std::vector<int> filter_senders(const ConfidenceRecord& record);

/// Conf_{i,j} for every message in `senders`, per the configured similarity and
/// standardization.
std::map<int, double> round_confidences(const GradientVector& local, std::span<const GradientMessage> senders,
                                        const ConfidenceSettings& settings);

struct WeightedGradient {
  const GradientVector* gradient = nullptr;
  double confidence = 0.0;
};

/// Confidence-weighted mean of the local gradient (weight 1) and the received
/// gradients rescaled to the local L2 norm. Reduction runs in sender-id order.
GradientVector aggregate(const GradientVector& local, const std::map<int, WeightedGradient>& samples);

}  // namespace dgfl
