#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace dgfl {

struct ConvergenceCriterion {
  /// Rounds in the window, >= 2.
  std::size_t window = 20;
  /// Allowed max - min accuracy inside the window, > 0.
  double threshold = 0.01;

  friend bool operator==(const ConvergenceCriterion&, const ConvergenceCriterion&) = default;
};

/// Smallest t with max(acc[t..t+W)) - min(acc[t..t+W)) <= threshold, or nullopt.
/// A slack of 1e-12 absorbs rounding in differences of accuracies.
std::optional<std::size_t> detect_convergence(std::span<const double> accuracy, const ConvergenceCriterion& criterion);

}  // namespace dgfl
