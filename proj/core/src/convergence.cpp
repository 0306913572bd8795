#include "dgfl/convergence.hpp"

#include <algorithm>
#include <deque>

#include "dgfl/errors.hpp"

namespace dgfl {

std::optional<std::size_t> detect_convergence(std::span<const double> accuracy, const ConvergenceCriterion& criterion) {
  if (criterion.window < 2) throw InputError("convergence window must be >= 2");
  if (!(criterion.threshold > 0.0)) throw InputError("convergence threshold must be > 0");
  const std::size_t w = criterion.window;
  if (accuracy.size() < w) return std::nullopt;

  constexpr double kSlack = 1e-12;
  // Monotone deques of indices give the window max/min in O(n).
  std::deque<std::size_t> hi, lo;
  for (std::size_t k = 0; k < accuracy.size(); ++k) {
    while (!hi.empty() && accuracy[hi.back()] <= accuracy[k]) hi.pop_back();
    while (!lo.empty() && accuracy[lo.back()] >= accuracy[k]) lo.pop_back();
    hi.push_back(k);
    lo.push_back(k);
    if (k + 1 < w) continue;
    const std::size_t start = k + 1 - w;
    while (hi.front() < start) hi.pop_front();
    while (lo.front() < start) lo.pop_front();
    if (accuracy[hi.front()] - accuracy[lo.front()] <= criterion.threshold + kSlack) return start;
  }
  return std::nullopt;
}

}  // namespace dgfl
