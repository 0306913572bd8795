#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dgfl/convergence.hpp"
#include "dgfl/errors.hpp"

using namespace dgfl;

namespace {

std::optional<std::size_t> brute_force(const std::vector<double>& acc, const ConvergenceCriterion& c) {
  for (std::size_t t = 0; t + c.window <= acc.size(); ++t) {
    const auto [lo, hi] = std::minmax_element(acc.begin() + static_cast<std::ptrdiff_t>(t),
                                              acc.begin() + static_cast<std::ptrdiff_t>(t + c.window));
    if (*hi - *lo <= c.threshold + 1e-12) return t;
  }
  return std::nullopt;
}

}  // namespace

TEST(Convergence, FlatSeriesConvergesImmediately) {
  const std::vector<double> flat(30, 0.7);
  EXPECT_EQ(detect_convergence(flat, {}), 0u);
}

TEST(Convergence, ShorterThanWindowNeverConverges) {
  const std::vector<double> acc(19, 0.5);
  EXPECT_FALSE(detect_convergence(acc, {}).has_value());
}

TEST(Convergence, RampThenPlateau) {
  std::vector<double> acc;
  for (int k = 0; k < 10; ++k) acc.push_back(0.1 * k);
  for (int k = 0; k < 25; ++k) acc.push_back(0.95 + (k % 2 ? 0.005 : -0.005));
  EXPECT_EQ(detect_convergence(acc, {}), 10u);
  EXPECT_EQ(detect_convergence(acc, {5, 0.1}), 9u);
}

TEST(Convergence, ThresholdIsInclusive) {
  std::vector<double> acc(20, 0.5);
  acc[7] = 0.51;
  EXPECT_EQ(detect_convergence(acc, {}), 0u);
  acc[7] = 0.5101;
  EXPECT_FALSE(detect_convergence(acc, {}).has_value());
}

TEST(Convergence, AgreesWithBruteForce) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<std::size_t> len(0, 60), win(2, 12);
  for (int trial = 0; trial < 2000; ++trial) {
    const ConvergenceCriterion c{win(rng), 0.02 + 0.2 * u(rng)};
    std::vector<double> acc(len(rng));
    double level = u(rng);
    for (double& a : acc) {
      level += 0.1 * (u(rng) - 0.5);
      a = level;
    }
    EXPECT_EQ(detect_convergence(acc, c), brute_force(acc, c)) << "trial " << trial;
  }
}

TEST(Convergence, RejectsBadCriterion) {
  const std::vector<double> acc(30, 0.5);
  EXPECT_THROW(detect_convergence(acc, {1, 0.01}), InputError);
  EXPECT_THROW(detect_convergence(acc, {20, 0.0}), InputError);
}
