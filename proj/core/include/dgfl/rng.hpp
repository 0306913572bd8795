#pragma once

#include <cstdint>
#include <random>

namespace dgfl {

using Rng = std::mt19937_64;

/// Purpose-separated random streams derived from the master seed.
enum class Stream : std::uint64_t {
  kPartition = 1,
  kInit = 2,
  kTraining = 3,
  kReceiver = 4,
  kSynthetic = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash of (seed, stream, client, round). Independent of the order in which
/// clients are scheduled, so parallel execution replays bitwise.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t client = 0,
                                    std::uint64_t round = 0) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ client);
  h = splitmix64(h ^ (round * 0x2545f4914f6cdd1dULL));
  return h;
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t client = 0,
                    std::uint64_t round = 0) {
  return Rng(derive_seed(master, stream, client, round));
}

}  // namespace dgfl
