#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgfl/gin.hpp"

namespace dgfl {

inline constexpr int kCheckpointVersion = 1;

struct ClientSnapshot {
  std::vector<double> params;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;

  friend bool operator==(const ClientSnapshot&, const ClientSnapshot&) = default;
};

/// Complete resumable state after `round`. Random streams are derived from
/// (seed, client, round), so no generator state needs saving.
struct Checkpoint {
  std::string method;
  int round = 0;
  std::uint64_t seed = 0;
  GinDims dims;
  std::vector<ClientSnapshot> clients;
  /// Server parameters for client-server methods; empty for DGFL.
  std::vector<double> global_params;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// File layout: one line of JSON header (format tag, version, shapes, payload size),
/// then the payload as little-endian IEEE-754 doubles: per client params, first
/// moment, second moment; then the global parameters.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace dgfl
