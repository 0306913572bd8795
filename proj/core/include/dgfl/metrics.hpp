#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgfl/convergence.hpp"
#include "dgfl/round_log.hpp"

namespace dgfl {

inline constexpr const char* kMetricsHeader = "round,client,loss,accuracy,receiver,n_senders,grad_norm";

struct RunSummary {
  std::string method;
  std::size_t rounds = 0;
  double final_mean_accuracy = 0.0;
  /// Round number at which the convergence window starts; nullopt if never.
  std::optional<int> convergence_round;
  ConvergenceCriterion criterion;
  std::int64_t total_wall_time_ms = 0;
  std::vector<double> mean_accuracy;
};

/// Mean client accuracy of every evaluated round, in round order.
std::vector<double> accuracy_series(std::span<const RoundLog> logs);

RunSummary summarize(std::span<const RoundLog> logs, const std::string& method, const ConvergenceCriterion& criterion);

/// %.17g
std::string format_double(double x);

/// CSV body rows (no header) for evaluated rounds, round then client ascending.
/// A non-empty prefix is prepended as an extra leading column.
std::string metrics_rows(std::span<const RoundLog> logs, const std::string& prefix = {});

std::string summary_json(const RunSummary& summary);

/// Writes metrics.csv and summary.json into out_dir (created if needed), each via
/// write-to-temp-then-rename.
void emit_metrics(std::span<const RoundLog> logs, const RunSummary& summary, const std::filesystem::path& out_dir);

/// Atomically replaces `path` with `contents`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace dgfl
