#include "dgfl/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "dgfl/errors.hpp"

namespace dgfl {

std::vector<double> accuracy_series(std::span<const RoundLog> logs) {
  std::vector<double> series;
  for (const RoundLog& log : logs) {
    if (log.evaluated) series.push_back(log.mean_accuracy());
  }
  return series;
}

RunSummary summarize(std::span<const RoundLog> logs, const std::string& method, const ConvergenceCriterion& criterion) {
  RunSummary s;
  s.method = method;
  s.rounds = logs.size();
  s.criterion = criterion;
  s.mean_accuracy = accuracy_series(logs);
  if (!s.mean_accuracy.empty()) s.final_mean_accuracy = s.mean_accuracy.back();
  for (const RoundLog& log : logs) s.total_wall_time_ms += log.wall_time_ms;

  if (const auto start = detect_convergence(s.mean_accuracy, criterion)) {
    std::size_t seen = 0;
    for (const RoundLog& log : logs) {
      if (!log.evaluated) continue;
      if (seen++ == *start) {
        s.convergence_round = log.round;
        break;
      }
    }
  }
  return s;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string metrics_rows(std::span<const RoundLog> logs, const std::string& prefix) {
  std::string out;
  for (const RoundLog& log : logs) {
    if (!log.evaluated) continue;
    for (std::size_t c = 0; c < log.clients.size(); ++c) {
      const ClientRoundEntry& e = log.clients[c];
      if (!prefix.empty()) out += prefix + ",";
      out += std::to_string(log.round) + "," + std::to_string(c) + "," + format_double(e.loss) + "," +
             format_double(e.accuracy) + "," + std::to_string(e.receiver) + "," + std::to_string(e.n_senders) + "," +
             format_double(e.grad_norm) + "\n";
    }
  }
  return out;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["method"] = s.method;
  j["rounds"] = s.rounds;
  j["final_mean_accuracy"] = s.final_mean_accuracy;
  j["convergence_round"] = s.convergence_round ? nlohmann::ordered_json(*s.convergence_round) : nlohmann::ordered_json(nullptr);
  j["convergence_window"] = s.criterion.window;
  j["convergence_threshold"] = s.criterion.threshold;
  j["total_wall_time_ms"] = s.total_wall_time_ms;
  j["mean_accuracy"] = s.mean_accuracy;
  return j.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void emit_metrics(std::span<const RoundLog> logs, const RunSummary& summary, const std::filesystem::path& out_dir) {
  write_atomic(out_dir / "metrics.csv", std::string(kMetricsHeader) + "\n" + metrics_rows(logs));
  write_atomic(out_dir / "summary.json", summary_json(summary));
}

}  // namespace dgfl
