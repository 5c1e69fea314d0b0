#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cstte/downstream/metrics.hpp"

namespace cstte::down {

struct Report {
  std::string task;      // "search" or "destination"
  std::string embedder;  // cstte, mean, dtw, markov, ...
  Metrics metrics;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, double>> extras;  // e.g. majority_rate
};

/// Human-readable block; metrics in percent.
std::string format_report(const Report& r);
/// key=value lines, full precision, no wall time (stable across replays).
std::string format_kv(const Report& r);

void write_report(const std::filesystem::path& text_path, const std::filesystem::path& kv_path,
                  const Report& r);

}  // namespace cstte::down
