#pragma once

#include "vmfunc/asymptotics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace vmf::cli {

using Cell = std::variant<std::string, double, std::int64_t, bool>;

/// Everything one run produces. The CSV is a projection of `rows`; the JSON
/// sidecar carries the rows plus all diagnostics.
struct RunRecord {
  std::string experiment;
  std::string name;
  std::string config_digest;
  std::string version;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json details = nlohmann::ordered_json::array();
  std::vector<std::string> warnings;
  std::vector<BoundMargin> bound_margins;

  bool failed() const;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

std::string to_csv(const RunRecord &record);
nlohmann::ordered_json to_json(const RunRecord &record);

nlohmann::ordered_json margin_json(const BoundMargin &m);
nlohmann::ordered_json normalizer_json(const AsymptoticNormalizer &n);

/// Writes <dir>/<name>.csv and <dir>/<name>.json; returns both paths.
std::pair<std::filesystem::path, std::filesystem::path>
emit_report(const RunRecord &record, const std::filesystem::path &dir);

} // namespace vmf::cli
