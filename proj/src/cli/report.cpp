#include "vmfunc/cli/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace vmf::cli {

bool RunRecord::failed() const {
  return std::any_of(bound_margins.begin(), bound_margins.end(),
                     [](const BoundMargin &m) { return !m.passed; });
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, result.ptr);
}

namespace {

std::string csv_cell(const Cell &cell) {
  return std::visit(
      [](const auto &value) -> std::string {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (value.find_first_of(",\"\n") == std::string::npos) return value;
          std::string quoted = "\"";
          for (char c : value) {
            quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
          }
          return quoted + "\"";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(value);
        } else if constexpr (std::is_same_v<T, bool>) {
          return value ? "true" : "false";
        } else {
          return std::to_string(value);
        }
      },
      cell);
}

nlohmann::ordered_json json_cell(const Cell &cell) {
  return std::visit([](const auto &value) { return nlohmann::ordered_json(value); }, cell);
}

void write_file(const std::filesystem::path &path, const std::string &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << bytes;
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

} // namespace

std::string to_csv(const RunRecord &record) {
  std::string out;
  for (std::size_t i = 0; i < record.columns.size(); ++i) {
    out += (i ? "," : "") + record.columns[i];
  }
  out += "\n";
  for (const auto &row : record.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + csv_cell(row[i]);
    }
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json margin_json(const BoundMargin &m) {
  return {{"name", m.name},
          {"lhs", m.lhs},
          {"rhs", m.rhs},
          {"standard_error", m.standard_error},
          {"passed", m.passed}};
}

nlohmann::ordered_json normalizer_json(const AsymptoticNormalizer &n) {
  double max_r = 0.0;
  for (const auto &m : n.per_collective) max_r = std::max(max_r, m.r_sq);
  return {{"n", n.n},
          {"h_n", n.h_n},
          {"s_n_sq", n.s_n_sq},
          {"epsilon", n.epsilon},
          {"lyapunov_ratio_s_sq", n.lyapunov_ratio_s_sq},
          {"lyapunov_ratio_s", n.lyapunov_ratio_s},
          {"max_c_nu", n.max_c},
          {"max_r_nu_sq", max_r},
          {"monte_carlo", n.monte_carlo},
          {"warnings", n.warnings}};
}

nlohmann::ordered_json to_json(const RunRecord &record) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto &row : record.rows) {
    nlohmann::ordered_json object = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      object[record.columns[i]] = json_cell(row[i]);
    }
    rows.push_back(std::move(object));
  }
  nlohmann::ordered_json margins = nlohmann::ordered_json::array();
  for (const auto &m : record.bound_margins) {
    margins.push_back(margin_json(m));
  }
  return {{"experiment", record.experiment},
          {"name", record.name},
          {"config_digest", record.config_digest},
          {"version", record.version},
          {"seed", record.seed},
          {"threads", record.threads},
          {"wall_clock_seconds", record.wall_clock_seconds},
          {"status", record.failed() ? "FAILED" : "ok"},
          {"columns", record.columns},
          {"rows", rows},
          {"bound_margins", margins},
          {"warnings", record.warnings},
          {"details", record.details}};
}

std::pair<std::filesystem::path, std::filesystem::path>
emit_report(const RunRecord &record, const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  const auto csv = dir / (record.name + ".csv");
  const auto json = dir / (record.name + ".json");
  write_file(csv, to_csv(record));
  write_file(json, to_json(record).dump(2) + "\n");
  return {csv, json};
}

} // namespace vmf::cli
