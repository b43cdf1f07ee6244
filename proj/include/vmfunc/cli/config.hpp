#pragma once

#include "vmfunc/arithmetic.hpp"
#include "vmfunc/bounds.hpp"
#include "vmfunc/functional.hpp"
#include "vmfunc/repartition.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vmf::cli {

/// Schema or parse failure; the message names the key and line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char *kSchemaVersion = "v1";

struct ExperimentConfig {
  std::string experiment;
  std::string name;
  std::string text;
  std::string digest; // SHA-256 of the config bytes
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  std::optional<std::filesystem::path> output_dir;
  YAML::Node root;
};

ExperimentConfig load_config(const std::filesystem::path &path);
ExperimentConfig parse_config(const std::string &text, const std::string &name);

std::string sha256_hex(const std::string &bytes);

/// Rejects keys outside `allowed` and requires every key in `required`.
void check_keys(const YAML::Node &node, const std::string &context,
                std::initializer_list<const char *> allowed,
                std::initializer_list<const char *> required = {});

[[noreturn]] void fail(const YAML::Node &node, const std::string &message);

template <class T> T get(const YAML::Node &node, const char *key) {
  const auto child = node[key];
  if (!child) {
    fail(node, std::string("missing key '") + key + "'");
  }
  try {
    return child.as<T>();
  } catch (const YAML::Exception &) {
    fail(child, std::string("key '") + key + "' has the wrong type");
  }
}

template <class T> T get_or(const YAML::Node &node, const char *key, T fallback) {
  return node[key] ? get<T>(node, key) : fallback;
}

Marginal build_marginal(const YAML::Node &node);
DistributionModel build_model(const YAML::Node &node);
CollectiveSequence build_sequence(const YAML::Node &node);
Polynomial build_polynomial(const YAML::Node &node, int dim);
Functional build_functional(const YAML::Node &node);
CellProbabilities build_cell_probabilities(const YAML::Node &node);
ArithmeticFunction build_arithmetic_function(const YAML::Node &node, int cells);
QuadratureGrid build_grid(const YAML::Node &node, int dim);
PointFunction build_weight(const YAML::Node &node);
std::vector<std::size_t> build_schedule(const YAML::Node &node, const char *key);

} // namespace vmf::cli
