#pragma once

#include "vmfunc/cli/config.hpp"
#include "vmfunc/cli/report.hpp"

namespace vmf::cli {

struct RunSettings {
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Dispatches on config.experiment. Throws ConfigError for schema problems
/// and SizeGuardError when an enumeration is too large.
RunRecord run_experiment(const ExperimentConfig &config, const RunSettings &settings);

RunRecord run_clt(const ExperimentConfig &config, const RunSettings &settings);
RunRecord run_deriv_check(const ExperimentConfig &config, const RunSettings &settings);
RunRecord run_enumerate(const ExperimentConfig &config, const RunSettings &settings);
RunRecord run_bounds(const ExperimentConfig &config, const RunSettings &settings);

} // namespace vmf::cli
