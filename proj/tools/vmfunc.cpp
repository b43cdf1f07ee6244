#include "vmfunc/cli/experiments.hpp"
#include "vmfunc/errors.hpp"
#include "vmfunc/parallel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

std::optional<std::string> env(const char *name) {
  const char *value = std::getenv(name);
  if (value && *value) return std::string(value);
  return std::nullopt;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"von Mises statistical functionals: derivative checks, CLT runs, enumeration, bounds"};
  app.set_version_flag("--version", VMFUNC_VERSION);
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  for (const char *name : {"deriv-check", "clt-run", "enumerate", "bounds"}) {
    auto *sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (YAML, schema v1)")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (default: available parallelism)");
    sub->add_option("--out", out, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto config = vmf::cli::load_config(config_path);
    if (config.experiment != command) {
      std::cerr << "config " << config_path << " describes experiment '" << config.experiment
                << "', not '" << command << "'\n";
      return 1;
    }
    vmf::cli::RunSettings settings;
    settings.seed = seed.value_or(config.seed);
    if (threads) {
      settings.threads = *threads;
    } else if (auto value = env("VMFUNC_THREADS")) {
      settings.threads = static_cast<unsigned>(std::stoul(*value));
    } else {
      settings.threads = config.threads.value_or(vmf::default_threads());
    }
    settings.threads = std::max(1U, settings.threads);
    std::filesystem::path dir = ".";
    if (out) {
      dir = *out;
    } else if (auto value = env("VMFUNC_OUT")) {
      dir = *value;
    } else if (config.output_dir) {
      dir = *config.output_dir;
    }

    const auto record = vmf::cli::run_experiment(config, settings);
    const auto [csv, json] = vmf::cli::emit_report(record, dir);
    for (const auto &w : record.warnings) {
      std::cerr << "warning: " << w << "\n";
    }
    std::cout << csv.string() << "\n" << json.string() << "\n";
    if (record.failed()) {
      for (const auto &m : record.bound_margins) {
        if (!m.passed) {
          std::cerr << "FAILED " << m.name << ": lhs=" << m.lhs << " rhs=" << m.rhs
                    << " se=" << m.standard_error << "\n";
        }
      }
      return 2;
    }
    return 0;
  } catch (const vmf::cli::ConfigError &e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const vmf::SizeGuardError &e) {
    std::cerr << "size guard: " << e.what() << "\n";
    return 1;
  } catch (const vmf::DegenerateError &e) {
    std::cerr << "degenerate input: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument &e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
