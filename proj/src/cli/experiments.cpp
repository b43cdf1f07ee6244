#include "vmfunc/cli/experiments.hpp"

#include "vmfunc/bounds.hpp"
#include "vmfunc/errors.hpp"
#include "vmfunc/vmcalc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace vmf::cli {

namespace {

RunRecord start(const ExperimentConfig &config, const RunSettings &settings,
                std::vector<std::string> columns) {
  RunRecord record;
  record.experiment = config.experiment;
  record.name = config.name;
  record.config_digest = config.digest;
  record.version = VMFUNC_VERSION;
  record.seed = settings.seed;
  record.threads = settings.threads;
  record.columns = std::move(columns);
  return record;
}

BoundMargin labeled(BoundMargin m, const std::string &prefix) {
  m.name = prefix + m.name;
  return m;
}

void add_unique(std::vector<std::string> &list, const std::vector<std::string> &items) {
  for (const auto &item : items) {
    if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(item);
  }
}

#define VMF_COMMON_KEYS "schema", "experiment", "name", "seed", "threads", "output_dir", "description"

} // namespace

RunRecord run_clt(const ExperimentConfig &config, const RunSettings &settings) {
  const auto &root = config.root;
  check_keys(root, "clt-run config",
             {VMF_COMMON_KEYS, "functional", "sequence", "arithmetic", "n", "replications",
              "epsilon", "budget", "u_grid", "ks_tolerance"},
             {"n", "replications"});
  RunRecord record = start(config, settings,
                           {"n", "replications", "ks_distance", "mean_abs_remainder", "h_n",
                            "s_n_sq", "var_B_n"});
  CltOptions options;
  options.replications = get<std::size_t>(root, "replications");
  options.seed = settings.seed;
  options.threads = settings.threads;
  options.epsilon = get_or<double>(root, "epsilon", 0.5);
  options.budget = get_or<std::size_t>(root, "budget", 0);
  options.keep_samples = true;
  if (root["ks_tolerance"]) {
    options.ks_tolerance = get<double>(root, "ks_tolerance");
  }
  if (const auto grid = root["u_grid"]) {
    check_keys(grid, "u_grid", {"lower", "upper", "points"}, {"lower", "upper", "points"});
    const double lower = get<double>(grid, "lower");
    const double upper = get<double>(grid, "upper");
    const int points = get<int>(grid, "points");
    if (points < 2 || !(upper > lower)) {
      fail(grid, "u_grid needs upper > lower and points >= 2");
    }
    options.u_grid.clear();
    for (int i = 0; i < points; ++i) {
      options.u_grid.push_back(lower + (upper - lower) * i / (points - 1));
    }
  }
  const auto schedule = build_schedule(root, "n");

  const bool arithmetic = static_cast<bool>(root["arithmetic"]);
  if (arithmetic == static_cast<bool>(root["functional"]) || arithmetic == static_cast<bool>(root["sequence"])) {
    fail(root, "clt-run needs either 'functional' with 'sequence', or 'arithmetic'");
  }
  std::optional<Functional> f;
  std::optional<CollectiveSequence> seq;
  CellProbabilities probs;
  std::optional<ArithmeticFunction> g;
  if (arithmetic) {
    const auto node = root["arithmetic"];
    check_keys(node, "arithmetic", {"cell_probs", "function"}, {"cell_probs", "function"});
    probs = build_cell_probabilities(node["cell_probs"]);
    g = build_arithmetic_function(node["function"], static_cast<int>(probs.front().size()));
  } else {
    f = build_functional(root["functional"]);
    seq = build_sequence(root["sequence"]);
  }

  for (std::size_t n : schedule) {
    const auto report = arithmetic ? clt_experiment_arithmetic(probs, *g, n, options)
                                   : clt_experiment(*f, *seq, n, options);
    record.rows.push_back({static_cast<std::int64_t>(n),
                           static_cast<std::int64_t>(report.replications), report.ks_distance,
                           report.mean_abs_remainder, report.h_n, report.s_n_sq, report.var_b_n});
    const auto gap = lemma_gap(report.a_values, report.b_values);
    nlohmann::ordered_json margins = nlohmann::ordered_json::array();
    for (const auto &m : report.bound_margins) {
      margins.push_back(margin_json(m));
      record.bound_margins.push_back(labeled(m, "n=" + std::to_string(n) + ":"));
    }
    record.details.push_back({{"n", n},
                              {"center", report.center},
                              {"center_standard_error", report.center_standard_error},
                              {"budget", options.budget},
                              {"var_B_n_standard_error", report.var_b_n_standard_error},
                              {"normalizer", normalizer_json(report.normalizer)},
                              {"lemma_gap",
                               {{"mean_abs_gap", gap.mean_abs_gap},
                                {"sup_distance_A", gap.sup_distance_a},
                                {"sup_distance_B", gap.sup_distance_b}}},
                              {"u_grid", report.u_grid},
                              {"ecdf", report.ecdf},
                              {"bound_margins", margins},
                              {"warnings", report.warnings}});
    add_unique(record.warnings, report.warnings);
  }
  return record;
}

RunRecord run_deriv_check(const ExperimentConfig &config, const RunSettings &settings) {
  const auto &root = config.root;
  check_keys(root, "deriv-check config",
             {VMF_COMMON_KEYS, "functionals", "pairs", "max_atoms", "dims", "first_tolerance",
              "second_tolerance"},
             {"functionals"});
  RunRecord record = start(config, settings,
                           {"functional", "dim", "pairs", "max_first_rel_error",
                            "max_second_rel_error", "nonconverged"});
  const auto pairs = get_or<std::size_t>(root, "pairs", 50);
  const int max_atoms = get_or<int>(root, "max_atoms", 20);
  const auto dims = get_or<std::vector<int>>(root, "dims", {1, 2, 3});
  const double first_tol = get_or<double>(root, "first_tolerance", 1e-6);
  const double second_tol = get_or<double>(root, "second_tolerance", 1e-5);
  const auto list = root["functionals"];
  if (!list.IsSequence()) {
    fail(list, "functionals must be a list");
  }
  std::uint64_t stream_id = 0;
  for (const auto &entry : list) {
    // An optional label names the row; the rest describes the functional.
    auto node = YAML::Clone(entry);
    std::string label;
    if (node.IsMap() && node["label"]) {
      label = get<std::string>(node, "label");
      node.remove("label");
    }
    const auto f = build_functional(node);
    if (label.empty()) label = f.name();
    std::vector<int> use = dims;
    if (auto d = f.required_dim()) use = {*d};
    for (int dim : use) {
      Stream stream({settings.seed, stream_id++, 0});
      double first = 0.0;
      double second = 0.0;
      std::int64_t nonconverged = 0;
      for (std::size_t p = 0; p < pairs; ++p) {
        const auto base = random_discrete_measure(dim, max_atoms, stream);
        const auto target = random_discrete_measure(dim, max_atoms, stream);
        const auto check = check_derivatives(f, base, target);
        first = std::max(first, check.first_relative_error());
        second = std::max(second, check.second_relative_error());
        nonconverged += !check.first_numeric.converged;
      }
      record.rows.push_back({label, static_cast<std::int64_t>(dim),
                             static_cast<std::int64_t>(pairs), first, second, nonconverged});
      const auto prefix = label + "/k=" + std::to_string(dim) + ":";
      record.bound_margins.push_back(BoundMargin::check(prefix + "first", first, first_tol, 0.0));
      record.bound_margins.push_back(BoundMargin::check(prefix + "second", second, second_tol, 0.0));
    }
  }
  return record;
}

RunRecord run_enumerate(const ExperimentConfig &config, const RunSettings &settings) {
  const auto &root = config.root;
  check_keys(root, "enumerate config", {VMF_COMMON_KEYS, "cell_probs", "function", "n", "epsilon"},
             {"cell_probs", "function", "n"});
  RunRecord record = start(config, settings,
                           {"n", "mean", "variance", "f_p_n", "linear_variance", "h_n",
                            "bounds_passed"});
  const auto probs = build_cell_probabilities(root["cell_probs"]);
  const auto f = build_arithmetic_function(root["function"], static_cast<int>(probs.front().size()));
  const double epsilon = get_or<double>(root, "epsilon", 0.5);
  for (std::size_t n : build_schedule(root, "n")) {
    const auto law = enumerate_arithmetic(probs, f, n);
    const auto norm = normalizer_arithmetic(probs, f, n, epsilon);
    const auto p_n = mean_cell_probabilities(probs, n);
    const auto margins = frequency_bounds_check(probs, n, FrequencyOracle::Enumeration);
    const bool passed = std::all_of(margins.begin(), margins.end(),
                                    [](const BoundMargin &m) { return m.passed; });
    const double nn = static_cast<double>(n);
    record.rows.push_back({static_cast<std::int64_t>(n), law.mean, law.variance, f.value(p_n),
                           norm.s_n_sq / (nn * nn), norm.h_n, passed});
    nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
    for (const auto &[value, p] : law.atoms) {
      atoms.push_back({value, p});
    }
    nlohmann::ordered_json margin_list = nlohmann::ordered_json::array();
    for (const auto &m : margins) {
      margin_list.push_back(margin_json(m));
      record.bound_margins.push_back(labeled(m, "n=" + std::to_string(n) + ":"));
    }
    record.details.push_back({{"n", n},
                              {"law", atoms},
                              {"normalizer", normalizer_json(norm)},
                              {"bound_margins", margin_list}});
  }
  return record;
}

namespace {

struct Worst {
  std::optional<BoundMargin> margin;
  double slack = std::numeric_limits<double>::infinity();

  void offer(const BoundMargin &m, double tolerance) {
    const double s = m.rhs + tolerance + 3.0 * m.standard_error - m.lhs;
    if (!margin || s < slack || (margin->passed && !m.passed)) {
      margin = m;
      slack = s;
    }
  }
};

void add_row(RunRecord &record, const std::string &label, std::size_t n, const BoundMargin &m) {
  record.rows.push_back({label + ":" + m.name, static_cast<std::int64_t>(n), m.lhs, m.rhs,
                         m.standard_error, m.passed});
  record.bound_margins.push_back(labeled(m, label + ":n=" + std::to_string(n) + ":"));
}

void run_weighted(RunRecord &record, const YAML::Node &node, const RunSettings &settings) {
  check_keys(node, "weighted_deviation check",
             {"kind", "label", "sequence", "n", "replications", "grid", "weight", "functional"},
             {"sequence", "n", "replications", "grid", "weight"});
  const auto label = get_or<std::string>(node, "label", "weighted_deviation");
  const auto seq = build_sequence(node["sequence"]);
  const auto grid = build_grid(node["grid"], seq.dim());
  const auto weight = build_weight(node["weight"]);
  const auto replications = get<std::size_t>(node, "replications");
  std::optional<Functional> f;
  if (node["functional"]) f = build_functional(node["functional"]);
  for (std::size_t n : build_schedule(node, "n")) {
    const auto result =
        weighted_deviation_check(weight, seq, n, replications, grid, settings.seed, settings.threads);
    add_row(record, label, n, result.margin);
    nlohmann::ordered_json detail = {{"check", label},
                                     {"n", n},
                                     {"truncated_mass", result.truncated_mass},
                                     {"truncation_flag", result.truncation_flag}};
    if (f) {
      const auto norm = normalizer(*f, seq, n);
      detail["normalized_weight_integral"] =
          normalized_weight_integral(weight, seq.mean_distribution(n), grid, norm.s_n_sq);
    }
    if (result.truncation_flag) {
      add_unique(record.warnings, {label + ": more than 1% of V_n mass lies outside the grid box"});
    }
    record.details.push_back(std::move(detail));
  }
}

void run_ibp(RunRecord &record, const YAML::Node &node, const RunSettings &settings) {
  check_keys(node, "ibp check",
             {"kind", "label", "sequence", "n", "replications", "grid", "integrand", "budget",
              "majorant", "schwarz_weight"},
             {"sequence", "n", "replications", "grid", "integrand"});
  const auto label = get_or<std::string>(node, "label", "ibp");
  const auto seq = build_sequence(node["sequence"]);
  if (seq.dim() != 2) {
    fail(node["sequence"], "ibp checks need a two-dimensional sequence");
  }
  IbpOptions options;
  options.grid = build_grid(node["grid"], 2);
  options.budget = get_or<std::size_t>(node, "budget", 0);
  options.seed = settings.seed;
  if (const auto m = node["majorant"]) {
    check_keys(m, "majorant", {"c"}, {"c"});
    const double c = get<double>(m, "c");
    options.majorant = [c](PointRef x) { return c + 2.0 * x.norm(); };
  }
  if (node["schwarz_weight"]) {
    if (!options.majorant) {
      fail(node["schwarz_weight"], "schwarz_weight needs a majorant");
    }
    options.schwarz_weight = build_weight(node["schwarz_weight"]);
  }
  const auto alpha = Integrand::from_polynomial(build_polynomial(node["integrand"], 2));
  const auto replications = get<std::size_t>(node, "replications");
  for (std::size_t n : build_schedule(node, "n")) {
    const auto v_n = seq.mean_distribution(n);
    Worst main, boundary, majorant, schwarz;
    double residual = 0.0;
    bool truncated = false;
    for (std::size_t r = 0; r < replications; ++r) {
      const auto result = ibp_bound_2d(alpha, draw_experiment(seq, n, settings.seed, r), v_n, options);
      auto m = result.margin();
      main.offer(m, result.quadrature_tolerance);
      BoundMargin b{"ibp_boundary_form", result.lhs, result.rhs_boundary_form,
                    result.lhs_standard_error, false};
      b.passed = b.lhs <= b.rhs + result.quadrature_tolerance + 3.0 * b.standard_error;
      boundary.offer(b, result.quadrature_tolerance);
      if (result.majorant) majorant.offer(*result.majorant, 0.0);
      if (result.schwarz) schwarz.offer(*result.schwarz, 0.0);
      residual = std::max(residual, result.identity_residual);
      truncated = truncated || result.truncation_flag;
    }
    add_row(record, label, n, *main.margin);
    add_row(record, label, n, *boundary.margin);
    if (majorant.margin) add_row(record, label, n, *majorant.margin);
    if (schwarz.margin) add_row(record, label, n, *schwarz.margin);
    if (truncated) {
      add_unique(record.warnings,
                 {label + ": sample points or more than 1% of V_n mass lie outside the grid box"});
    }
    record.details.push_back({{"check", label},
                              {"n", n},
                              {"draws", replications},
                              {"max_identity_residual", residual},
                              {"truncation_flag", truncated}});
  }
}

void run_frequency(RunRecord &record, const YAML::Node &node, const RunSettings &settings) {
  check_keys(node, "frequency check", {"kind", "label", "cell_probs", "n", "oracle", "replications"},
             {"cell_probs", "n"});
  const auto label = get_or<std::string>(node, "label", "frequency");
  const auto probs = build_cell_probabilities(node["cell_probs"]);
  const auto oracle_name = get_or<std::string>(node, "oracle", "enumeration");
  FrequencyOracle oracle;
  if (oracle_name == "enumeration") {
    oracle = FrequencyOracle::Enumeration;
  } else if (oracle_name == "monte_carlo") {
    oracle = FrequencyOracle::MonteCarlo;
  } else {
    fail(node["oracle"], "oracle must be 'enumeration' or 'monte_carlo'");
  }
  const auto replications = get_or<std::size_t>(node, "replications", 0);
  for (std::size_t n : build_schedule(node, "n")) {
    for (const auto &m :
         frequency_bounds_check(probs, n, oracle, replications, settings.seed, settings.threads)) {
      add_row(record, label, n, m);
    }
  }
}

} // namespace

RunRecord run_bounds(const ExperimentConfig &config, const RunSettings &settings) {
  const auto &root = config.root;
  check_keys(root, "bounds config", {VMF_COMMON_KEYS, "checks"}, {"checks"});
  RunRecord record = start(config, settings, {"check", "n", "lhs", "rhs", "se", "passed"});
  const auto checks = root["checks"];
  if (!checks.IsSequence()) {
    fail(checks, "checks must be a list");
  }
  for (const auto &node : checks) {
    const auto kind = get<std::string>(node, "kind");
    if (kind == "weighted_deviation") {
      run_weighted(record, node, settings);
    } else if (kind == "ibp") {
      run_ibp(record, node, settings);
    } else if (kind == "frequency") {
      run_frequency(record, node, settings);
    } else {
      fail(node["kind"], "unknown check kind '" + kind + "'");
    }
  }
  return record;
}

RunRecord run_experiment(const ExperimentConfig &config, const RunSettings &settings) {
  const auto begin = std::chrono::steady_clock::now();
  RunRecord record;
  if (config.experiment == "clt-run") {
    record = run_clt(config, settings);
  } else if (config.experiment == "deriv-check") {
    record = run_deriv_check(config, settings);
  } else if (config.experiment == "enumerate") {
    record = run_enumerate(config, settings);
  } else if (config.experiment == "bounds") {
    record = run_bounds(config, settings);
  } else {
    throw ConfigError("unknown experiment '" + config.experiment + "'");
  }
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return record;
}

} // namespace vmf::cli
