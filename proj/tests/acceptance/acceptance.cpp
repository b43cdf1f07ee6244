// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "oracles.hpp"

#include "vmfunc/arithmetic.hpp"
#include "vmfunc/asymptotics.hpp"
#include "vmfunc/cli/experiments.hpp"
#include "vmfunc/parallel.hpp"
#include "vmfunc/vmcalc.hpp"

#include <gmpxx.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace vmf;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = VMFUNC_CONFIG_DIR;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool passed = false;
  std::string summary;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.4g", x);
  return buffer;
}

cli::RunRecord run_config(const char *name, unsigned threads) {
  const auto config = cli::load_config(kConfigs / name);
  return cli::run_experiment(config, cli::RunSettings{config.seed, threads});
}

double column(const cli::RunRecord &record, std::size_t row, const std::string &name) {
  const auto it = std::find(record.columns.begin(), record.columns.end(), name);
  const auto &cell = record.rows.at(row).at(static_cast<std::size_t>(it - record.columns.begin()));
  if (const auto *d = std::get_if<double>(&cell)) return *d;
  return static_cast<double>(std::get<std::int64_t>(cell));
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: derivative consistency over the catalog.

struct CatalogEntry {
  std::string label;
  Functional f;
  int dim;
};

std::vector<CatalogEntry> derivative_catalog() {
  std::vector<CatalogEntry> out;
  const auto yaml = [](const char *text) { return cli::build_functional(YAML::Load(text)); };
  for (int dim = 1; dim <= 3; ++dim) {
    out.push_back({"linear_sin", yaml("{kind: linear, function: sin}"), dim});
    out.push_back({"double_integral_product", yaml("{kind: double_integral, kernel: product}"), dim});
    out.push_back({"double_integral_gaussian", yaml("{kind: double_integral, kernel: gaussian}"), dim});
    out.push_back(
        {"double_integral_asymmetric", yaml("{kind: double_integral, kernel: asymmetric}"), dim});
  }
  out.push_back({"linear_polynomial",
                 yaml("{kind: linear, dim: 2, terms: [{coef: 1.0, exponents: [1, 0]}, "
                      "{coef: -0.5, exponents: [2, 1]}]}"),
                 2});
  for (const Exponents &e : {Exponents{3}, Exponents{1, 2}, Exponents{1, 1, 2}, Exponents{2, 0, 1}}) {
    const auto f = Functional::raw_moment(e);
    out.push_back({f.name(), f, static_cast<int>(e.size())});
  }
  // Every central moment of total order 1..4 in k = 1, 2, 3.
  for (int dim = 1; dim <= 3; ++dim) {
    Exponents e(static_cast<std::size_t>(dim), 0);
    std::function<void(std::size_t, int)> fill = [&](std::size_t i, int left) {
      if (i == e.size()) {
        const int total = 4 - left;
        if (total >= 1) {
          const auto f = Functional::central_moment(e);
          out.push_back({f.name(), f, dim});
        }
        return;
      }
      for (int v = 0; v <= left; ++v) {
        e[i] = v;
        fill(i + 1, left - v);
      }
    };
    fill(0, 4);
  }
  out.push_back({"correlation", Functional::correlation(), 2});
  out.push_back({"composite_variance", yaml("{kind: composite, preset: variance}"), 1});
  return out;
}

struct PairResult {
  double first_error = 0.0;
  double second_error = 0.0;
};

constexpr std::size_t kPairs = 50;
constexpr int kMaxAtoms = 20;

std::pair<DiscreteMeasure, DiscreteMeasure> pair_for(std::size_t entry, std::size_t pair, int dim) {
  Stream stream({kSeed, entry, pair});
  auto base = random_discrete_measure(dim, kMaxAtoms, stream);
  auto target = random_discrete_measure(dim, kMaxAtoms, stream);
  return {std::move(base), std::move(target)};
}

Outcome criterion_derivatives(int order, double tolerance) {
  const auto catalog = derivative_catalog();
  const std::size_t total = catalog.size() * kPairs;
  std::vector<double> errors(total, 0.0);
  parallel_for(total, default_threads(), [&](std::size_t i) {
    const auto &entry = catalog[i / kPairs];
    const auto [base, target] = pair_for(i / kPairs, i % kPairs, entry.dim);
    const DirectionalPath path{base, target};
    const auto kernel = linearize(entry.f, Expectation(base));
    const auto numeric = directional_derivative_numeric(entry.f, path, order);
    const double analytic = order == 1 ? first_variation(kernel, path.delta())
                                       : second_variation(kernel, path.delta());
    errors[i] = std::abs(numeric.value - analytic) / std::max(1.0, std::abs(numeric.value));
  });
  double worst = 0.0;
  std::string worst_label;
  for (std::size_t i = 0; i < total; ++i) {
    if (errors[i] > worst) {
      worst = errors[i];
      worst_label = catalog[i / kPairs].label + "/k=" + std::to_string(catalog[i / kPairs].dim);
    }
  }
  Outcome out;
  out.passed = worst <= tolerance;
  out.summary = std::to_string(catalog.size()) + " functionals x " + std::to_string(kPairs) +
                " pairs, max rel error " + fmt(worst) + " (" + worst_label + ") <= " + fmt(tolerance);

  if (order == 2) {
    // The m = 2 central moment: ∬f'' dΔ dΔ = -2 (∫y_i dΔ)².
    double worst_m2 = 0.0;
    for (int dim = 1; dim <= 3; ++dim) {
      for (int i = 0; i < dim; ++i) {
        Exponents e(static_cast<std::size_t>(dim), 0);
        e[static_cast<std::size_t>(i)] = 2;
        const auto f = Functional::central_moment(e);
        for (std::size_t p = 0; p < kPairs; ++p) {
          const auto [base, target] = pair_for(1000 + static_cast<std::size_t>(dim * 3 + i), p, dim);
          const auto delta = DiscreteMeasure::difference(base, target);
          const double mu = delta.integrate([i](PointRef y) { return y[i]; });
          const double q = second_variation(linearize(f, Expectation(base)), delta);
          worst_m2 = std::max(worst_m2, std::abs(q + 2.0 * mu * mu) / std::max(1.0, 2.0 * mu * mu));
        }
      }
    }
    out.passed = out.passed && worst_m2 <= 1e-12;
    out.summary += "; m=2 quadratic form -2(∫y_i dΔ)² max rel error " + fmt(worst_m2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: arithmetic oracle equivalence.

Outcome criterion_arithmetic() {
  constexpr std::size_t kReplications = 100000;
  const double threshold = 4.0 * std::sqrt(std::log(2000.0) / (2.0 * kReplications));
  Stream stream({kSeed, 3, 0});
  double worst = 0.0;
  bool exact_ok = true;
  int cases = 0;
  for (int cells : {2, 3}) {
    for (std::size_t n : {3u, 7u, 12u}) {
      CellProbabilities probs;
      for (int row = 0; row < 3; ++row) {
        Eigen::VectorXd p(cells);
        for (int c = 0; c < cells; ++c) p[c] = 0.05 + stream.uniform();
        probs.push_back(p / p.sum());
      }
      Eigen::VectorXd values(cells);
      for (int c = 0; c < cells; ++c) values[c] = 2.0 * stream.uniform() - 1.0;
      for (const auto &f : {ArithmeticFunction::power(0, 2, cells), ArithmeticFunction::linear(values)}) {
        const auto law = enumerate_arithmetic(probs, f, n);
        const auto samples = sample_arithmetic(probs, f, n, kReplications,
                                               kSeed + static_cast<std::uint64_t>(cases),
                                               default_threads());
        worst = std::max(worst, sup_distance(samples, law));
        ++cases;
      }
      // E{ρ_λ} = p_nλ and the dispersion bounds, exactly in rationals.
      const auto exact = enumerate_frequencies<mpq_class>(probs, n);
      const auto mean = exact.mean();
      const auto dispersion = exact.dispersion();
      mpq_class total = 0;
      for (int c = 0; c < cells; ++c) {
        const auto &p = exact.p_n[static_cast<std::size_t>(c)];
        exact_ok = exact_ok && mean[static_cast<std::size_t>(c)] == p;
        exact_ok = exact_ok &&
                   dispersion[static_cast<std::size_t>(c)] <= p * (1 - p) / static_cast<long>(n);
        total += dispersion[static_cast<std::size_t>(c)];
      }
      exact_ok = exact_ok && total <= mpq_class(1, static_cast<long>(n));
      for (const auto &m : frequency_bounds_check(probs, n, FrequencyOracle::Enumeration)) {
        exact_ok = exact_ok && m.passed;
      }
    }
  }
  Outcome out;
  out.passed = worst <= threshold && exact_ok;
  out.summary = std::to_string(cases) + " laws, max sup distance " + fmt(worst) + " <= " +
                fmt(threshold) + "; exact mean and dispersion checks " + (exact_ok ? "hold" : "FAIL");
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: normalizer cross-check.

Outcome criterion_normalizer() {
  const CellProbabilities coin{Eigen::Vector2d(0.5, 0.5)};
  const auto norm =
      normalizer_arithmetic(coin, ArithmeticFunction::linear(Eigen::Vector2d(1.0, 0.0)), 8);
  const auto record = run_config("clt_arithmetic_coin.yaml", default_threads());
  const double h = column(record, 0, "h_n");
  const double var = column(record, 0, "var_B_n");
  const double reps = column(record, 0, "replications");
  Outcome out;
  out.passed = norm.h_n == 4.0 && h == 4.0 && reps == 1e4 && var >= 0.475 && var <= 0.525;
  out.summary = "h_n = " + fmt(norm.h_n) + " (run " + fmt(h) + "), Var(B_n) = " + fmt(var) +
                " over " + fmt(reps) + " replications, in [0.475, 0.525]";
  return out;
}

// ---------------------------------------------------------------------------
// Criteria 5, 6, 8: CLT runs from the shipped configs.

Outcome criterion_linear_clt() {
  const auto record = run_config("clt_linear_uniform.yaml", default_threads());
  std::vector<double> ks;
  for (std::size_t r = 0; r < record.rows.size(); ++r) ks.push_back(column(record, r, "ks_distance"));
  bool monotone = ks.size() == 3;
  for (std::size_t i = 1; i < ks.size(); ++i) monotone = monotone && ks[i] <= ks[i - 1] + 0.005;
  const bool reps = column(record, 0, "replications") == 1e4;
  Outcome out;
  out.passed = monotone && reps && ks.back() <= 0.02;
  out.summary = "ks at n = 50, 500, 2000: " + fmt(ks[0]) + ", " + fmt(ks[1]) + ", " + fmt(ks[2]) +
                "; nonincreasing within 0.005 and last <= 0.02";
  return out;
}

Outcome criterion_correlation_clt() {
  const auto record = run_config("clt_correlation_fgm.yaml", default_threads());
  const double oracle_center = oracle::fgm_uniform_correlation(0.9);
  double center_gap = 0.0;
  for (const auto &d : record.details) {
    center_gap = std::max(center_gap, std::abs(d["center"].get<double>() - oracle_center));
  }
  std::vector<double> rem;
  std::vector<double> ns;
  for (std::size_t r = 0; r < record.rows.size(); ++r) {
    rem.push_back(column(record, r, "mean_abs_remainder"));
    ns.push_back(column(record, r, "n"));
  }
  bool ratios = ns == std::vector<double>{250, 500, 1000, 2000};
  std::string ratio_text;
  for (std::size_t i = 1; i < rem.size(); ++i) {
    const double ratio = rem[i - 1] / rem[i];
    ratios = ratios && ratio >= 1.2;
    ratio_text += (i > 1 ? ", " : "") + fmt(ratio);
  }
  const double ks = column(record, record.rows.size() - 1, "ks_distance");
  Outcome out;
  out.passed = center_gap <= 1e-9 && ks <= 0.03 && ratios &&
               column(record, 0, "replications") == 1e4;
  out.summary = "center - quadrature oracle " + fmt(center_gap) + "; ks at n = 2000 " + fmt(ks) +
                " <= 0.03; remainder ratios per doubling " + ratio_text + " (>= 1.2)";
  return out;
}

Outcome criterion_negative_control() {
  const auto record = run_config("clt_correlation_student_t2.yaml", default_threads());
  const double ks = column(record, 0, "ks_distance");
  Outcome out;
  out.passed = column(record, 0, "n") == 2000 && ks > 0.03;
  out.summary = "Student-t(2) ks at n = 2000 " + fmt(ks) + " > 0.03";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 7: bound suite.

Outcome criterion_bounds() {
  const auto record = run_config("bounds_suite.yaml", default_threads());
  int failed = 0;
  for (const auto &m : record.bound_margins) failed += !m.passed;
  bool majorant = false;
  bool exact_vector = false;
  const auto check_col = static_cast<std::size_t>(
      std::find(record.columns.begin(), record.columns.end(), "check") - record.columns.begin());
  for (const auto &row : record.rows) {
    const auto &name = std::get<std::string>(row[check_col]);
    majorant = majorant || name.ends_with(":ibp_majorant");
    exact_vector = exact_vector || name == "heterogeneous_cells:vector_dispersion";
  }
  Outcome out;
  out.passed = failed == 0 && majorant && exact_vector && !record.rows.empty();
  out.summary = std::to_string(record.bound_margins.size()) + " margins, " + std::to_string(failed) +
                " failed; majorant rows " + (majorant ? "present" : "MISSING") +
                "; exact vector dispersion " + (exact_vector ? "present" : "MISSING");
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-for-byte determinism through the tool.

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run_tool(const std::string &subcommand, const fs::path &config, const fs::path &dir) {
  const std::string command = std::string(VMFUNC_TOOL) + " " + subcommand + " --config " +
                              config.string() + " --threads 1 --out " + dir.string() +
                              " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion_determinism() {
  const auto root = fs::temp_directory_path() / ("vmfunc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<fs::path> configs;
  for (const auto &entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() == ".yaml") configs.push_back(entry.path());
  }
  std::sort(configs.begin(), configs.end());
  int compared = 0;
  std::string mismatch;
  for (const auto &config : configs) {
    const auto experiment = cli::load_config(config).experiment;
    const auto a = root / "a" / config.stem();
    const auto b = root / "b" / config.stem();
    fs::create_directories(a);
    fs::create_directories(b);
    const int code_a = run_tool(experiment, config, a);
    const int code_b = run_tool(experiment, config, b);
    const auto csv = config.stem().string() + ".csv";
    if (code_a != code_b || fs::exists(a / csv) != fs::exists(b / csv) ||
        slurp(a / csv) != slurp(b / csv)) {
      mismatch += " " + config.stem().string();
    }
    compared += fs::exists(a / csv);
  }
  fs::remove_all(root);
  Outcome out;
  out.passed = mismatch.empty() && compared > 0;
  out.summary = std::to_string(configs.size()) + " configs run twice single-threaded, " +
                std::to_string(compared) + " CSVs identical" +
                (mismatch.empty() ? "" : "; differ:" + mismatch);
  return out;
}

} // namespace

int main() {
  struct Criterion {
    int id;
    std::function<Outcome()> run;
    double time_limit; // seconds, 0 for none
  };
  const std::vector<Criterion> criteria = {
      {1, [] { return criterion_derivatives(1, 1e-6); }, 30},
      {2, [] { return criterion_derivatives(2, 1e-5); }, 60},
      {3, criterion_arithmetic, 0},
      {4, criterion_normalizer, 0},
      {5, criterion_linear_clt, 120},
      {6, criterion_correlation_clt, 600},
      {7, criterion_bounds, 0},
      {8, criterion_negative_control, 0},
      {9, criterion_determinism, 0},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception &e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    const bool in_time = c.time_limit == 0 || elapsed < c.time_limit;
    const bool passed = outcome.passed && in_time;
    failures += !passed;
    std::cout << "criterion " << c.id << ": " << (passed ? "PASS" : "FAIL") << "  "
              << outcome.summary << "  [" << fmt(elapsed) << " s"
              << (c.time_limit > 0 ? " < " + fmt(c.time_limit) + " s" : std::string()) << "]"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
