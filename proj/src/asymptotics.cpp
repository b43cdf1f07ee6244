#include "vmfunc/asymptotics.hpp"

#include "vmfunc/errors.hpp"
#include "vmfunc/parallel.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vmf {

double gauss_phi(double u) { return 0.5 * std::erfc(-u); }

BoundMargin BoundMargin::check(std::string name, double lhs, double rhs, double standard_error) {
  BoundMargin m{std::move(name), lhs, rhs, standard_error, false};
  m.passed = lhs <= rhs + 3.0 * standard_error;
  return m;
}

BoundMargin BoundMargin::exact(std::string name, double lhs, double rhs, bool passed) {
  return BoundMargin{std::move(name), lhs, rhs, 0.0, passed};
}

namespace {

CollectiveMoments moments_on_measure(const DiscreteMeasure &m, const InfluenceKernel &kernel,
                                     double epsilon) {
  CollectiveMoments out;
  out.a = m.integrate([&](PointRef y) { return kernel.first(y); });
  out.r_sq = m.integrate([&](PointRef y) {
    const double d = kernel.first(y) - out.a;
    return d * d;
  });
  out.c = m.integrate(
      [&](PointRef y) { return std::pow(std::abs(kernel.first(y) - out.a), 2.0 + epsilon); });
  return out;
}

CollectiveMoments collective_moments(const DistributionModel &model, const InfluenceKernel &kernel,
                                     double epsilon, std::size_t budget, std::uint64_t seed,
                                     bool &monte_carlo) {
  if (auto measure = model.as_measure()) {
    return moments_on_measure(*measure, kernel, epsilon);
  }
  const auto &poly = kernel.first_polynomial();
  const Expectation e(model, budget, seed);
  if (poly) {
    const auto a = e.exact_mean(*poly);
    const auto second = e.exact_mean(*poly * *poly);
    if (a && second) {
      CollectiveMoments out;
      out.a = *a;
      out.r_sq = *second - *a * *a;
      // |f' - a|^{2+ε} is not polynomial; C_ν always comes from a sample.
      const Expectation sample(model, budget > 0 ? budget : kLyapunovBudget, seed);
      monte_carlo = true;
      out.c = sample.mean([&](PointRef y) {
        return std::pow(std::abs(kernel.first(y) - out.a), 2.0 + epsilon);
      });
      return out;
    }
  }
  if (budget == 0) {
    throw std::invalid_argument("normalizer needs a Monte Carlo budget for " + model.describe());
  }
  monte_carlo = true;
  return moments_on_measure(e.measure(), kernel, epsilon);
}

AsymptoticNormalizer finish_normalizer(AsymptoticNormalizer out, double second_total) {
  const double n = static_cast<double>(out.n);
  double s_sq = 0.0;
  for (const auto &m : out.per_collective) {
    s_sq += m.r_sq;
    if (std::isfinite(m.c)) {
      out.max_c = std::max(out.max_c, m.c);
    }
  }
  if (!(s_sq > 1e-12 * second_total) || !(s_sq > 0.0)) {
    throw DegenerateError("dispersion s_n^2 vanishes; h_n is undefined");
  }
  out.s_n_sq = s_sq;
  out.h_n = n / std::sqrt(2.0 * s_sq);
  const double scale = std::pow(n, 1.0 / (2.0 + out.epsilon));
  out.lyapunov_ratio_s_sq = s_sq / scale;
  out.lyapunov_ratio_s = std::sqrt(s_sq) / scale;
  return out;
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
}

} // namespace

AsymptoticNormalizer normalizer(const Functional &f, const CollectiveSequence &seq, std::size_t n,
                                double epsilon, std::size_t budget, std::uint64_t seed) {
  check_epsilon(epsilon);
  if (n < 1) {
    throw std::invalid_argument("normalizer needs n >= 1");
  }
  AsymptoticNormalizer out;
  out.n = n;
  out.epsilon = epsilon;
  const auto v_n = seq.mean_distribution(n);
  const Expectation base(v_n, budget, seed);
  const auto kernel = linearize(f, base);
  const std::size_t distinct = std::min(seq.period(), n);
  std::vector<CollectiveMoments> moments;
  for (std::size_t nu = 0; nu < distinct; ++nu) {
    const auto &model = seq.model(nu);
    if (auto warning = moment_warning(f, model);
        warning && std::find(out.warnings.begin(), out.warnings.end(), *warning) == out.warnings.end()) {
      out.warnings.push_back(*warning);
    }
    moments.push_back(
        collective_moments(model, kernel, epsilon, budget, seed, out.monte_carlo));
  }
  out.monte_carlo = out.monte_carlo || base.sampled();
  double second_total = 0.0;
  for (std::size_t nu = 0; nu < n; ++nu) {
    const auto &m = moments[nu % distinct];
    out.per_collective.push_back(m);
    second_total += m.r_sq + m.a * m.a;
  }
  return finish_normalizer(std::move(out), second_total);
}

AsymptoticNormalizer normalizer_arithmetic(const CellProbabilities &probs,
                                           const ArithmeticFunction &f, std::size_t n,
                                           double epsilon) {
  check_epsilon(epsilon);
  if (n < 1) {
    throw std::invalid_argument("normalizer needs n >= 1");
  }
  AsymptoticNormalizer out;
  out.n = n;
  out.epsilon = epsilon;
  const Eigen::VectorXd p_n = mean_cell_probabilities(probs, n);
  const Eigen::VectorXd g = f.gradient(p_n);
  double second_total = 0.0;
  for (std::size_t nu = 0; nu < n; ++nu) {
    const auto &p = probs[nu % probs.size()];
    CollectiveMoments m;
    m.a = g.dot(p);
    m.r_sq = g.array().square().matrix().dot(p) - m.a * m.a;
    m.c = ((g.array() - m.a).abs().pow(2.0 + epsilon)).matrix().dot(p);
    second_total += m.r_sq + m.a * m.a;
    out.per_collective.push_back(m);
  }
  return finish_normalizer(std::move(out), second_total);
}

std::vector<double> default_u_grid() {
  std::vector<double> grid(201);
  for (int i = 0; i < 201; ++i) {
    grid[static_cast<std::size_t>(i)] = -4.0 + 0.04 * i;
  }
  return grid;
}

double ks_on_grid(const std::vector<double> &values, const std::vector<double> &grid,
                  std::vector<double> *ecdf) {
  if (values.empty()) {
    throw std::invalid_argument("ks distance needs samples");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double r = static_cast<double>(sorted.size());
  double sup = 0.0;
  if (ecdf) ecdf->clear();
  for (double u : grid) {
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), u) - sorted.begin();
    const double p = static_cast<double>(below) / r;
    if (ecdf) ecdf->push_back(p);
    sup = std::max(sup, std::abs(p - gauss_phi(u)));
  }
  return sup;
}

double ks_to_phi(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("ks distance needs samples");
  }
  std::sort(values.begin(), values.end());
  const double r = static_cast<double>(values.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double phi = gauss_phi(values[i]);
    sup = std::max({sup, static_cast<double>(i + 1) / r - phi, phi - static_cast<double>(i) / r});
  }
  return sup;
}

LemmaGap lemma_gap(const std::vector<double> &a_values, const std::vector<double> &b_values) {
  if (a_values.size() != b_values.size()) {
    throw std::invalid_argument("lemma gap needs paired samples of equal length");
  }
  if (a_values.empty()) {
    throw std::invalid_argument("lemma gap needs samples");
  }
  LemmaGap out;
  double sum = 0.0;
  for (std::size_t i = 0; i < a_values.size(); ++i) {
    sum += std::abs(a_values[i] - b_values[i]);
  }
  out.mean_abs_gap = sum / static_cast<double>(a_values.size());
  out.sup_distance_a = ks_to_phi(a_values);
  out.sup_distance_b = ks_to_phi(b_values);
  return out;
}

bool AsymptoticReport::failed() const {
  return std::any_of(bound_margins.begin(), bound_margins.end(),
                     [](const BoundMargin &m) { return !m.passed; });
}

namespace {

void summarize(AsymptoticReport &report, const CltOptions &options) {
  const auto &a = report.a_values;
  const auto &b = report.b_values;
  const double r = static_cast<double>(a.size());
  report.u_grid = options.u_grid;
  report.ks_distance = ks_on_grid(a, options.u_grid, &report.ecdf);
  double gap = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    gap += std::abs(a[i] - b[i]);
    mean_b += b[i];
  }
  report.mean_abs_remainder = gap / r;
  mean_b /= r;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : b) {
    const double d = (x - mean_b) * (x - mean_b);
    m2 += d;
    m4 += d * d;
  }
  report.var_b_n = a.size() > 1 ? m2 / (r - 1.0) : 0.0;
  const double mean_sq = m2 / r;
  report.var_b_n_standard_error = std::sqrt(std::max(0.0, m4 / r - mean_sq * mean_sq) / r);
  report.bound_margins.push_back(BoundMargin::check(
      "var_B_n", std::abs(report.var_b_n - 0.5), 0.0, report.var_b_n_standard_error));
  if (options.ks_tolerance) {
    report.bound_margins.push_back(
        BoundMargin::check("ks_distance", report.ks_distance, *options.ks_tolerance, 0.0));
  }
}

} // namespace

AsymptoticReport clt_experiment(const Functional &f, const CollectiveSequence &seq, std::size_t n,
                                const CltOptions &options) {
  if (options.replications < 2) {
    throw std::invalid_argument("clt experiment needs at least 2 replications");
  }
  AsymptoticReport report;
  report.n = n;
  report.replications = options.replications;
  report.normalizer = normalizer(f, seq, n, options.epsilon, options.budget, options.seed);
  report.h_n = report.normalizer.h_n;
  report.s_n_sq = report.normalizer.s_n_sq;
  report.warnings = report.normalizer.warnings;

  const TaylorExpansion taylor(f, seq.mean_distribution(n), report.h_n, options.budget,
                               options.seed);
  report.center = taylor.base_value().value;
  report.center_standard_error = taylor.base_value().standard_error;

  report.a_values.resize(options.replications);
  report.b_values.resize(options.replications);
  parallel_for(options.replications, options.threads, [&](std::size_t r) {
    const auto d = taylor(draw_experiment(seq, n, options.seed, r));
    report.a_values[r] = d.a_n;
    report.b_values[r] = d.b_n;
  });
  summarize(report, options);

  const double shift = report.h_n * taylor.first_integral_standard_error();
  if (shift > 0.01 * std::sqrt(report.var_b_n)) {
    std::ostringstream out;
    out << "Monte Carlo error of the B_n centering (h_n * se = " << shift
        << ") exceeds 1% of sd(B_n); raise the budget above " << options.budget;
    report.warnings.push_back(out.str());
  }
  if (!options.keep_samples) {
    report.a_values.clear();
    report.b_values.clear();
  }
  return report;
}

AsymptoticReport clt_experiment_arithmetic(const CellProbabilities &probs,
                                           const ArithmeticFunction &f, std::size_t n,
                                           const CltOptions &options) {
  if (options.replications < 2) {
    throw std::invalid_argument("clt experiment needs at least 2 replications");
  }
  AsymptoticReport report;
  report.n = n;
  report.replications = options.replications;
  report.normalizer = normalizer_arithmetic(probs, f, n, options.epsilon);
  report.h_n = report.normalizer.h_n;
  report.s_n_sq = report.normalizer.s_n_sq;

  const Eigen::VectorXd p_n = mean_cell_probabilities(probs, n);
  const Eigen::VectorXd g = f.gradient(p_n);
  report.center = f.value(p_n);
  const double h = report.h_n;
  report.a_values.resize(options.replications);
  report.b_values.resize(options.replications);
  parallel_for(options.replications, options.threads, [&](std::size_t r) {
    const auto rho = frequencies_from_counts(draw_counts(probs, n, options.seed, r), n);
    report.a_values[r] = h * (f.value(rho) - report.center);
    report.b_values[r] = h * g.dot(rho - p_n);
  });
  summarize(report, options);
  if (!options.keep_samples) {
    report.a_values.clear();
    report.b_values.clear();
  }
  return report;
}

std::vector<BoundMargin> frequency_bounds_check(const CellProbabilities &probs, std::size_t n,
                                                FrequencyOracle oracle, std::size_t replications,
                                                std::uint64_t seed, unsigned threads) {
  std::vector<BoundMargin> out;
  if (oracle == FrequencyOracle::Enumeration) {
    const auto law = enumerate_frequencies<mpq_class>(probs, n);
    const auto mean = law.mean();
    const auto dispersion = law.dispersion();
    const mpq_class n_q(static_cast<long>(n));
    mpq_class total(0);
    for (std::size_t c = 0; c < law.cells; ++c) {
      const mpq_class &p = law.p_n[c];
      const mpq_class rhs = p * (1 - p) / n_q;
      const mpq_class gap = abs(mean[c] - p);
      out.push_back(BoundMargin::exact("mean_rho_" + std::to_string(c), gap.get_d(), 0.0, gap == 0));
      out.push_back(BoundMargin::exact("dispersion_rho_" + std::to_string(c),
                                       dispersion[c].get_d(), rhs.get_d(), dispersion[c] <= rhs));
      total += dispersion[c];
    }
    const mpq_class bound = 1 / n_q;
    out.push_back(BoundMargin::exact("vector_dispersion", total.get_d(), bound.get_d(), total <= bound));
    return out;
  }
  if (replications < 2) {
    throw std::invalid_argument("Monte Carlo frequency check needs at least 2 replications");
  }
  const Eigen::VectorXd p_n = mean_cell_probabilities(probs, n);
  const auto l = p_n.size();
  Eigen::MatrixXd squared(l + 1, static_cast<Eigen::Index>(replications));
  parallel_for(replications, threads, [&](std::size_t r) {
    const Eigen::VectorXd d = frequencies_from_counts(draw_counts(probs, n, seed, r), n) - p_n;
    const auto col = static_cast<Eigen::Index>(r);
    squared.col(col).head(l) = d.array().square().matrix();
    squared(l, col) = d.squaredNorm();
  });
  const double rr = static_cast<double>(replications);
  for (Eigen::Index c = 0; c <= l; ++c) {
    const Eigen::VectorXd row = squared.row(c).transpose();
    const double mean = row.mean();
    const double se = std::sqrt((row.array() - mean).square().sum() / (rr - 1.0) / rr);
    if (c < l) {
      out.push_back(BoundMargin::check("dispersion_rho_" + std::to_string(c), mean,
                                       p_n[c] * (1.0 - p_n[c]) / static_cast<double>(n), se));
    } else {
      out.push_back(BoundMargin::check("vector_dispersion", mean, 1.0 / static_cast<double>(n), se));
    }
  }
  return out;
}

} // namespace vmf
