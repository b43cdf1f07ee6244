#pragma once

#include "vmfunc/arithmetic.hpp"
#include "vmfunc/functional.hpp"
#include "vmfunc/repartition.hpp"
#include "vmfunc/vmcalc.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vmf {

/// Limiting CDF φ(u) = (1/√π)∫_{-∞}^u e^{-t²} dt, a normal law of variance ½.
double gauss_phi(double u);

/// A checked inequality lhs <= rhs, accepted within 3 standard errors.
struct BoundMargin {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double standard_error = 0.0;
  bool passed = true;

  static BoundMargin check(std::string name, double lhs, double rhs, double standard_error);
  /// Exact comparison decided elsewhere (enumeration in rationals).
  static BoundMargin exact(std::string name, double lhs, double rhs, bool passed);
};

struct CollectiveMoments {
  double a = 0.0;    // ∫f' dV'_ν
  double r_sq = 0.0; // ∫(f' - a)² dV'_ν
  double c = 0.0;    // ∫|f' - a|^{2+ε} dV'_ν
};

struct AsymptoticNormalizer {
  std::size_t n = 0;
  double h_n = 0.0;
  double s_n_sq = 0.0;
  double epsilon = 0.5;
  /// One entry per collective ν < n.
  std::vector<CollectiveMoments> per_collective;
  /// Lyapunov diagnostics; both readings of the ratio are reported.
  double lyapunov_ratio_s_sq = 0.0; // s_n² / n^{1/(2+ε)}
  double lyapunov_ratio_s = 0.0;    // s_n / n^{1/(2+ε)}
  double max_c = 0.0;
  bool monte_carlo = false;
  std::vector<std::string> warnings;
};

/// Sample size for C_ν when the caller gives no Monte Carlo budget.
inline constexpr std::size_t kLyapunovBudget = 100000;

/// h_n from 1/(2h_n²) = s_n²/n²; throws DegenerateError when s_n² vanishes.
AsymptoticNormalizer normalizer(const Functional &f, const CollectiveSequence &seq, std::size_t n,
                                double epsilon = 0.5, std::size_t budget = 0,
                                std::uint64_t seed = 0);

/// Arithmetic-case normalizer with f_λ = ∂f/∂ρ_λ at p_n.
AsymptoticNormalizer normalizer_arithmetic(const CellProbabilities &probs,
                                           const ArithmeticFunction &f, std::size_t n,
                                           double epsilon = 0.5);

/// 201 points on [-4, 4].
std::vector<double> default_u_grid();

struct CltOptions {
  std::size_t replications = 1000;
  std::uint64_t seed = 0;
  double epsilon = 0.5;
  std::size_t budget = 0;
  unsigned threads = 1;
  std::vector<double> u_grid = default_u_grid();
  /// Adds a ks_distance <= tolerance margin when set.
  std::optional<double> ks_tolerance;
  bool keep_samples = false;
};

struct AsymptoticReport {
  std::size_t n = 0;
  std::size_t replications = 0;
  std::vector<double> u_grid;
  std::vector<double> ecdf;
  double ks_distance = 0.0;
  double mean_abs_remainder = 0.0;
  double var_b_n = 0.0;
  double var_b_n_standard_error = 0.0;
  double h_n = 0.0;
  double s_n_sq = 0.0;
  double center = 0.0; // f{V_n}
  double center_standard_error = 0.0;
  AsymptoticNormalizer normalizer;
  std::vector<BoundMargin> bound_margins;
  std::vector<std::string> warnings;
  std::vector<double> a_values;
  std::vector<double> b_values;

  bool failed() const;
};

/// Monte Carlo law of A_n = h_n(f{S_n} - f{V_n}) with B_n and the remainder.
AsymptoticReport clt_experiment(const Functional &f, const CollectiveSequence &seq, std::size_t n,
                                const CltOptions &options);

/// Same experiment in the arithmetic case: A_n = h_n(f(ρ) - f(p_n)),
/// B_n = h_n Σ f_λ(ρ_λ - p_nλ).
AsymptoticReport clt_experiment_arithmetic(const CellProbabilities &probs,
                                           const ArithmeticFunction &f, std::size_t n,
                                           const CltOptions &options);

/// sup over the grid of |P̂(u) - φ(u)|, and the ECDF itself.
double ks_on_grid(const std::vector<double> &values, const std::vector<double> &grid,
                  std::vector<double> *ecdf = nullptr);
/// Exact sup_u |P̂(u) - φ(u)| over the real line.
double ks_to_phi(std::vector<double> values);

struct LemmaGap {
  double mean_abs_gap = 0.0;
  double sup_distance_a = 0.0;
  double sup_distance_b = 0.0;
};

LemmaGap lemma_gap(const std::vector<double> &a_values, const std::vector<double> &b_values);

enum class FrequencyOracle { Enumeration, MonteCarlo };

/// Per-cell Var{ρ_λ} <= p_nλ(1-p_nλ)/n and E{|ρ - p_n|²} <= 1/n. Under
/// enumeration both sides are exact rationals and the comparison has no
/// tolerance.
std::vector<BoundMargin> frequency_bounds_check(const CellProbabilities &probs, std::size_t n,
                                                FrequencyOracle oracle,
                                                std::size_t replications = 0,
                                                std::uint64_t seed = 0, unsigned threads = 1);

} // namespace vmf
