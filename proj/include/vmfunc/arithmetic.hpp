#pragma once

#include "vmfunc/functional.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

namespace vmf {

/// Largest l^n an exact enumeration accepts.
inline constexpr double kEnumerationGuard = 2e7;

/// Cell probabilities p'_ν of the collectives, one vector per index ν,
/// used cyclically when shorter than n.
using CellProbabilities = std::vector<Eigen::VectorXd>;

/// p_n = (1/n)Σ p'_ν.
Eigen::VectorXd mean_cell_probabilities(const CellProbabilities &probs, std::size_t n);

/// Exact law of the count vector nρ after n trials.
///
/// Scalar is double or mpq_class. With mpq_class every sum is exact; the
/// per-collective rows are first rescaled to sum to exactly one.
template <class Scalar> struct FrequencyLaw {
  std::size_t n = 0;
  std::size_t cells = 0;
  std::map<std::vector<int>, Scalar> probability;
  std::vector<Scalar> p_n;

  /// E{ρ_λ}.
  std::vector<Scalar> mean() const;
  /// E{(ρ_λ - p_nλ)²}.
  std::vector<Scalar> dispersion() const;
};

/// Throws SizeGuardError when l^n exceeds kEnumerationGuard.
template <class Scalar>
FrequencyLaw<Scalar> enumerate_frequencies(const CellProbabilities &probs, std::size_t n);

/// ρ = counts / n, computed the same way everywhere so sampled and
/// enumerated values of f(ρ) compare bit-for-bit.
Eigen::VectorXd frequencies_from_counts(const std::vector<int> &counts, std::size_t n);

/// Law of f(ρ) as sorted (value, probability) pairs with equal values merged.
struct ArithmeticLaw {
  std::vector<std::pair<double, double>> atoms;
  double mean = 0.0;
  double variance = 0.0;

  double cdf(double x) const;
};

ArithmeticLaw enumerate_arithmetic(const CellProbabilities &probs, const ArithmeticFunction &f,
                                   std::size_t n);

/// Counts nρ of one simulated experiment; collective ν uses stream
/// (seed, replication, ν).
std::vector<int> draw_counts(const CellProbabilities &probs, std::size_t n, std::uint64_t seed,
                             std::uint64_t replication);

/// f(ρ) over `replications` simulated experiments.
std::vector<double> sample_arithmetic(const CellProbabilities &probs, const ArithmeticFunction &f,
                                      std::size_t n, std::size_t replications, std::uint64_t seed,
                                      unsigned threads = 1);

/// sup_x |F̂(x) - F(x)| between a sample and a discrete law.
double sup_distance(std::vector<double> samples, const ArithmeticLaw &law);

} // namespace vmf
