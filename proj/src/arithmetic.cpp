#include "vmfunc/arithmetic.hpp"

#include "vmfunc/errors.hpp"
#include "vmfunc/parallel.hpp"
#include "vmfunc/random.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vmf {

namespace {

void check_probabilities(const CellProbabilities &probs) {
  if (probs.empty()) {
    throw std::invalid_argument("cell probabilities must be nonempty");
  }
  const auto l = probs.front().size();
  if (l < 2) {
    throw std::invalid_argument("arithmetic case needs l >= 2 cells");
  }
  for (const auto &row : probs) {
    if (row.size() != l) {
      throw std::invalid_argument("all collectives need the same number of cells");
    }
    if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("cell probabilities must be nonnegative and sum to 1");
    }
  }
}

template <class Scalar> Scalar to_scalar(double x) { return Scalar(x); }

} // namespace

Eigen::VectorXd mean_cell_probabilities(const CellProbabilities &probs, std::size_t n) {
  check_probabilities(probs);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(probs.front().size());
  for (std::size_t nu = 0; nu < n; ++nu) {
    sum += probs[nu % probs.size()];
  }
  return sum / static_cast<double>(n);
}

template <class Scalar> std::vector<Scalar> FrequencyLaw<Scalar>::mean() const {
  std::vector<Scalar> out(cells, Scalar(0));
  for (const auto &[counts, p] : probability) {
    for (std::size_t c = 0; c < cells; ++c) {
      out[c] += p * Scalar(counts[c]);
    }
  }
  for (auto &value : out) {
    value /= Scalar(static_cast<long>(n));
  }
  return out;
}

template <class Scalar> std::vector<Scalar> FrequencyLaw<Scalar>::dispersion() const {
  std::vector<Scalar> out(cells, Scalar(0));
  for (const auto &[counts, p] : probability) {
    for (std::size_t c = 0; c < cells; ++c) {
      const Scalar d = Scalar(counts[c]) / Scalar(static_cast<long>(n)) - p_n[c];
      out[c] += p * d * d;
    }
  }
  return out;
}

template <class Scalar>
FrequencyLaw<Scalar> enumerate_frequencies(const CellProbabilities &probs, std::size_t n) {
  check_probabilities(probs);
  if (n < 1) {
    throw std::invalid_argument("enumeration needs n >= 1");
  }
  const auto l = static_cast<std::size_t>(probs.front().size());
  const double outcomes = std::pow(static_cast<double>(l), static_cast<double>(n));
  if (outcomes > kEnumerationGuard) {
    throw SizeGuardError("enumeration of l^n = " + std::to_string(l) + "^" + std::to_string(n) +
                         " outcomes exceeds the guard of 2e7");
  }
  std::vector<std::vector<Scalar>> rows;
  for (const auto &row : probs) {
    std::vector<Scalar> r(l);
    Scalar total(0);
    for (std::size_t c = 0; c < l; ++c) {
      r[c] = to_scalar<Scalar>(row[static_cast<Eigen::Index>(c)]);
      total += r[c];
    }
    for (auto &value : r) {
      value /= total;
    }
    rows.push_back(std::move(r));
  }

  FrequencyLaw<Scalar> law;
  law.n = n;
  law.cells = l;
  law.p_n.assign(l, Scalar(0));
  std::map<std::vector<int>, Scalar> current{{std::vector<int>(l, 0), Scalar(1)}};
  for (std::size_t nu = 0; nu < n; ++nu) {
    const auto &row = rows[nu % rows.size()];
    for (std::size_t c = 0; c < l; ++c) {
      law.p_n[c] += row[c];
    }
    std::map<std::vector<int>, Scalar> next;
    for (const auto &[counts, p] : current) {
      for (std::size_t c = 0; c < l; ++c) {
        if (row[c] == Scalar(0)) continue;
        auto grown = counts;
        ++grown[c];
        next[grown] += p * row[c];
      }
    }
    current = std::move(next);
  }
  for (auto &value : law.p_n) {
    value /= Scalar(static_cast<long>(n));
  }
  law.probability = std::move(current);
  return law;
}

template struct FrequencyLaw<double>;
template struct FrequencyLaw<mpq_class>;
template FrequencyLaw<double> enumerate_frequencies<double>(const CellProbabilities &,
                                                            std::size_t);
template FrequencyLaw<mpq_class> enumerate_frequencies<mpq_class>(const CellProbabilities &,
                                                                  std::size_t);

Eigen::VectorXd frequencies_from_counts(const std::vector<int> &counts, std::size_t n) {
  Eigen::VectorXd rho(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t c = 0; c < counts.size(); ++c) {
    rho[static_cast<Eigen::Index>(c)] = static_cast<double>(counts[c]) / static_cast<double>(n);
  }
  return rho;
}

double ArithmeticLaw::cdf(double x) const {
  double sum = 0.0;
  for (const auto &[value, p] : atoms) {
    if (value > x) break;
    sum += p;
  }
  return sum;
}

ArithmeticLaw enumerate_arithmetic(const CellProbabilities &probs, const ArithmeticFunction &f,
                                   std::size_t n) {
  const auto exact = enumerate_frequencies<mpq_class>(probs, n);
  std::map<double, mpq_class> merged;
  for (const auto &[counts, p] : exact.probability) {
    merged[f.value(frequencies_from_counts(counts, n))] += p;
  }
  ArithmeticLaw law;
  for (const auto &[value, p] : merged) {
    law.atoms.emplace_back(value, p.get_d());
  }
  // Moments accumulate in long double over the exact probabilities.
  long double mean = 0.0L;
  for (const auto &[value, p] : merged) {
    mean += static_cast<long double>(value) * static_cast<long double>(p.get_d());
  }
  long double variance = 0.0L;
  for (const auto &[value, p] : merged) {
    const long double d = static_cast<long double>(value) - mean;
    variance += d * d * static_cast<long double>(p.get_d());
  }
  law.mean = static_cast<double>(mean);
  law.variance = static_cast<double>(variance);
  return law;
}

std::vector<int> draw_counts(const CellProbabilities &probs, std::size_t n, std::uint64_t seed,
                             std::uint64_t replication) {
  const auto l = probs.front().size();
  std::vector<int> counts(static_cast<std::size_t>(l), 0);
  for (std::size_t nu = 0; nu < n; ++nu) {
    const auto &row = probs[nu % probs.size()];
    Stream stream({seed, replication, nu});
    const double u = stream.uniform();
    double cumulative = 0.0;
    Eigen::Index cell = l - 1;
    for (Eigen::Index c = 0; c < l; ++c) {
      cumulative += row[c];
      if (u < cumulative) {
        cell = c;
        break;
      }
    }
    // Rounding in the cumulative sum must never land on an impossible cell.
    while (row[cell] == 0.0 && cell > 0) {
      --cell;
    }
    ++counts[static_cast<std::size_t>(cell)];
  }
  return counts;
}

std::vector<double> sample_arithmetic(const CellProbabilities &probs, const ArithmeticFunction &f,
                                      std::size_t n, std::size_t replications, std::uint64_t seed,
                                      unsigned threads) {
  check_probabilities(probs);
  std::vector<double> out(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    out[r] = f.value(frequencies_from_counts(draw_counts(probs, n, seed, r), n));
  });
  return out;
}

double sup_distance(std::vector<double> samples, const ArithmeticLaw &law) {
  if (samples.empty()) {
    throw std::invalid_argument("sup distance needs samples");
  }
  std::sort(samples.begin(), samples.end());
  std::vector<double> points = samples;
  for (const auto &atom : law.atoms) {
    points.push_back(atom.first);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const double r = static_cast<double>(samples.size());
  double sup = 0.0;
  std::size_t atom = 0;
  double cumulative = 0.0;
  for (double x : points) {
    while (atom < law.atoms.size() && law.atoms[atom].first <= x) {
      cumulative += law.atoms[atom++].second;
    }
    const auto below = std::upper_bound(samples.begin(), samples.end(), x) - samples.begin();
    sup = std::max(sup, std::abs(static_cast<double>(below) / r - cumulative));
  }
  return sup;
}

} // namespace vmf
