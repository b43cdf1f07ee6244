#pragma once

#include "vmfunc/marginal.hpp"
#include "vmfunc/polynomial.hpp"
#include "vmfunc/random.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vmf {

/// Finitely supported (possibly signed) measure: one atom per column.
///
/// Repartitions, discrete cell models, and points on segments between them
/// all reduce to this, which makes every Stieltjes integral a finite sum.
struct DiscreteMeasure {
  Eigen::MatrixXd atoms;   // k x m
  Eigen::VectorXd weights; // m

  int dim() const { return static_cast<int>(atoms.rows()); }
  Eigen::Index size() const { return atoms.cols(); }
  double total_mass() const { return weights.sum(); }

  /// Σ w_i g(x_i).
  template <class F> double integrate(F &&g) const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
      sum += weights[i] * g(atoms.col(i));
    }
    return sum;
  }

  double raw_moment(std::span<const int> exponents) const;
  double cdf(PointRef x) const;

  /// (1-t)·base + t·target on the union of atoms.
  static DiscreteMeasure segment(const DiscreteMeasure &base, const DiscreteMeasure &target,
                                 double t);
  /// target - base on the union of atoms (total mass zero for two distributions).
  static DiscreteMeasure difference(const DiscreteMeasure &base, const DiscreteMeasure &target);
};

class DistributionModel;

/// Product of one-dimensional marginals.
struct IndependentProduct {
  std::vector<Marginal> marginals;
};

/// Two marginals joined by a Farlie–Gumbel–Morgenstern copula
/// C(u,v) = uv[1 + θ(1-u)(1-v)], θ ∈ [-1, 1].
struct FgmCopula2D {
  Marginal first;
  Marginal second;
  double theta = 0.0;
};

/// Point masses; one atom per column, probabilities summing to one.
struct DiscreteCells {
  Eigen::MatrixXd atoms;
  Eigen::VectorXd probs;
};

/// Equal-weight mixture (the mean distribution of a collective sequence).
struct Mixture {
  std::vector<DistributionModel> members;
};

/// Immutable k-dimensional distribution. Copies share state.
class DistributionModel {
public:
  using Kind = std::variant<IndependentProduct, FgmCopula2D, DiscreteCells, Mixture>;

  static DistributionModel independent(std::vector<Marginal> marginals);
  static DistributionModel fgm(Marginal first, Marginal second, double theta);
  static DistributionModel discrete(Eigen::MatrixXd atoms, Eigen::VectorXd probs);
  static DistributionModel mixture(std::vector<DistributionModel> members);

  const Kind &kind() const { return *kind_; }
  int dim() const { return dim_; }

  /// Joint CDF P(ξ_i <= x_i for all i). Infinite coordinates are allowed.
  double cdf(PointRef x) const;

  Point sample(Stream &stream) const;

  /// Exact E[x^v] when available (discrete always; continuous up to
  /// kMaxExactMomentOrder when every factor has a closed form).
  std::optional<double> raw_moment(std::span<const int> exponents) const;
  MomentOracle moment_oracle() const;

  /// Atom representation if the model is discrete (or a mixture of discrete models).
  std::optional<DiscreteMeasure> as_measure() const;

  /// Smallest Student-t dof among the marginals, if any.
  std::optional<double> min_student_dof() const;

  std::string describe() const;

private:
  DistributionModel(std::shared_ptr<const Kind> kind, int dim)
      : kind_(std::move(kind)), dim_(dim) {}

  std::shared_ptr<const Kind> kind_;
  int dim_;
};

} // namespace vmf
