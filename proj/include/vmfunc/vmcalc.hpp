#pragma once

#include "vmfunc/functional.hpp"

#include <functional>
#include <optional>

namespace vmf {

/// First and second von Mises derivatives of a functional frozen at a base
/// distribution V: y -> f'{V, Y} and (y, z) -> f''{V, Y, Z}.
///
/// f' is defined up to an additive constant and f'' up to terms depending on
/// only one of Y, Z; both are only meaningful when integrated against
/// signed measures of total mass zero.
class InfluenceKernel {
public:
  double first(PointRef y) const { return first_(y); }
  double second(PointRef y, PointRef z) const { return second_(y, z); }

  /// f' as a polynomial in Y, when it is one.
  const std::optional<Polynomial> &first_polynomial() const { return polynomial_; }
  /// f'' vanishes identically (linear functionals).
  bool is_linear() const { return linear_; }

private:
  friend InfluenceKernel linearize(const Functional &f, const Expectation &base);

  std::function<double(PointRef)> first_;
  std::function<double(PointRef, PointRef)> second_;
  std::optional<Polynomial> polynomial_;
  bool linear_ = false;
};

/// Builds the derivative kernel of f at `base`. Throws NoAnalyticDerivative
/// for kinds without one and DegenerateError when the base makes f singular.
InfluenceKernel linearize(const Functional &f, const Expectation &base);

/// f'{V, Y}. The model must supply every moment the formula needs exactly
/// (discrete models always do).
double influence_first(const Functional &f, const DistributionModel &v, PointRef y);
double influence_first(const Functional &f, const DiscreteMeasure &v, PointRef y);

/// f''{V, Y, Z}, same preconditions.
double influence_second(const Functional &f, const DistributionModel &v, PointRef y, PointRef z);
double influence_second(const Functional &f, const DiscreteMeasure &v, PointRef y, PointRef z);

/// ∫f'{V,Y} dΔ(Y) for a finite signed measure Δ.
double first_variation(const InfluenceKernel &kernel, const DiscreteMeasure &delta);
/// ∬f''{V,Y,Z} dΔ(Y) dΔ(Z); `swap_arguments` evaluates f''(Z,Y) instead.
double second_variation(const InfluenceKernel &kernel, const DiscreteMeasure &delta,
                        bool swap_arguments = false);

/// Segment V_1 + t(V - V_1), t ∈ [0, 1], between two finite measures.
struct DirectionalPath {
  DiscreteMeasure base;
  DiscreteMeasure target;

  static DirectionalPath between(const DistributionModel &base, const DistributionModel &target);
  static DirectionalPath toward(const DistributionModel &base, const Repartition &target);

  DiscreteMeasure at(double t) const;
  double cdf(PointRef x, double t) const;
  /// V - V_1.
  DiscreteMeasure delta() const;
};

/// Fixed one-sided step ladder t = 2^-7, ..., 2^-12 for the Richardson tableau.
inline constexpr int kRichardsonFirstExponent = 7;
inline constexpr int kRichardsonLevels = 6;

struct NumericDerivative {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
};

/// F'(0+) (order 1) or F''(0+) (order 2) of F(t) = f{V_1 + t(V - V_1)} by
/// forward differences with Richardson extrapolation. `converged` is false
/// when the tableau error exceeds tolerance·max(1, |value|).
NumericDerivative directional_derivative_numeric(const Functional &f, const DirectionalPath &path,
                                                 int order, double tolerance = 1e-7);

/// Standardized increment split A_n = B_n + remainder.
struct TaylorDecomposition {
  double a_n = 0.0;
  double b_n = 0.0;
  double remainder = 0.0;
  double h_n = 0.0;
};

/// Taylor expansion of f frozen at V_n with normalizer h_n, reusable across
/// many repartitions S_n.
class TaylorExpansion {
public:
  TaylorExpansion(const Functional &f, const DistributionModel &v_n, double h_n,
                  std::size_t budget = 0, std::uint64_t seed = 0);

  TaylorDecomposition operator()(const Repartition &s_n) const;

  const Functional &functional() const { return f_; }
  const InfluenceKernel &kernel() const { return kernel_; }
  /// f{V_n} and its standard error (zero when exact).
  const EvalResult &base_value() const { return base_value_; }
  /// ∫f'{V_n,Y} dV_n(Y).
  double first_integral() const { return first_integral_; }
  double first_integral_standard_error() const { return first_integral_se_; }
  double h_n() const { return h_n_; }
  std::size_t budget() const { return budget_; }

private:
  Functional f_;
  Expectation base_;
  InfluenceKernel kernel_;
  EvalResult base_value_;
  double first_integral_ = 0.0;
  double first_integral_se_ = 0.0;
  double h_n_;
  std::size_t budget_;
};

TaylorDecomposition taylor_decompose(const Functional &f, const Repartition &s_n,
                                     const DistributionModel &v_n, double h_n,
                                     std::size_t budget = 0, std::uint64_t seed = 0);

/// Analytic-versus-numeric comparison along one segment between finite measures.
struct DerivativeCheck {
  NumericDerivative first_numeric;
  double first_analytic = 0.0;
  NumericDerivative second_numeric;
  double second_analytic = 0.0;

  double first_relative_error() const;
  double second_relative_error() const;
};

DerivativeCheck check_derivatives(const Functional &f, const DiscreteMeasure &base,
                                  const DiscreteMeasure &target);

/// Floor on each coordinate variance of a random test measure. Below it the
/// path F(t) can bend on a scale finer than the smallest Richardson step.
inline constexpr double kMinCoordinateVariance = 0.05;

/// Random probability measure with dim+2..max_atoms atoms in [-1, 1]^dim,
/// weights in [0.1, 1] before normalization, and every coordinate variance
/// at least kMinCoordinateVariance (draws below it are rejected).
DiscreteMeasure random_discrete_measure(int dim, int max_atoms, Stream &stream);

} // namespace vmf
