#pragma once

#include "vmfunc/model.hpp"
#include "vmfunc/polynomial.hpp"
#include "vmfunc/repartition.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vmf {

using PointFunction = std::function<double(PointRef)>;
using PairFunction = std::function<double(PointRef, PointRef)>;

/// An integrand α of a Stieltjes integral A = ∫α dV, with its mixed partials.
///
/// `partial(x, mask)` differentiates once in every coordinate whose bit is set
/// in `mask` (mask 0 is α itself); the integration-by-parts bound needs every
/// mask up to (1 << k) - 1.
struct Integrand {
  PointFunction value;
  std::function<double(PointRef, unsigned)> partial;
  std::optional<Polynomial> polynomial;

  static Integrand from_polynomial(Polynomial p);
};

namespace kinds {

/// f{V} = ∫ψ dV.
struct Linear {
  PointFunction psi;
  std::optional<Polynomial> polynomial;
  int order = 1;
};

/// ∫x_1^{v_1}...x_k^{v_k} dV.
struct RawMoment {
  Exponents exponents;
};

/// M_{v_1...v_k} = ∫Π(x_i - a_i)^{v_i} dV with a_i = ∫x_i dV.
struct CentralMoment {
  Exponents exponents;
};

/// Γ = M_11 / sqrt(M_20 M_02), k = 2.
struct Correlation {};

/// ∬ψ(X,Y) dV(X) dV(Y).
struct DoubleIntegral {
  PairFunction psi;
  int order = 1;
};

/// F(A, B, C, ...) of Stieltjes integrals A = ∫α dV, B = ∫β dV, ...
/// with caller-supplied gradient and Hessian of F.
struct CompositeMoments {
  std::vector<Integrand> integrands;
  std::function<double(const Eigen::VectorXd &)> outer;
  std::function<Eigen::VectorXd(const Eigen::VectorXd &)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd &)> hessian;
  int order = 1;
};

} // namespace kinds

/// A statistical functional f{V}. Immutable; copies share state.
class Functional {
public:
  using Kind = std::variant<kinds::Linear, kinds::RawMoment, kinds::CentralMoment,
                            kinds::Correlation, kinds::DoubleIntegral, kinds::CompositeMoments>;

  static Functional linear(PointFunction psi, int order = 1);
  static Functional linear(Polynomial psi);
  static Functional raw_moment(Exponents exponents);
  static Functional central_moment(Exponents exponents);
  static Functional correlation();
  static Functional double_integral(PairFunction psi, int order = 1);
  static Functional composite(std::vector<Integrand> integrands,
                              std::function<double(const Eigen::VectorXd &)> outer,
                              std::function<Eigen::VectorXd(const Eigen::VectorXd &)> gradient,
                              std::function<Eigen::MatrixXd(const Eigen::VectorXd &)> hessian,
                              int order = 1);

  const Kind &kind() const { return *kind_; }
  /// Dimension the functional is bound to, if any.
  std::optional<int> required_dim() const;
  /// Largest moment order m the functional touches.
  int order() const;
  std::string name() const;

private:
  explicit Functional(std::shared_ptr<const Kind> kind) : kind_(std::move(kind)) {}
  std::shared_ptr<const Kind> kind_;
};

enum class EvalMethod { ExactSum, ExactMoments, MonteCarlo };
std::string to_string(EvalMethod method);

struct EvalResult {
  double value = 0.0;
  double standard_error = 0.0; // zero iff the method is exact
  EvalMethod method = EvalMethod::ExactSum;
  std::vector<std::string> warnings;
};

/// Integrals against a base distribution.
///
/// Discrete bases are integrated exactly. For continuous models, raw
/// moments come from closed forms when the model declares them; anything
/// else is integrated against one fixed Monte Carlo sample of `budget` draws,
/// created on first use. Copies share the sample; thread-safe.
class Expectation {
public:
  explicit Expectation(DiscreteMeasure measure);
  Expectation(DistributionModel model, std::size_t budget, std::uint64_t seed);

  int dim() const;
  std::size_t budget() const;
  const std::optional<DistributionModel> &model() const;

  std::optional<double> exact_raw_moment(const Exponents &e) const;
  double raw_moment(const Exponents &e) const;
  std::optional<double> exact_central_moment(const Exponents &e) const;
  double central_moment(const Exponents &e) const;
  std::optional<double> exact_mean(const Polynomial &p) const;

  /// ∫g dV over the exact atoms or the Monte Carlo sample.
  double mean(const PointFunction &g) const;
  /// Standard error of `mean(g)`; zero when the base is discrete.
  double mean_standard_error(const PointFunction &g) const;

  /// True once a Monte Carlo sample has been consulted.
  bool sampled() const;
  bool is_discrete() const;
  /// The atoms (discrete base) or the Monte Carlo sample.
  const DiscreteMeasure &measure() const;

private:
  struct State;
  std::shared_ptr<State> state_;
};

/// Exact weighted-sum evaluation on a finite measure.
double evaluate(const Functional &f, const DiscreteMeasure &v);

/// f{S} for the empirical repartition; always exact-sum.
EvalResult eval_on_repartition(const Functional &f, const Repartition &r);

/// f{V} for an analytic model: exact sums for discrete models, closed-form
/// moments where available, else Monte Carlo over `budget` draws.
EvalResult eval_on_model(const Functional &f, const DistributionModel &m, std::size_t budget,
                         std::uint64_t seed = 0);

/// Warning text when a Student-t marginal has too few degrees of freedom
/// for the integrals the functional (and its variance) needs.
std::optional<std::string> moment_warning(const Functional &f, const DistributionModel &m);

/// A statistic of the arithmetic case: a smooth function of the l relative
/// frequencies ρ, with its gradient.
struct ArithmeticFunction {
  std::function<double(const Eigen::VectorXd &)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd &)> gradient;
  std::string name;

  static ArithmeticFunction linear(Eigen::VectorXd cell_values);
  /// ρ_cell^exponent.
  static ArithmeticFunction power(int cell, int exponent, int cells);
};

/// f(ρ) after checking ρ lies on the simplex.
double frequencies_as_function(const ArithmeticFunction &f, const Eigen::VectorXd &rho);

} // namespace vmf
