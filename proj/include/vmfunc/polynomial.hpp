#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace vmf {

using Point = Eigen::VectorXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

/// Exponent multi-index (v_1, ..., v_k).
using Exponents = std::vector<int>;

/// Returns E[x_1^{v_1} ... x_k^{v_k}] when it is known, nullopt otherwise.
using MomentOracle = std::function<std::optional<double>(const Exponents &)>;

/// x^p for small nonnegative integer p.
double ipow(double x, int p);

/// Monomial x^v evaluated at a point.
double monomial(PointRef x, std::span<const int> exponents);

/// Sparse real polynomial in k variables.
///
/// Used wherever an influence function is a polynomial in the point Y, so
/// its integrals against a distribution reduce to exact raw moments.
class Polynomial {
public:
  explicit Polynomial(int dim = 0) : dim_(dim) {}

  static Polynomial constant(int dim, double value);
  static Polynomial variable(int dim, int coordinate);
  static Polynomial monomial(const Exponents &exponents, double coefficient = 1.0);

  int dim() const { return dim_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, double> &terms() const { return terms_; }

  void add_term(const Exponents &exponents, double coefficient);

  double operator()(PointRef x) const;

  /// Partial derivative once with respect to each coordinate whose bit is set in `mask`.
  Polynomial partial(unsigned mask) const;

  /// ∫ p dV from raw moments; nullopt when any needed moment is unavailable.
  std::optional<double> expectation(const MomentOracle &moments) const;

  Polynomial operator+(const Polynomial &other) const;
  Polynomial operator-(const Polynomial &other) const;
  Polynomial operator*(const Polynomial &other) const;
  Polynomial operator*(double scale) const;
  Polynomial operator+(double shift) const;

private:
  int dim_;
  std::map<Exponents, double> terms_;
};

} // namespace vmf
