#pragma once

#include <optional>
#include <string>
#include <variant>

namespace vmf {

struct Uniform {
  double a = 0.0;
  double b = 1.0;
};

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct Exponential {
  double rate = 1.0;
};

/// Heavy-tailed marginal; moments of order >= dof do not exist.
struct StudentT {
  double dof = 3.0;
};

using Marginal = std::variant<Uniform, Gaussian, Exponential, StudentT>;

/// Exact moments are declared up to this total order for continuous models.
inline constexpr int kMaxExactMomentOrder = 8;

void validate(const Marginal &m);
std::string describe(const Marginal &m);

double cdf(const Marginal &m, double x);
double quantile(const Marginal &m, double u);

/// E[X^p], or nullopt if it does not exist or exceeds the declared order.
std::optional<double> raw_moment(const Marginal &m, int p);

/// E[X^p (1 - 2F(X))], the factor through which an FGM copula shifts mixed
/// moments: E[g(X)h(Y)] = E[g]E[h] + θ·tilt_g·tilt_h.
std::optional<double> fgm_tilt_moment(const Marginal &m, int p);

/// Degrees of freedom if the marginal is Student-t.
std::optional<double> student_dof(const Marginal &m);

} // namespace vmf
