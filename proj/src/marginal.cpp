#include "vmfunc/marginal.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vmf {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};

double binomial(int n, int k) {
  double result = 1.0;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
  }
  return result;
}

double factorial(int n) {
  double result = 1.0;
  for (int i = 2; i <= n; ++i) {
    result *= i;
  }
  return result;
}

// (n)!! with (-1)!! = 0!! = 1.
double double_factorial(int n) {
  double result = 1.0;
  for (int i = n; i > 1; i -= 2) {
    result *= i;
  }
  return result;
}

double standard_normal_moment(int j) {
  return (j % 2 == 1) ? 0.0 : double_factorial(j - 1);
}

// E[Z^q (2Φ(Z) - 1)] for a standard normal Z. Zero for even q; for odd q,
// Stein's identity gives g(q) = (q-1) g(q-2) + 2 E[Z^{q-1} φ(Z)].
double standard_normal_tilt(int q) {
  if (q % 2 == 0) {
    return 0.0;
  }
  double g = 0.0;
  for (int r = 1; r <= q; r += 2) {
    const double phi_moment =
        std::pow(0.5, (r - 1) / 2.0) * double_factorial(r - 2) / std::sqrt(std::numbers::pi);
    g = (r - 1) * g + phi_moment;
  }
  return g;
}

} // namespace

void validate(const Marginal &m) {
  std::visit(overloaded{
                 [](const Uniform &u) {
                   if (!(std::isfinite(u.a) && std::isfinite(u.b) && u.a < u.b)) {
                     throw std::invalid_argument("uniform marginal needs finite a < b");
                   }
                 },
                 [](const Gaussian &g) {
                   if (!(std::isfinite(g.mean) && g.stddev > 0.0 && std::isfinite(g.stddev))) {
                     throw std::invalid_argument("gaussian marginal needs finite mean and stddev > 0");
                   }
                 },
                 [](const Exponential &e) {
                   if (!(e.rate > 0.0 && std::isfinite(e.rate))) {
                     throw std::invalid_argument("exponential marginal needs rate > 0");
                   }
                 },
                 [](const StudentT &t) {
                   if (!(t.dof > 0.0 && std::isfinite(t.dof))) {
                     throw std::invalid_argument("student-t marginal needs dof > 0");
                   }
                 },
             },
             m);
}

std::string describe(const Marginal &m) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const Uniform &u) { out << "Uniform(" << u.a << "," << u.b << ")"; },
                 [&](const Gaussian &g) { out << "Gaussian(" << g.mean << "," << g.stddev << ")"; },
                 [&](const Exponential &e) { out << "Exponential(" << e.rate << ")"; },
                 [&](const StudentT &t) { out << "StudentT(" << t.dof << ")"; },
             },
             m);
  return out.str();
}

double cdf(const Marginal &m, double x) {
  if (std::isnan(x)) {
    throw std::invalid_argument("cdf evaluated at NaN");
  }
  return std::visit(
      overloaded{
          [x](const Uniform &u) {
            if (x <= u.a) return 0.0;
            if (x >= u.b) return 1.0;
            return (x - u.a) / (u.b - u.a);
          },
          [x](const Gaussian &g) {
            return 0.5 * std::erfc(-(x - g.mean) / (g.stddev * std::numbers::sqrt2));
          },
          [x](const Exponential &e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
          [x](const StudentT &t) {
            if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
            return boost::math::cdf(boost::math::students_t(t.dof), x);
          },
      },
      m);
}

double quantile(const Marginal &m, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("quantile needs u in (0,1)");
  }
  return std::visit(
      overloaded{
          [u](const Uniform &d) { return d.a + (d.b - d.a) * u; },
          [u](const Gaussian &g) {
            return g.mean + g.stddev * boost::math::quantile(boost::math::normal(), u);
          },
          [u](const Exponential &e) { return -std::log1p(-u) / e.rate; },
          [u](const StudentT &t) {
            // Closed forms for the small dof used by the heavy-tail configurations.
            if (t.dof == 1.0) {
              return std::tan(std::numbers::pi * (u - 0.5));
            }
            if (t.dof == 2.0) {
              return (2.0 * u - 1.0) / std::sqrt(2.0 * u * (1.0 - u));
            }
            if (t.dof == 4.0) {
              const double alpha = 4.0 * u * (1.0 - u);
              const double root = std::sqrt(alpha);
              const double q = std::cos(std::acos(root) / 3.0) / root;
              return std::copysign(2.0 * std::sqrt(q - 1.0), u - 0.5);
            }
            return boost::math::quantile(boost::math::students_t(t.dof), u);
          },
      },
      m);
}

std::optional<double> raw_moment(const Marginal &m, int p) {
  if (p < 0) {
    throw std::invalid_argument("moment order must be nonnegative");
  }
  if (p == 0) {
    return 1.0;
  }
  if (p > kMaxExactMomentOrder) {
    return std::nullopt;
  }
  return std::visit(
      overloaded{
          [p](const Uniform &u) -> std::optional<double> {
            double sum = 0.0;
            for (int j = 0; j <= p; ++j) {
              sum += std::pow(u.a, p - j) * std::pow(u.b, j);
            }
            return sum / (p + 1);
          },
          [p](const Gaussian &g) -> std::optional<double> {
            double sum = 0.0;
            for (int j = 0; j <= p; j += 2) {
              sum += binomial(p, j) * std::pow(g.mean, p - j) * std::pow(g.stddev, j) *
                     standard_normal_moment(j);
            }
            return sum;
          },
          [p](const Exponential &e) -> std::optional<double> {
            return factorial(p) / std::pow(e.rate, p);
          },
          [p](const StudentT &t) -> std::optional<double> {
            if (static_cast<double>(p) >= t.dof) {
              return std::nullopt;
            }
            if (p % 2 == 1) {
              return 0.0;
            }
            double result = 1.0;
            for (int i = 1; i <= p / 2; ++i) {
              result *= t.dof * (2 * i - 1) / (t.dof - 2 * i);
            }
            return result;
          },
      },
      m);
}

std::optional<double> fgm_tilt_moment(const Marginal &m, int p) {
  if (p < 0 || p > kMaxExactMomentOrder) {
    return std::nullopt;
  }
  return std::visit(
      overloaded{
          [p](const Uniform &u) -> std::optional<double> {
            // X = a + (b-a)U, 1 - 2F(X) = 1 - 2U.
            const double width = u.b - u.a;
            double sum = 0.0;
            for (int j = 0; j <= p; ++j) {
              sum += binomial(p, j) * std::pow(u.a, p - j) * std::pow(width, j) *
                     (1.0 / (j + 1) - 2.0 / (j + 2));
            }
            return sum;
          },
          [p](const Gaussian &g) -> std::optional<double> {
            double sum = 0.0;
            for (int j = 1; j <= p; j += 2) {
              sum += binomial(p, j) * std::pow(g.mean, p - j) * std::pow(g.stddev, j) *
                     standard_normal_tilt(j);
            }
            return -sum;
          },
          [p](const Exponential &e) -> std::optional<double> {
            // 1 - 2F = 2e^{-λx} - 1.
            return factorial(p) / std::pow(2.0 * e.rate, p) - factorial(p) / std::pow(e.rate, p);
          },
          [](const StudentT &) -> std::optional<double> { return std::nullopt; },
      },
      m);
}

std::optional<double> student_dof(const Marginal &m) {
  if (const auto *t = std::get_if<StudentT>(&m)) {
    return t->dof;
  }
  return std::nullopt;
}

} // namespace vmf
