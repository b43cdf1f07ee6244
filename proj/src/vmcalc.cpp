#include "vmfunc/vmcalc.hpp"

#include "vmfunc/errors.hpp"

#include <array>
#include <cmath>
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

Exponents shifted(Exponents v, std::size_t i, int by) {
  v[i] += by;
  return v;
}

using Matrix5 = Eigen::Matrix<double, 5, 5>;
using Vector5 = Eigen::Matrix<double, 5, 1>;

// Hessian of Γ = N/sqrt(PQ) in the five raw integrals
// (A, B, C, D, E) = (∫xy, ∫x, ∫y, ∫x², ∫y²), with N = A - BC,
// P = D - B², Q = E - C².
Matrix5 correlation_hessian(double b, double c, double n, double p, double q) {
  Vector5 nu, pu, qu;
  nu << 1.0, -c, -b, 0.0, 0.0;
  pu << 0.0, -2.0 * b, 0.0, 1.0, 0.0;
  qu << 0.0, 0.0, -2.0 * c, 0.0, 1.0;
  Matrix5 nuv = Matrix5::Zero();
  nuv(1, 2) = nuv(2, 1) = -1.0;
  Matrix5 puv = Matrix5::Zero();
  puv(1, 1) = -2.0;
  Matrix5 quv = Matrix5::Zero();
  quv(2, 2) = -2.0;

  const double r = 1.0 / std::sqrt(p * q);
  const Vector5 lu = -0.5 * pu / p - 0.5 * qu / q;
  const Matrix5 luv = -0.5 * (puv / p - pu * pu.transpose() / (p * p)) -
                      0.5 * (quv / q - qu * qu.transpose() / (q * q));
  const Vector5 ru = r * lu;
  const Matrix5 ruv = r * (lu * lu.transpose() + luv);
  return r * nuv + nu * ru.transpose() + ru * nu.transpose() + n * ruv;
}

Vector5 correlation_integrands(PointRef y) {
  Vector5 alpha;
  alpha << y[0] * y[1], y[0], y[1], y[0] * y[0], y[1] * y[1];
  return alpha;
}

double integrand_mean(const Integrand &alpha, const Expectation &base) {
  if (alpha.polynomial) {
    if (auto exact = base.exact_mean(*alpha.polynomial)) {
      return *exact;
    }
  }
  return base.mean(alpha.value);
}

} // namespace

InfluenceKernel linearize(const Functional &f, const Expectation &base) {
  if (auto dim = f.required_dim(); dim && *dim != base.dim()) {
    throw std::invalid_argument("functional " + f.name() + " needs dimension " +
                                std::to_string(*dim) + ", got " + std::to_string(base.dim()));
  }
  InfluenceKernel kernel;
  const auto zero = [](PointRef, PointRef) { return 0.0; };
  std::visit(
      overloaded{
          [&](const kinds::Linear &l) {
            kernel.first_ = l.psi;
            kernel.second_ = zero;
            kernel.polynomial_ = l.polynomial;
            kernel.linear_ = true;
          },
          [&](const kinds::RawMoment &m) {
            const Exponents e = m.exponents;
            kernel.first_ = [e](PointRef y) { return monomial(y, e); };
            kernel.second_ = zero;
            kernel.polynomial_ = Polynomial::monomial(e);
            kernel.linear_ = true;
          },
          [&](const kinds::CentralMoment &m) {
            const Exponents v = m.exponents;
            const std::size_t k = v.size();
            std::vector<double> means(k, 0.0);
            std::vector<double> m1(k, 0.0);
            std::vector<double> m2(k, 0.0);
            Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(k, k);
            for (std::size_t i = 0; i < k; ++i) {
              if (v[i] == 0) continue;
              means[i] = base.raw_moment(shifted(Exponents(k, 0), i, 1));
              m1[i] = base.central_moment(shifted(v, i, -1));
              if (v[i] >= 2) m2[i] = base.central_moment(shifted(v, i, -2));
              for (std::size_t j = 0; j < k; ++j) {
                if (j != i && v[j] > 0) {
                  mixed(i, j) = base.central_moment(shifted(shifted(v, i, -1), j, -1));
                }
              }
            }
            auto centered = [means](PointRef y, const Exponents &w) {
              double product = 1.0;
              for (std::size_t i = 0; i < w.size(); ++i) {
                product *= ipow(y[static_cast<Eigen::Index>(i)] - means[i], w[i]);
              }
              return product;
            };
            kernel.first_ = [v, m1, centered](PointRef y) {
              double value = centered(y, v);
              for (std::size_t i = 0; i < v.size(); ++i) {
                value -= v[i] * m1[i] * y[static_cast<Eigen::Index>(i)];
              }
              return value;
            };
            kernel.second_ = [v, m2, mixed, centered](PointRef y, PointRef z) {
              double value = 0.0;
              for (std::size_t i = 0; i < v.size(); ++i) {
                if (v[i] == 0) continue;
                const auto ii = static_cast<Eigen::Index>(i);
                value += v[i] * (v[i] - 1) * m2[i] * y[ii] * z[ii];
                for (std::size_t j = 0; j < v.size(); ++j) {
                  if (j != i && v[j] > 0) {
                    value += v[i] * v[j] * mixed(ii, static_cast<Eigen::Index>(j)) * y[ii] *
                             z[static_cast<Eigen::Index>(j)];
                  }
                }
                value -= 2.0 * v[i] * centered(y, shifted(v, i, -1)) * z[ii];
              }
              return value;
            };
            Polynomial poly = Polynomial::constant(static_cast<int>(k), 1.0);
            for (std::size_t i = 0; i < k; ++i) {
              Polynomial factor = Polynomial::constant(static_cast<int>(k), 0.0);
              for (int j = 0; j <= v[i]; ++j) {
                Exponents e(k, 0);
                e[i] = j;
                factor.add_term(e, binomial(v[i], j) * ipow(-means[i], v[i] - j));
              }
              poly = poly * factor;
            }
            for (std::size_t i = 0; i < k; ++i) {
              if (v[i] > 0) {
                poly = poly - Polynomial::variable(static_cast<int>(k), static_cast<int>(i)) *
                                  (v[i] * m1[i]);
              }
            }
            kernel.polynomial_ = std::move(poly);
          },
          [&](const kinds::Correlation &) {
            const double a = base.raw_moment({1, 0});
            const double b = base.raw_moment({0, 1});
            const double m20 = base.central_moment({2, 0});
            const double m02 = base.central_moment({0, 2});
            const double m11 = base.central_moment({1, 1});
            if (m20 <= 1e-13 * base.raw_moment({2, 0}) || m02 <= 1e-13 * base.raw_moment({0, 2})) {
              throw DegenerateError("correlation undefined: zero variance in a coordinate");
            }
            const double s = 1.0 / std::sqrt(m20 * m02);
            const double gamma = m11 * s;
            const double c1 = gamma * a / m20 - s * b;
            const double c2 = gamma * b / m02 - s * a;
            const double q1 = -0.5 * gamma / m20;
            const double q2 = -0.5 * gamma / m02;
            kernel.first_ = [=](PointRef y) {
              return s * y[0] * y[1] + c1 * y[0] + c2 * y[1] + q1 * y[0] * y[0] + q2 * y[1] * y[1];
            };
            const Matrix5 h = correlation_hessian(a, b, m11, m20, m02);
            kernel.second_ = [h](PointRef y, PointRef z) {
              return correlation_integrands(y).dot(h * correlation_integrands(z));
            };
            Polynomial poly = Polynomial::constant(2, 0.0);
            poly.add_term({1, 1}, s);
            poly.add_term({1, 0}, c1);
            poly.add_term({0, 1}, c2);
            poly.add_term({2, 0}, q1);
            poly.add_term({0, 2}, q2);
            kernel.polynomial_ = std::move(poly);
          },
          [&](const kinds::DoubleIntegral &d) {
            const auto psi = d.psi;
            kernel.first_ = [psi, base](PointRef y) {
              return base.mean([&](PointRef x) { return psi(x, y) + psi(y, x); });
            };
            kernel.second_ = [psi](PointRef y, PointRef z) { return 2.0 * psi(y, z); };
          },
          [&](const kinds::CompositeMoments &c) {
            const auto m = static_cast<Eigen::Index>(c.integrands.size());
            Eigen::VectorXd values(m);
            for (Eigen::Index j = 0; j < m; ++j) {
              values[j] = integrand_mean(c.integrands[static_cast<std::size_t>(j)], base);
            }
            const Eigen::VectorXd g = c.gradient(values);
            const Eigen::MatrixXd h = c.hessian(values);
            if (g.size() != m || h.rows() != m || h.cols() != m) {
              throw std::invalid_argument("composite gradient/Hessian size mismatch");
            }
            const auto integrands = c.integrands;
            auto alpha = [integrands](PointRef y) {
              Eigen::VectorXd out(static_cast<Eigen::Index>(integrands.size()));
              for (std::size_t j = 0; j < integrands.size(); ++j) {
                out[static_cast<Eigen::Index>(j)] = integrands[j].value(y);
              }
              return out;
            };
            kernel.first_ = [alpha, g](PointRef y) { return g.dot(alpha(y)); };
            kernel.second_ = [alpha, h](PointRef y, PointRef z) {
              return alpha(y).dot(h * alpha(z));
            };
            std::optional<Polynomial> poly;
            for (Eigen::Index j = 0; j < m; ++j) {
              const auto &p = c.integrands[static_cast<std::size_t>(j)].polynomial;
              if (!p) {
                poly.reset();
                break;
              }
              poly = poly ? *poly + *p * g[j] : *p * g[j];
            }
            kernel.polynomial_ = std::move(poly);
          },
      },
      f.kind());
  return kernel;
}

namespace {

Expectation exact_base(const DistributionModel &v) {
  if (auto measure = v.as_measure()) {
    return Expectation(std::move(*measure));
  }
  return Expectation(v, 0, 0);
}

} // namespace

double influence_first(const Functional &f, const DistributionModel &v, PointRef y) {
  return linearize(f, exact_base(v)).first(y);
}

double influence_first(const Functional &f, const DiscreteMeasure &v, PointRef y) {
  return linearize(f, Expectation(v)).first(y);
}

double influence_second(const Functional &f, const DistributionModel &v, PointRef y, PointRef z) {
  return linearize(f, exact_base(v)).second(y, z);
}

double influence_second(const Functional &f, const DiscreteMeasure &v, PointRef y, PointRef z) {
  return linearize(f, Expectation(v)).second(y, z);
}

double first_variation(const InfluenceKernel &kernel, const DiscreteMeasure &delta) {
  return delta.integrate([&](PointRef y) { return kernel.first(y); });
}

double second_variation(const InfluenceKernel &kernel, const DiscreteMeasure &delta,
                        bool swap_arguments) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    for (Eigen::Index j = 0; j < delta.size(); ++j) {
      const double value = swap_arguments ? kernel.second(delta.atoms.col(j), delta.atoms.col(i))
                                          : kernel.second(delta.atoms.col(i), delta.atoms.col(j));
      sum += delta.weights[i] * delta.weights[j] * value;
    }
  }
  return sum;
}

DirectionalPath DirectionalPath::between(const DistributionModel &base,
                                         const DistributionModel &target) {
  auto b = base.as_measure();
  auto t = target.as_measure();
  if (!b || !t) {
    throw std::invalid_argument("directional paths need finitely supported endpoints");
  }
  return DirectionalPath{std::move(*b), std::move(*t)};
}

DirectionalPath DirectionalPath::toward(const DistributionModel &base, const Repartition &target) {
  auto b = base.as_measure();
  if (!b) {
    throw std::invalid_argument("directional paths need finitely supported endpoints");
  }
  return DirectionalPath{std::move(*b), target.as_measure()};
}

DiscreteMeasure DirectionalPath::at(double t) const {
  return DiscreteMeasure::segment(base, target, t);
}

double DirectionalPath::cdf(PointRef x, double t) const {
  return (1.0 - t) * base.cdf(x) + t * target.cdf(x);
}

DiscreteMeasure DirectionalPath::delta() const { return DiscreteMeasure::difference(base, target); }

NumericDerivative directional_derivative_numeric(const Functional &f, const DirectionalPath &path,
                                                 int order, double tolerance) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("directional derivative order must be 1 or 2");
  }
  constexpr int levels = kRichardsonLevels;
  const double f0 = evaluate(f, path.at(0.0));
  std::array<std::array<double, levels>, levels> table{};
  for (int i = 0; i < levels; ++i) {
    const double h = std::ldexp(1.0, -(kRichardsonFirstExponent + i));
    const double f1 = evaluate(f, path.at(h));
    if (order == 1) {
      table[i][0] = (f1 - f0) / h;
    } else {
      const double f2 = evaluate(f, path.at(2.0 * h));
      table[i][0] = (f2 - 2.0 * f1 + f0) / (h * h);
    }
    for (int j = 1; j <= i; ++j) {
      table[i][j] = table[i][j - 1] +
                    (table[i][j - 1] - table[i - 1][j - 1]) / (std::ldexp(1.0, j) - 1.0);
    }
  }
  NumericDerivative out;
  const int last = levels - 1;
  out.value = table[last][last];
  out.error_estimate = std::max(std::abs(out.value - table[last][last - 1]),
                                std::abs(out.value - table[last - 1][last - 1]));
  out.converged = std::isfinite(out.value) &&
                  out.error_estimate <= tolerance * std::max(1.0, std::abs(out.value));
  return out;
}

TaylorExpansion::TaylorExpansion(const Functional &f, const DistributionModel &v_n, double h_n,
                                 std::size_t budget, std::uint64_t seed)
    : f_(f), base_(v_n, budget, seed), kernel_(linearize(f, base_)),
      base_value_(eval_on_model(f, v_n, budget, seed)), h_n_(h_n), budget_(budget) {
  if (!(h_n > 0.0) || !std::isfinite(h_n)) {
    throw std::invalid_argument("normalizer h_n must be positive and finite");
  }
  const auto &poly = kernel_.first_polynomial();
  std::optional<double> exact;
  if (poly) {
    exact = base_.exact_mean(*poly);
  }
  if (exact) {
    first_integral_ = *exact;
  } else {
    const auto first = [this](PointRef y) { return kernel_.first(y); };
    first_integral_ = base_.mean(first);
    first_integral_se_ = base_.mean_standard_error(first);
  }
}

TaylorDecomposition TaylorExpansion::operator()(const Repartition &s_n) const {
  const auto measure = s_n.as_measure();
  const double value = evaluate(f_, measure);
  const double mean_first = measure.integrate([this](PointRef y) { return kernel_.first(y); });
  TaylorDecomposition out;
  out.h_n = h_n_;
  out.a_n = h_n_ * (value - base_value_.value);
  out.b_n = h_n_ * (mean_first - first_integral_);
  out.remainder = out.a_n - out.b_n;
  return out;
}

TaylorDecomposition taylor_decompose(const Functional &f, const Repartition &s_n,
                                     const DistributionModel &v_n, double h_n, std::size_t budget,
                                     std::uint64_t seed) {
  return TaylorExpansion(f, v_n, h_n, budget, seed)(s_n);
}

double DerivativeCheck::first_relative_error() const {
  return std::abs(first_numeric.value - first_analytic) /
         std::max(1.0, std::abs(first_numeric.value));
}

double DerivativeCheck::second_relative_error() const {
  return std::abs(second_numeric.value - second_analytic) /
         std::max(1.0, std::abs(second_numeric.value));
}

DerivativeCheck check_derivatives(const Functional &f, const DiscreteMeasure &base,
                                  const DiscreteMeasure &target) {
  const auto kernel = linearize(f, Expectation(base));
  const DirectionalPath path{base, target};
  const auto delta = path.delta();
  DerivativeCheck out;
  out.first_numeric = directional_derivative_numeric(f, path, 1);
  out.first_analytic = first_variation(kernel, delta);
  out.second_numeric = directional_derivative_numeric(f, path, 2);
  out.second_analytic = second_variation(kernel, delta);
  return out;
}

DiscreteMeasure random_discrete_measure(int dim, int max_atoms, Stream &stream) {
  const int min_atoms = dim + 2;
  if (dim < 1 || max_atoms < min_atoms) {
    throw std::invalid_argument("random measure needs dim >= 1 and max_atoms >= dim + 2");
  }
  while (true) {
    const int atoms = min_atoms + static_cast<int>(stream.uniform() * (max_atoms - min_atoms + 1));
    DiscreteMeasure out;
    out.atoms.resize(dim, atoms);
    out.weights.resize(atoms);
    for (int j = 0; j < atoms; ++j) {
      for (int i = 0; i < dim; ++i) {
        out.atoms(i, j) = 2.0 * stream.uniform() - 1.0;
      }
      out.weights[j] = 0.1 + 0.9 * stream.uniform();
    }
    out.weights /= out.weights.sum();
    const Eigen::VectorXd mean = out.atoms * out.weights;
    const Eigen::VectorXd variance =
        (out.atoms.colwise() - mean).array().square().matrix() * out.weights;
    if (variance.minCoeff() >= kMinCoordinateVariance) {
      return out;
    }
  }
}

} // namespace vmf
