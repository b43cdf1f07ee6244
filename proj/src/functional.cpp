#include "vmfunc/functional.hpp"

#include "vmfunc/errors.hpp"
#include "vmfunc/vmcalc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
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

void check_exponents(const Exponents &e) {
  if (e.empty()) {
    throw std::invalid_argument("moment exponents must be nonempty");
  }
  if (std::any_of(e.begin(), e.end(), [](int v) { return v < 0; })) {
    throw std::invalid_argument("moment exponents must be nonnegative");
  }
}

Exponents unit(std::size_t dim, std::size_t i) {
  Exponents e(dim, 0);
  e[i] = 1;
  return e;
}

// M_v from raw moments: Σ_{j<=v} Π C(v_i, j_i) (-a_i)^{v_i - j_i} E[x^j].
std::optional<double> central_from_raw(const Exponents &v, const MomentOracle &raw) {
  const std::size_t k = v.size();
  std::vector<double> means(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (v[i] > 0) {
      const auto a = raw(unit(k, i));
      if (!a) {
        return std::nullopt;
      }
      means[i] = *a;
    }
  }
  Exponents j(k, 0);
  double sum = 0.0;
  while (true) {
    const auto m = raw(j);
    if (!m) {
      return std::nullopt;
    }
    double coefficient = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      coefficient *= binomial(v[i], j[i]) * ipow(-means[i], v[i] - j[i]);
    }
    sum += coefficient * *m;
    std::size_t d = 0;
    while (d < k && ++j[d] > v[d]) {
      j[d] = 0;
      ++d;
    }
    if (d == k) {
      break;
    }
  }
  return sum;
}

double sample_standard_error(const DiscreteMeasure &sample, const PointFunction &g) {
  const auto n = sample.size();
  if (n < 2) {
    return 0.0;
  }
  Eigen::VectorXd values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values[i] = g(sample.atoms.col(i));
  }
  const double mean = values.mean();
  const double variance = (values.array() - mean).square().sum() / static_cast<double>(n - 1);
  return std::sqrt(variance / static_cast<double>(n));
}

struct CorrelationMoments {
  double a, b, m11, m20, m02;
};

CorrelationMoments correlation_moments(const DiscreteMeasure &v) {
  const double a = v.integrate([](PointRef x) { return x[0]; });
  const double b = v.integrate([](PointRef x) { return x[1]; });
  CorrelationMoments out{a, b, 0, 0, 0};
  out.m11 = v.integrate([&](PointRef x) { return (x[0] - a) * (x[1] - b); });
  out.m20 = v.integrate([&](PointRef x) { return (x[0] - a) * (x[0] - a); });
  out.m02 = v.integrate([&](PointRef x) { return (x[1] - b) * (x[1] - b); });
  const double r20 = v.integrate([](PointRef x) { return x[0] * x[0]; });
  const double r02 = v.integrate([](PointRef x) { return x[1] * x[1]; });
  if (out.m20 <= 1e-13 * r20 || out.m02 <= 1e-13 * r02) {
    throw DegenerateError("correlation undefined: zero variance in a coordinate");
  }
  return out;
}

} // namespace

Integrand Integrand::from_polynomial(Polynomial p) {
  Integrand out;
  out.value = [p](PointRef x) { return p(x); };
  // Partials are cached per mask so repeated quadrature does not rebuild them.
  std::vector<Polynomial> partials;
  for (unsigned mask = 0; mask < (1U << p.dim()); ++mask) {
    partials.push_back(p.partial(mask));
  }
  out.partial = [partials = std::move(partials)](PointRef x, unsigned mask) {
    return partials.at(mask)(x);
  };
  out.polynomial = std::move(p);
  return out;
}

Functional Functional::linear(PointFunction psi, int order) {
  if (!psi) {
    throw std::invalid_argument("linear functional needs psi");
  }
  return Functional(std::make_shared<const Kind>(kinds::Linear{std::move(psi), std::nullopt, order}));
}

Functional Functional::linear(Polynomial psi) {
  const int order = std::max(1, psi.degree());
  PointFunction fn = [psi](PointRef x) { return psi(x); };
  return Functional(std::make_shared<const Kind>(kinds::Linear{std::move(fn), std::move(psi), order}));
}

Functional Functional::raw_moment(Exponents exponents) {
  check_exponents(exponents);
  return Functional(std::make_shared<const Kind>(kinds::RawMoment{std::move(exponents)}));
}

Functional Functional::central_moment(Exponents exponents) {
  check_exponents(exponents);
  if (std::all_of(exponents.begin(), exponents.end(), [](int v) { return v == 0; })) {
    throw std::invalid_argument("central moment exponents must not all be zero");
  }
  return Functional(std::make_shared<const Kind>(kinds::CentralMoment{std::move(exponents)}));
}

Functional Functional::correlation() {
  return Functional(std::make_shared<const Kind>(kinds::Correlation{}));
}

Functional Functional::double_integral(PairFunction psi, int order) {
  if (!psi) {
    throw std::invalid_argument("double integral needs psi");
  }
  return Functional(std::make_shared<const Kind>(kinds::DoubleIntegral{std::move(psi), order}));
}

Functional Functional::composite(std::vector<Integrand> integrands,
                                 std::function<double(const Eigen::VectorXd &)> outer,
                                 std::function<Eigen::VectorXd(const Eigen::VectorXd &)> gradient,
                                 std::function<Eigen::MatrixXd(const Eigen::VectorXd &)> hessian,
                                 int order) {
  if (integrands.empty() || !outer || !gradient || !hessian) {
    throw std::invalid_argument("composite functional needs integrands, F, and its partials");
  }
  for (const auto &alpha : integrands) {
    if (!alpha.value || !alpha.partial) {
      throw std::invalid_argument("composite integrands need values and mixed partials");
    }
  }
  return Functional(std::make_shared<const Kind>(kinds::CompositeMoments{
      std::move(integrands), std::move(outer), std::move(gradient), std::move(hessian), order}));
}

std::optional<int> Functional::required_dim() const {
  return std::visit(
      overloaded{
          [](const kinds::Linear &l) -> std::optional<int> {
            if (l.polynomial) return l.polynomial->dim();
            return std::nullopt;
          },
          [](const kinds::RawMoment &m) -> std::optional<int> {
            return static_cast<int>(m.exponents.size());
          },
          [](const kinds::CentralMoment &m) -> std::optional<int> {
            return static_cast<int>(m.exponents.size());
          },
          [](const kinds::Correlation &) -> std::optional<int> { return 2; },
          [](const kinds::DoubleIntegral &) -> std::optional<int> { return std::nullopt; },
          [](const kinds::CompositeMoments &c) -> std::optional<int> {
            for (const auto &alpha : c.integrands) {
              if (alpha.polynomial) return alpha.polynomial->dim();
            }
            return std::nullopt;
          },
      },
      *kind_);
}

int Functional::order() const {
  return std::visit(
      overloaded{
          [](const kinds::Linear &l) { return l.order; },
          [](const kinds::RawMoment &m) {
            return std::accumulate(m.exponents.begin(), m.exponents.end(), 0);
          },
          [](const kinds::CentralMoment &m) {
            return std::accumulate(m.exponents.begin(), m.exponents.end(), 0);
          },
          [](const kinds::Correlation &) { return 2; },
          [](const kinds::DoubleIntegral &d) { return d.order; },
          [](const kinds::CompositeMoments &c) {
            int order = c.order;
            for (const auto &alpha : c.integrands) {
              if (alpha.polynomial) order = std::max(order, alpha.polynomial->degree());
            }
            return order;
          },
      },
      *kind_);
}

std::string Functional::name() const {
  auto list = [](const Exponents &e) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < e.size(); ++i) {
      out << (i ? "," : "") << e[i];
    }
    out << "]";
    return out.str();
  };
  return std::visit(overloaded{
                        [](const kinds::Linear &) { return std::string("linear"); },
                        [&](const kinds::RawMoment &m) { return "raw_moment" + list(m.exponents); },
                        [&](const kinds::CentralMoment &m) {
                          return "central_moment" + list(m.exponents);
                        },
                        [](const kinds::Correlation &) { return std::string("correlation"); },
                        [](const kinds::DoubleIntegral &) { return std::string("double_integral"); },
                        [](const kinds::CompositeMoments &) { return std::string("composite"); },
                    },
                    *kind_);
}

std::string to_string(EvalMethod method) {
  switch (method) {
  case EvalMethod::ExactSum:
    return "exact-sum";
  case EvalMethod::ExactMoments:
    return "exact-moments";
  case EvalMethod::MonteCarlo:
    return "monte-carlo";
  }
  return "unknown";
}

struct Expectation::State {
  std::optional<DistributionModel> model;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  bool discrete = false;
  std::once_flag once;
  DiscreteMeasure measure;
  std::atomic<bool> used{false};
};

Expectation::Expectation(DiscreteMeasure measure) : state_(std::make_shared<State>()) {
  state_->discrete = true;
  state_->measure = std::move(measure);
}

Expectation::Expectation(DistributionModel model, std::size_t budget, std::uint64_t seed)
    : state_(std::make_shared<State>()) {
  if (auto measure = model.as_measure()) {
    state_->discrete = true;
    state_->measure = std::move(*measure);
  }
  state_->model = std::move(model);
  state_->budget = budget;
  state_->seed = seed;
}

int Expectation::dim() const {
  return state_->model ? state_->model->dim() : state_->measure.dim();
}

std::size_t Expectation::budget() const { return state_->budget; }

const std::optional<DistributionModel> &Expectation::model() const { return state_->model; }

bool Expectation::is_discrete() const { return state_->discrete; }

bool Expectation::sampled() const { return state_->used.load(); }

const DiscreteMeasure &Expectation::measure() const {
  if (state_->discrete) {
    return state_->measure;
  }
  std::call_once(state_->once, [this] {
    auto &s = *state_;
    if (s.budget == 0) {
      throw std::invalid_argument(
          "no exact integration path for " + s.model->describe() + " and Monte Carlo budget is 0");
    }
    const auto n = static_cast<Eigen::Index>(s.budget);
    s.measure.atoms.resize(s.model->dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Stream stream({s.seed, kIntegrationReplication, static_cast<std::uint64_t>(i)});
      s.measure.atoms.col(i) = s.model->sample(stream);
    }
    s.measure.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  });
  state_->used = true;
  return state_->measure;
}

std::optional<double> Expectation::exact_raw_moment(const Exponents &e) const {
  if (state_->discrete) {
    return state_->measure.raw_moment(e);
  }
  return state_->model->raw_moment(e);
}

double Expectation::raw_moment(const Exponents &e) const {
  if (auto exact = exact_raw_moment(e)) {
    return *exact;
  }
  return measure().raw_moment(e);
}

std::optional<double> Expectation::exact_central_moment(const Exponents &e) const {
  if (state_->discrete) {
    const auto &m = state_->measure;
    std::vector<double> means(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      means[i] = m.integrate([i](PointRef x) { return x[static_cast<Eigen::Index>(i)]; });
    }
    return m.integrate([&](PointRef x) {
      double product = 1.0;
      for (std::size_t i = 0; i < e.size(); ++i) {
        product *= ipow(x[static_cast<Eigen::Index>(i)] - means[i], e[i]);
      }
      return product;
    });
  }
  return central_from_raw(e, [this](const Exponents &j) { return exact_raw_moment(j); });
}

double Expectation::central_moment(const Exponents &e) const {
  if (auto exact = exact_central_moment(e)) {
    return *exact;
  }
  const auto &m = measure();
  std::vector<double> means(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    means[i] = m.integrate([i](PointRef x) { return x[static_cast<Eigen::Index>(i)]; });
  }
  return m.integrate([&](PointRef x) {
    double product = 1.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      product *= ipow(x[static_cast<Eigen::Index>(i)] - means[i], e[i]);
    }
    return product;
  });
}

std::optional<double> Expectation::exact_mean(const Polynomial &p) const {
  return p.expectation([this](const Exponents &e) { return exact_raw_moment(e); });
}

double Expectation::mean(const PointFunction &g) const { return measure().integrate(g); }

double Expectation::mean_standard_error(const PointFunction &g) const {
  if (state_->discrete) {
    return 0.0;
  }
  return sample_standard_error(measure(), g);
}

double evaluate(const Functional &f, const DiscreteMeasure &v) {
  if (auto dim = f.required_dim(); dim && *dim != v.dim()) {
    throw std::invalid_argument("functional " + f.name() + " needs dimension " +
                                std::to_string(*dim) + ", got " + std::to_string(v.dim()));
  }
  return std::visit(
      overloaded{
          [&](const kinds::Linear &l) { return v.integrate(l.psi); },
          [&](const kinds::RawMoment &m) { return v.raw_moment(m.exponents); },
          [&](const kinds::CentralMoment &m) {
            return *Expectation(v).exact_central_moment(m.exponents);
          },
          [&](const kinds::Correlation &) {
            const auto c = correlation_moments(v);
            return c.m11 / std::sqrt(c.m20 * c.m02);
          },
          [&](const kinds::DoubleIntegral &d) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i) {
              double inner = 0.0;
              for (Eigen::Index j = 0; j < v.size(); ++j) {
                inner += v.weights[j] * d.psi(v.atoms.col(i), v.atoms.col(j));
              }
              sum += v.weights[i] * inner;
            }
            return sum;
          },
          [&](const kinds::CompositeMoments &c) {
            Eigen::VectorXd values(static_cast<Eigen::Index>(c.integrands.size()));
            for (std::size_t j = 0; j < c.integrands.size(); ++j) {
              values[static_cast<Eigen::Index>(j)] = v.integrate(c.integrands[j].value);
            }
            return c.outer(values);
          },
      },
      f.kind());
}

EvalResult eval_on_repartition(const Functional &f, const Repartition &r) {
  return EvalResult{evaluate(f, r.as_measure()), 0.0, EvalMethod::ExactSum, {}};
}

std::optional<std::string> moment_warning(const Functional &f, const DistributionModel &m) {
  const auto dof = m.min_student_dof();
  const int needed = 2 * f.order();
  if (dof && *dof <= needed) {
    std::ostringstream out;
    out << "Student-t marginal with dof=" << *dof << " lacks the finite moments of order "
        << needed << " that " << f.name()
        << " needs; integrals are not absolutely convergent and the limit law may fail";
    return out.str();
  }
  return std::nullopt;
}

namespace {

std::optional<double> exact_model_value(const Functional &f, const Expectation &base) {
  return std::visit(
      overloaded{
          [&](const kinds::Linear &l) -> std::optional<double> {
            if (!l.polynomial) return std::nullopt;
            return base.exact_mean(*l.polynomial);
          },
          [&](const kinds::RawMoment &m) { return base.exact_raw_moment(m.exponents); },
          [&](const kinds::CentralMoment &m) { return base.exact_central_moment(m.exponents); },
          [&](const kinds::Correlation &) -> std::optional<double> {
            const auto m20 = base.exact_central_moment({2, 0});
            const auto m02 = base.exact_central_moment({0, 2});
            const auto m11 = base.exact_central_moment({1, 1});
            if (!m20 || !m02 || !m11) return std::nullopt;
            if (*m20 <= 0.0 || *m02 <= 0.0) {
              throw DegenerateError("correlation undefined: zero variance in a coordinate");
            }
            return *m11 / std::sqrt(*m20 * *m02);
          },
          [](const kinds::DoubleIntegral &) -> std::optional<double> { return std::nullopt; },
          [&](const kinds::CompositeMoments &c) -> std::optional<double> {
            Eigen::VectorXd values(static_cast<Eigen::Index>(c.integrands.size()));
            for (std::size_t j = 0; j < c.integrands.size(); ++j) {
              if (!c.integrands[j].polynomial) return std::nullopt;
              const auto value = base.exact_mean(*c.integrands[j].polynomial);
              if (!value) return std::nullopt;
              values[static_cast<Eigen::Index>(j)] = *value;
            }
            return c.outer(values);
          },
      },
      f.kind());
}

} // namespace

EvalResult eval_on_model(const Functional &f, const DistributionModel &m, std::size_t budget,
                         std::uint64_t seed) {
  if (auto dim = f.required_dim(); dim && *dim != m.dim()) {
    throw std::invalid_argument("functional " + f.name() + " needs dimension " +
                                std::to_string(*dim) + ", got " + std::to_string(m.dim()));
  }
  EvalResult result;
  if (auto warning = moment_warning(f, m)) {
    result.warnings.push_back(*warning);
  }
  if (auto measure = m.as_measure()) {
    result.value = evaluate(f, *measure);
    result.method = EvalMethod::ExactSum;
    return result;
  }
  const Expectation base(m, budget, seed);
  if (auto exact = exact_model_value(f, base)) {
    result.value = *exact;
    result.method = EvalMethod::ExactMoments;
    return result;
  }
  if (budget == 0) {
    throw std::invalid_argument("no exact path for " + f.name() + " on " + m.describe() +
                                " and Monte Carlo budget is 0");
  }
  result.method = EvalMethod::MonteCarlo;
  if (const auto *d = std::get_if<kinds::DoubleIntegral>(&f.kind())) {
    // Independent pairs (X_i, X'_i): unbiased for ∬ψ dV dV at O(budget) cost.
    const auto &first = base.measure();
    const Expectation partner(m, budget, seed ^ 0x5DEECE66DULL);
    const auto &second = partner.measure();
    const auto n = first.size();
    Eigen::VectorXd values(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      values[i] = d->psi(first.atoms.col(i), second.atoms.col(i));
    }
    result.value = values.mean();
    result.standard_error =
        n > 1 ? std::sqrt((values.array() - result.value).square().sum() /
                          static_cast<double>((n - 1) * n))
              : 0.0;
    return result;
  }
  const auto &sample = base.measure();
  result.value = evaluate(f, sample);
  // Delta method: the standard error of a plug-in functional is that of its
  // influence function averaged over the sample.
  const auto kernel = linearize(f, Expectation(sample));
  result.standard_error =
      sample_standard_error(sample, [&](PointRef y) { return kernel.first(y); });
  return result;
}

ArithmeticFunction ArithmeticFunction::linear(Eigen::VectorXd cell_values) {
  ArithmeticFunction f;
  f.value = [cell_values](const Eigen::VectorXd &rho) { return cell_values.dot(rho); };
  f.gradient = [cell_values](const Eigen::VectorXd &) { return cell_values; };
  f.name = "linear";
  return f;
}

ArithmeticFunction ArithmeticFunction::power(int cell, int exponent, int cells) {
  if (cell < 0 || cell >= cells || exponent < 1) {
    throw std::invalid_argument("power function needs a valid cell and exponent >= 1");
  }
  ArithmeticFunction f;
  f.value = [cell, exponent](const Eigen::VectorXd &rho) { return ipow(rho[cell], exponent); };
  f.gradient = [cell, exponent, cells](const Eigen::VectorXd &rho) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(cells);
    g[cell] = exponent * ipow(rho[cell], exponent - 1);
    return g;
  };
  f.name = "power";
  return f;
}

double frequencies_as_function(const ArithmeticFunction &f, const Eigen::VectorXd &rho) {
  if ((rho.array() < 0.0).any() || std::abs(rho.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("frequencies must lie on the simplex");
  }
  return f.value(rho);
}

} // namespace vmf
