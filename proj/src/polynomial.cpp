#include "vmfunc/polynomial.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace vmf {

double ipow(double x, int p) {
  double result = 1.0;
  for (int i = 0; i < p; ++i) {
    result *= x;
  }
  return result;
}

double monomial(PointRef x, std::span<const int> exponents) {
  double result = 1.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    result *= ipow(x[static_cast<Eigen::Index>(i)], exponents[i]);
  }
  return result;
}

Polynomial Polynomial::constant(int dim, double value) {
  Polynomial p(dim);
  p.add_term(Exponents(static_cast<std::size_t>(dim), 0), value);
  return p;
}

Polynomial Polynomial::variable(int dim, int coordinate) {
  Exponents e(static_cast<std::size_t>(dim), 0);
  e.at(static_cast<std::size_t>(coordinate)) = 1;
  return monomial(e);
}

Polynomial Polynomial::monomial(const Exponents &exponents, double coefficient) {
  Polynomial p(static_cast<int>(exponents.size()));
  p.add_term(exponents, coefficient);
  return p;
}

int Polynomial::degree() const {
  int degree = 0;
  for (const auto &[e, c] : terms_) {
    degree = std::max(degree, std::accumulate(e.begin(), e.end(), 0));
  }
  return degree;
}

void Polynomial::add_term(const Exponents &exponents, double coefficient) {
  if (static_cast<int>(exponents.size()) != dim_) {
    throw std::invalid_argument("polynomial term has wrong dimension");
  }
  if (std::any_of(exponents.begin(), exponents.end(), [](int e) { return e < 0; })) {
    throw std::invalid_argument("polynomial exponents must be nonnegative");
  }
  if (coefficient == 0.0) {
    return;
  }
  auto [it, inserted] = terms_.emplace(exponents, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) {
      terms_.erase(it);
    }
  }
}

double Polynomial::operator()(PointRef x) const {
  double sum = 0.0;
  for (const auto &[e, c] : terms_) {
    sum += c * vmf::monomial(x, e);
  }
  return sum;
}

Polynomial Polynomial::partial(unsigned mask) const {
  Polynomial result(dim_);
  for (const auto &[e, c] : terms_) {
    Exponents reduced = e;
    double coefficient = c;
    for (int i = 0; i < dim_; ++i) {
      if ((mask >> i) & 1U) {
        auto &power = reduced[static_cast<std::size_t>(i)];
        coefficient *= power;
        power = std::max(power - 1, 0);
      }
    }
    result.add_term(reduced, coefficient);
  }
  return result;
}

std::optional<double> Polynomial::expectation(const MomentOracle &moments) const {
  double sum = 0.0;
  for (const auto &[e, c] : terms_) {
    const auto m = moments(e);
    if (!m) {
      return std::nullopt;
    }
    sum += c * *m;
  }
  return sum;
}

Polynomial Polynomial::operator+(const Polynomial &other) const {
  Polynomial result = *this;
  for (const auto &[e, c] : other.terms_) {
    result.add_term(e, c);
  }
  return result;
}

Polynomial Polynomial::operator-(const Polynomial &other) const {
  return *this + other * -1.0;
}

Polynomial Polynomial::operator*(const Polynomial &other) const {
  if (dim_ != other.dim_) {
    throw std::invalid_argument("polynomial dimension mismatch");
  }
  Polynomial result(dim_);
  for (const auto &[e1, c1] : terms_) {
    for (const auto &[e2, c2] : other.terms_) {
      Exponents e(e1.size());
      for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = e1[i] + e2[i];
      }
      result.add_term(e, c1 * c2);
    }
  }
  return result;
}

Polynomial Polynomial::operator*(double scale) const {
  Polynomial result(dim_);
  for (const auto &[e, c] : terms_) {
    result.add_term(e, c * scale);
  }
  return result;
}

Polynomial Polynomial::operator+(double shift) const {
  return *this + constant(dim_, shift);
}

} // namespace vmf
