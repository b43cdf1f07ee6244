#include "vmfunc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace vmf {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kProbabilityTolerance = 1e-12;

} // namespace

double DiscreteMeasure::raw_moment(std::span<const int> exponents) const {
  return integrate([&](PointRef x) { return monomial(x, exponents); });
}

double DiscreteMeasure::cdf(PointRef x) const {
  if (x.size() != atoms.rows()) {
    throw std::invalid_argument("cdf: dimension mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
    if ((atoms.col(i).array() <= x.array()).all()) {
      sum += weights[i];
    }
  }
  return sum;
}

DiscreteMeasure DiscreteMeasure::segment(const DiscreteMeasure &base, const DiscreteMeasure &target,
                                         double t) {
  if (base.dim() != target.dim()) {
    throw std::invalid_argument("segment: dimension mismatch");
  }
  DiscreteMeasure out;
  out.atoms.resize(base.dim(), base.size() + target.size());
  out.atoms << base.atoms, target.atoms;
  out.weights.resize(base.size() + target.size());
  out.weights << (1.0 - t) * base.weights, t * target.weights;
  return out;
}

DiscreteMeasure DiscreteMeasure::difference(const DiscreteMeasure &base,
                                            const DiscreteMeasure &target) {
  if (base.dim() != target.dim()) {
    throw std::invalid_argument("difference: dimension mismatch");
  }
  DiscreteMeasure out;
  out.atoms.resize(base.dim(), base.size() + target.size());
  out.atoms << base.atoms, target.atoms;
  out.weights.resize(base.size() + target.size());
  out.weights << -base.weights, target.weights;
  return out;
}

DistributionModel DistributionModel::independent(std::vector<Marginal> marginals) {
  if (marginals.empty()) {
    throw std::invalid_argument("independent model needs at least one marginal");
  }
  for (const auto &m : marginals) {
    validate(m);
  }
  const int dim = static_cast<int>(marginals.size());
  return DistributionModel(std::make_shared<const Kind>(IndependentProduct{std::move(marginals)}),
                           dim);
}

DistributionModel DistributionModel::fgm(Marginal first, Marginal second, double theta) {
  validate(first);
  validate(second);
  if (!(theta >= -1.0 && theta <= 1.0)) {
    throw std::invalid_argument("FGM copula needs theta in [-1, 1]");
  }
  return DistributionModel(
      std::make_shared<const Kind>(FgmCopula2D{std::move(first), std::move(second), theta}), 2);
}

DistributionModel DistributionModel::discrete(Eigen::MatrixXd atoms, Eigen::VectorXd probs) {
  if (atoms.rows() < 1 || atoms.cols() < 1 || atoms.cols() != probs.size()) {
    throw std::invalid_argument("discrete model needs k >= 1 and one probability per atom");
  }
  if (!atoms.allFinite()) {
    throw std::invalid_argument("discrete model atoms must be finite");
  }
  if ((probs.array() < 0.0).any() || !probs.allFinite()) {
    throw std::invalid_argument("discrete model probabilities must be nonnegative");
  }
  if (std::abs(probs.sum() - 1.0) > kProbabilityTolerance) {
    throw std::invalid_argument("discrete model probabilities must sum to 1");
  }
  const int dim = static_cast<int>(atoms.rows());
  return DistributionModel(
      std::make_shared<const Kind>(DiscreteCells{std::move(atoms), std::move(probs)}), dim);
}

DistributionModel DistributionModel::mixture(std::vector<DistributionModel> members) {
  if (members.empty()) {
    throw std::invalid_argument("mixture needs at least one member");
  }
  const int dim = members.front().dim();
  for (const auto &m : members) {
    if (m.dim() != dim) {
      throw std::invalid_argument("mixture members must share a dimension");
    }
  }
  return DistributionModel(std::make_shared<const Kind>(Mixture{std::move(members)}), dim);
}

double DistributionModel::cdf(PointRef x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("cdf: dimension mismatch");
  }
  return std::visit(
      overloaded{
          [&](const IndependentProduct &p) {
            double value = 1.0;
            for (std::size_t i = 0; i < p.marginals.size(); ++i) {
              value *= vmf::cdf(p.marginals[i], x[static_cast<Eigen::Index>(i)]);
            }
            return value;
          },
          [&](const FgmCopula2D &c) {
            const double u = vmf::cdf(c.first, x[0]);
            const double v = vmf::cdf(c.second, x[1]);
            return u * v * (1.0 + c.theta * (1.0 - u) * (1.0 - v));
          },
          [&](const DiscreteCells &d) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < d.atoms.cols(); ++i) {
              if ((d.atoms.col(i).array() <= x.array()).all()) {
                sum += d.probs[i];
              }
            }
            return std::min(sum, 1.0);
          },
          [&](const Mixture &m) {
            double sum = 0.0;
            for (const auto &member : m.members) {
              sum += member.cdf(x);
            }
            return sum / static_cast<double>(m.members.size());
          },
      },
      *kind_);
}

Point DistributionModel::sample(Stream &stream) const {
  return std::visit(
      overloaded{
          [&](const IndependentProduct &p) {
            Point x(dim_);
            for (std::size_t i = 0; i < p.marginals.size(); ++i) {
              x[static_cast<Eigen::Index>(i)] = quantile(p.marginals[i], stream.uniform());
            }
            return x;
          },
          [&](const FgmCopula2D &c) {
            // Conditional inversion: C(v|u) = v[1 + a(1-v)] with a = θ(1-2u).
            const double u = stream.uniform();
            const double w = stream.uniform();
            const double a = c.theta * (1.0 - 2.0 * u);
            const double root = std::sqrt((1.0 + a) * (1.0 + a) - 4.0 * a * w);
            double v = 2.0 * w / (1.0 + a + root);
            v = std::clamp(v, 0x1.0p-60, 1.0 - 0x1.0p-53);
            Point x(2);
            x << quantile(c.first, u), quantile(c.second, v);
            return x;
          },
          [&](const DiscreteCells &d) {
            const double u = stream.uniform();
            double cumulative = 0.0;
            Eigen::Index chosen = d.probs.size() - 1;
            for (Eigen::Index i = 0; i < d.probs.size(); ++i) {
              cumulative += d.probs[i];
              if (u <= cumulative) {
                chosen = i;
                break;
              }
            }
            // Guard against rounding leaving u above the final cumulative sum.
            while (d.probs[chosen] == 0.0 && chosen > 0) {
              --chosen;
            }
            return Point(d.atoms.col(chosen));
          },
          [&](const Mixture &m) {
            const auto count = m.members.size();
            auto index = static_cast<std::size_t>(stream.uniform() * static_cast<double>(count));
            index = std::min(index, count - 1);
            return m.members[index].sample(stream);
          },
      },
      *kind_);
}

std::optional<double> DistributionModel::raw_moment(std::span<const int> exponents) const {
  if (static_cast<int>(exponents.size()) != dim_) {
    throw std::invalid_argument("raw_moment: exponent count must equal the dimension");
  }
  const int order = std::accumulate(exponents.begin(), exponents.end(), 0);
  if (order == 0) {
    return 1.0;
  }
  return std::visit(
      overloaded{
          [&](const IndependentProduct &p) -> std::optional<double> {
            if (order > kMaxExactMomentOrder) {
              return std::nullopt;
            }
            double value = 1.0;
            for (std::size_t i = 0; i < p.marginals.size(); ++i) {
              const auto m = vmf::raw_moment(p.marginals[i], exponents[i]);
              if (!m) {
                return std::nullopt;
              }
              value *= *m;
            }
            return value;
          },
          [&](const FgmCopula2D &c) -> std::optional<double> {
            if (order > kMaxExactMomentOrder) {
              return std::nullopt;
            }
            const auto m1 = vmf::raw_moment(c.first, exponents[0]);
            const auto m2 = vmf::raw_moment(c.second, exponents[1]);
            if (!m1 || !m2) {
              return std::nullopt;
            }
            if (c.theta == 0.0) {
              return *m1 * *m2;
            }
            const auto t1 = fgm_tilt_moment(c.first, exponents[0]);
            const auto t2 = fgm_tilt_moment(c.second, exponents[1]);
            if (!t1 || !t2) {
              return std::nullopt;
            }
            return *m1 * *m2 + c.theta * *t1 * *t2;
          },
          [&](const DiscreteCells &d) -> std::optional<double> {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < d.atoms.cols(); ++i) {
              sum += d.probs[i] * monomial(d.atoms.col(i), exponents);
            }
            return sum;
          },
          [&](const Mixture &m) -> std::optional<double> {
            double sum = 0.0;
            for (const auto &member : m.members) {
              const auto value = member.raw_moment(exponents);
              if (!value) {
                return std::nullopt;
              }
              sum += *value;
            }
            return sum / static_cast<double>(m.members.size());
          },
      },
      *kind_);
}

MomentOracle DistributionModel::moment_oracle() const {
  return [model = *this](const Exponents &e) { return model.raw_moment(e); };
}

std::optional<DiscreteMeasure> DistributionModel::as_measure() const {
  if (const auto *d = std::get_if<DiscreteCells>(kind_.get())) {
    return DiscreteMeasure{d->atoms, d->probs};
  }
  if (const auto *m = std::get_if<Mixture>(kind_.get())) {
    std::vector<DiscreteMeasure> parts;
    Eigen::Index total = 0;
    for (const auto &member : m->members) {
      auto part = member.as_measure();
      if (!part) {
        return std::nullopt;
      }
      total += part->size();
      parts.push_back(std::move(*part));
    }
    DiscreteMeasure out;
    out.atoms.resize(dim_, total);
    out.weights.resize(total);
    Eigen::Index offset = 0;
    const double share = 1.0 / static_cast<double>(parts.size());
    for (const auto &part : parts) {
      out.atoms.middleCols(offset, part.size()) = part.atoms;
      out.weights.segment(offset, part.size()) = share * part.weights;
      offset += part.size();
    }
    return out;
  }
  return std::nullopt;
}

std::optional<double> DistributionModel::min_student_dof() const {
  std::optional<double> result;
  auto consider = [&](const Marginal &m) {
    if (auto dof = student_dof(m); dof && (!result || *dof < *result)) {
      result = dof;
    }
  };
  std::visit(overloaded{
                 [&](const IndependentProduct &p) {
                   for (const auto &m : p.marginals) consider(m);
                 },
                 [&](const FgmCopula2D &c) {
                   consider(c.first);
                   consider(c.second);
                 },
                 [](const DiscreteCells &) {},
                 [&](const Mixture &m) {
                   for (const auto &member : m.members) {
                     if (auto dof = member.min_student_dof(); dof && (!result || *dof < *result)) {
                       result = dof;
                     }
                   }
                 },
             },
             *kind_);
  return result;
}

std::string DistributionModel::describe() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const IndependentProduct &p) {
                   out << "Independent(";
                   for (std::size_t i = 0; i < p.marginals.size(); ++i) {
                     out << (i ? "," : "") << vmf::describe(p.marginals[i]);
                   }
                   out << ")";
                 },
                 [&](const FgmCopula2D &c) {
                   out << "FGM(" << vmf::describe(c.first) << "," << vmf::describe(c.second)
                       << ",theta=" << c.theta << ")";
                 },
                 [&](const DiscreteCells &d) { out << "Discrete(" << d.atoms.cols() << " atoms)"; },
                 [&](const Mixture &m) { out << "Mixture(" << m.members.size() << " members)"; },
             },
             *kind_);
  return out.str();
}

} // namespace vmf
