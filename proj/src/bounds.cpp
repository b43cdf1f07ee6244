#include "vmfunc/bounds.hpp"

#include "vmfunc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vmf {

QuadratureGrid QuadratureGrid::cube(int dim, double lower, double upper, int points_per_axis) {
  return QuadratureGrid{Point::Constant(dim, lower), Point::Constant(dim, upper), points_per_axis};
}

Eigen::Index QuadratureGrid::size() const {
  Eigen::Index total = 1;
  for (int i = 0; i < dim(); ++i) {
    total *= points_per_axis;
  }
  return total;
}

double QuadratureGrid::cell_volume() const {
  return ((upper - lower) / static_cast<double>(points_per_axis)).prod();
}

Eigen::VectorXd QuadratureGrid::axis(int i) const {
  const double h = (upper[i] - lower[i]) / points_per_axis;
  return Eigen::VectorXd::LinSpaced(points_per_axis, 0, points_per_axis - 1)
      .unaryExpr([&](double j) { return lower[i] + (j + 0.5) * h; });
}

Eigen::MatrixXd QuadratureGrid::nodes() const {
  if (dim() < 1 || points_per_axis < 1 || (upper.array() <= lower.array()).any()) {
    throw std::invalid_argument("quadrature grid needs a nonempty box and points per axis");
  }
  const auto total = size();
  Eigen::MatrixXd out(dim(), total);
  std::vector<Eigen::VectorXd> axes;
  for (int i = 0; i < dim(); ++i) {
    axes.push_back(axis(i));
  }
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    Eigen::Index rest = flat;
    for (int i = 0; i < dim(); ++i) {
      out(i, flat) = axes[static_cast<std::size_t>(i)][rest % points_per_axis];
      rest /= points_per_axis;
    }
  }
  return out;
}

QuadratureGrid QuadratureGrid::refined() const {
  return QuadratureGrid{lower, upper, 2 * points_per_axis};
}

Eigen::VectorXd repartition_on_grid(const Repartition &s, const QuadratureGrid &grid) {
  if (s.dim() != grid.dim()) {
    throw std::invalid_argument("repartition and grid dimensions differ");
  }
  const int k = grid.dim();
  const int m = grid.points_per_axis;
  std::vector<Eigen::VectorXd> axes;
  for (int i = 0; i < k; ++i) {
    axes.push_back(grid.axis(i));
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index p = 0; p < s.size(); ++p) {
    Eigen::Index flat = 0;
    Eigen::Index stride = 1;
    bool inside = true;
    for (int i = 0; i < k; ++i) {
      const auto &a = axes[static_cast<std::size_t>(i)];
      const auto idx = std::lower_bound(a.data(), a.data() + m, s.points()(i, p)) - a.data();
      if (idx == m) {
        inside = false;
        break;
      }
      flat += idx * stride;
      stride *= m;
    }
    if (inside) {
      counts[flat] += 1.0;
    }
  }
  // Inclusive prefix sums along each axis turn cell counts into dominance counts.
  Eigen::Index stride = 1;
  for (int i = 0; i < k; ++i) {
    for (Eigen::Index flat = 0; flat < counts.size(); ++flat) {
      if ((flat / stride) % m != 0) {
        counts[flat] += counts[flat - stride];
      }
    }
    stride *= m;
  }
  return counts / static_cast<double>(s.size());
}

Eigen::VectorXd cdf_on_grid(const DistributionModel &v, const QuadratureGrid &grid) {
  const auto nodes = grid.nodes();
  Eigen::VectorXd out(nodes.cols());
  for (Eigen::Index j = 0; j < nodes.cols(); ++j) {
    out[j] = v.cdf(nodes.col(j));
  }
  return out;
}

namespace {

Eigen::VectorXd on_nodes(const PointFunction &g, const Eigen::MatrixXd &nodes) {
  Eigen::VectorXd out(nodes.cols());
  for (Eigen::Index j = 0; j < nodes.cols(); ++j) {
    out[j] = g(nodes.col(j));
  }
  return out;
}

double truncated_mass(const DistributionModel &v, const QuadratureGrid &grid) {
  Box box{grid.lower, grid.upper};
  return std::max(0.0, 1.0 - box_probability(v, box));
}

} // namespace

WeightedDeviationResult weighted_deviation_check(const PointFunction &psi,
                                                 const CollectiveSequence &seq, std::size_t n,
                                                 std::size_t replications,
                                                 const QuadratureGrid &grid, std::uint64_t seed,
                                                 unsigned threads) {
  if (replications < 2) {
    throw std::invalid_argument("weighted deviation check needs at least 2 replications");
  }
  const auto v_n = seq.mean_distribution(n);
  const auto nodes = grid.nodes();
  const Eigen::VectorXd v = cdf_on_grid(v_n, grid);
  const Eigen::VectorXd weight = on_nodes(psi, nodes);
  if ((weight.array() < 0.0).any()) {
    throw std::invalid_argument("weight function psi must be nonnegative");
  }
  const double vol = grid.cell_volume();
  std::vector<double> j(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    const Eigen::VectorXd t = repartition_on_grid(draw_experiment(seq, n, seed, r), grid) - v;
    j[r] = vol * weight.dot(t.array().square().matrix());
  });
  const Eigen::Map<const Eigen::VectorXd> values(j.data(), static_cast<Eigen::Index>(j.size()));
  const double mean = values.mean();
  const double rr = static_cast<double>(replications);
  const double se = std::sqrt((values.array() - mean).square().sum() / (rr - 1.0) / rr);
  const double rhs =
      vol * weight.dot((v.array() * (1.0 - v.array())).matrix()) / static_cast<double>(n);
  WeightedDeviationResult out{BoundMargin::check("weighted_deviation", mean, rhs, se), 0.0, false};
  out.truncated_mass = truncated_mass(v_n, grid);
  out.truncation_flag = out.truncated_mass > 0.01;
  return out;
}

double normalized_weight_integral(const PointFunction &psi, const DistributionModel &v_n,
                                  const QuadratureGrid &grid, double s_n_sq) {
  const Eigen::VectorXd v = cdf_on_grid(v_n, grid);
  const Eigen::VectorXd weight = on_nodes(psi, grid.nodes());
  return grid.cell_volume() * weight.dot((v.array() * (1.0 - v.array())).matrix()) /
         std::sqrt(s_n_sq);
}

BoundMargin IbpResult::margin() const {
  BoundMargin m{"ibp", lhs, rhs, lhs_standard_error, false};
  m.passed = lhs <= rhs + quadrature_tolerance + 3.0 * lhs_standard_error;
  return m;
}

bool IbpResult::passed() const {
  return margin().passed && (!majorant || majorant->passed) && (!schwarz || schwarz->passed);
}

namespace {

struct IbpQuadrature {
  double rhs = 0.0;
  double boundary_form = 0.0;
  double parts = 0.0; // the integrated-by-parts form of ∬α dT
  double majorant = 0.0;
  double violation = 0.0;
  double schwarz_weight = 0.0;
  double schwarz_deviation = 0.0;
};

IbpQuadrature ibp_quadrature(const Integrand &alpha, const Repartition &s,
                             const DistributionModel &v, const QuadratureGrid &grid,
                             const IbpOptions &options) {
  const auto nodes = grid.nodes();
  const Eigen::VectorXd t = repartition_on_grid(s, grid) - cdf_on_grid(v, grid);
  const double vol = grid.cell_volume();
  IbpQuadrature q;
  for (Eigen::Index j = 0; j < nodes.cols(); ++j) {
    const auto x = nodes.col(j);
    const double ax = alpha.partial(x, 1U);
    const double ay = alpha.partial(x, 2U);
    const double axy = alpha.partial(x, 3U);
    const double abs_t = std::abs(t[j]);
    q.rhs += (std::abs(axy) + std::abs(ax) + std::abs(ay)) * abs_t;
    q.boundary_form += std::abs(axy) * abs_t;
    q.parts += axy * t[j];
    if (options.majorant) {
      const double psi1 = options.majorant(x);
      q.violation = std::max(q.violation, std::max({std::abs(ax), std::abs(ay), std::abs(axy)}) - psi1);
      q.majorant += psi1 * abs_t;
      if (options.schwarz_weight) {
        const double w = options.schwarz_weight(x);
        if (!(w > 0.0)) {
          throw std::invalid_argument("Schwarz weight psi must be positive on the grid");
        }
        q.schwarz_weight += psi1 * psi1 / w;
        q.schwarz_deviation += w * t[j] * t[j];
      }
    }
  }
  q.rhs *= vol;
  q.boundary_form *= vol;
  q.parts *= vol;
  q.majorant *= vol;
  q.schwarz_weight *= vol;
  q.schwarz_deviation *= vol;

  // Edge terms at the upper corner U: ∫α_x(x,U)T(x,U)dx and ∫α_y(U,y)T(U,y)dy.
  const Point upper = grid.upper;
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::VectorXd coords = grid.axis(axis);
    const double h = (grid.upper[axis] - grid.lower[axis]) / grid.points_per_axis;
    for (Eigen::Index j = 0; j < coords.size(); ++j) {
      Point x = upper;
      x[axis] = coords[j];
      const double tj = repartition_eval(s, x) - v.cdf(x);
      const double partial = alpha.partial(x, axis == 0 ? 1U : 2U);
      q.boundary_form += h * std::abs(partial) * std::abs(tj);
      q.parts -= h * partial * tj;
    }
  }
  q.parts += alpha.value(upper) * (repartition_eval(s, upper) - v.cdf(upper));
  return q;
}

} // namespace

IbpResult ibp_bound_2d(const Integrand &alpha, const Repartition &s, const DistributionModel &v,
                       const IbpOptions &options) {
  if (s.dim() != 2 || v.dim() != 2 || options.grid.dim() != 2) {
    throw std::invalid_argument("the integration-by-parts checker is two-dimensional");
  }
  if (!alpha.value || !alpha.partial) {
    throw std::invalid_argument("integrand needs values and partials");
  }
  IbpResult out;
  const double sample_mean = s.as_measure().integrate(alpha.value);
  double model_mean = 0.0;
  std::optional<double> exact;
  if (auto measure = v.as_measure()) {
    exact = measure->integrate(alpha.value);
  } else if (alpha.polynomial) {
    exact = alpha.polynomial->expectation(v.moment_oracle());
  }
  if (exact) {
    model_mean = *exact;
  } else {
    const Expectation e(v, options.budget, options.seed);
    model_mean = e.mean(alpha.value);
    out.lhs_standard_error = e.mean_standard_error(alpha.value);
  }
  const double signed_lhs = sample_mean - model_mean;
  out.lhs = std::abs(signed_lhs);

  const auto coarse = ibp_quadrature(alpha, s, v, options.grid, options);
  const auto fine = ibp_quadrature(alpha, s, v, options.grid.refined(), options);
  out.rhs = fine.rhs;
  // Rounding in the two O(1) means sets a floor under the quadrature tolerance.
  const double roundoff =
      64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(sample_mean) + std::abs(model_mean));
  out.quadrature_tolerance = std::abs(fine.rhs - coarse.rhs) + roundoff;
  out.rhs_boundary_form = fine.boundary_form;
  out.identity_residual = std::abs(signed_lhs - fine.parts);
  out.truncated_mass = truncated_mass(v, options.grid);
  bool outside = false;
  for (Eigen::Index p = 0; p < s.size(); ++p) {
    const auto x = s.point(p);
    outside = outside || (x.array() < options.grid.lower.array()).any() ||
              (x.array() >= options.grid.upper.array()).any();
  }
  out.truncation_flag = out.truncated_mass > 0.01 || outside;

  if (options.majorant) {
    out.majorant_violation = std::max(0.0, fine.violation);
    const double tolerance = 3.0 * std::abs(fine.majorant - coarse.majorant) + roundoff;
    BoundMargin m{"ibp_majorant", out.lhs, 3.0 * fine.majorant, out.lhs_standard_error, false};
    m.passed = out.majorant_violation <= 0.0 &&
               m.lhs <= m.rhs + tolerance + 3.0 * m.standard_error;
    out.majorant = m;
    if (options.schwarz_weight) {
      const double rhs = 9.0 * fine.schwarz_weight * fine.schwarz_deviation;
      const double tol = std::abs(rhs - 9.0 * coarse.schwarz_weight * coarse.schwarz_deviation) +
                         roundoff * (2.0 * out.lhs + roundoff);
      BoundMargin sm{"ibp_schwarz", out.lhs * out.lhs, rhs, 2.0 * out.lhs * out.lhs_standard_error,
                     false};
      sm.passed = out.majorant_violation <= 0.0 && sm.lhs <= sm.rhs + tol + 3.0 * sm.standard_error;
      out.schwarz = sm;
    }
  }
  return out;
}

} // namespace vmf
