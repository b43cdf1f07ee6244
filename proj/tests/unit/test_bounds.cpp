#include "helpers.hpp"

#include "vmfunc/bounds.hpp"

#include <doctest.h>

#include <cmath>

using namespace vmf;
using testing::columns;
using testing::pt;

namespace {

const auto kUnitSquare = DistributionModel::independent({Uniform{0, 1}, Uniform{0, 1}});

IbpOptions options_on(double lower, double upper, int points) {
  IbpOptions o;
  o.grid = QuadratureGrid::cube(2, lower, upper, points);
  return o;
}

} // namespace

TEST_CASE("quadrature grid layout") {
  const auto grid = QuadratureGrid::cube(2, 0.0, 1.0, 4);
  CHECK(grid.size() == 16);
  CHECK(grid.cell_volume() == doctest::Approx(1.0 / 16.0));
  CHECK(grid.axis(0)[0] == doctest::Approx(0.125));
  CHECK(grid.axis(1)[3] == doctest::Approx(0.875));
  const auto nodes = grid.nodes();
  CHECK(nodes(0, 1) == doctest::Approx(0.375));
  CHECK(nodes(1, 1) == doctest::Approx(0.125));
  CHECK(nodes(1, 4) == doctest::Approx(0.375));
  CHECK(grid.refined().points_per_axis == 8);
  CHECK(grid.refined().size() == 64);
}

TEST_CASE("repartition and cdf on the grid match pointwise evaluation") {
  const Repartition s(columns({{0.1, 0.9}, {0.5, 0.5}, {0.7, 0.2}, {0.3, 0.3}}));
  const auto grid = QuadratureGrid::cube(2, -0.2, 1.2, 16);
  const auto on_grid = repartition_on_grid(s, grid);
  const auto cdf = cdf_on_grid(kUnitSquare, grid);
  const auto nodes = grid.nodes();
  for (Eigen::Index j = 0; j < nodes.cols(); ++j) {
    CHECK(on_grid[j] == s(nodes.col(j)));
    CHECK(cdf[j] == doctest::Approx(kUnitSquare.cdf(nodes.col(j))));
  }
  const auto cube = QuadratureGrid::cube(3, 0.0, 1.0, 5);
  const Repartition s3(columns({{0.1, 0.2, 0.3}, {0.9, 0.1, 0.5}, {0.5, 0.5, 0.5}}));
  const auto values = repartition_on_grid(s3, cube);
  const auto nodes3 = cube.nodes();
  for (Eigen::Index j = 0; j < nodes3.cols(); ++j) {
    CHECK(values[j] == s3(nodes3.col(j)));
  }
}

TEST_CASE("weighted deviation for uniform results") {
  // E{(S_n - V)²} = V(1 - V)/n pointwise, so E{J} equals the bound.
  const auto seq = CollectiveSequence::homogeneous(DistributionModel::independent({Uniform{0, 1}}));
  const auto grid = QuadratureGrid::cube(1, 0.0, 1.0, 256);
  const auto one = [](PointRef) { return 1.0; };
  for (std::size_t n : {1u, 10u, 100u}) {
    const auto result = weighted_deviation_check(one, seq, n, 4000, grid, 12, 2);
    CAPTURE(n);
    CHECK(result.margin.passed);
    CHECK(result.margin.rhs == doctest::Approx(1.0 / (6.0 * n)).epsilon(1e-4));
    CHECK(std::abs(result.margin.lhs - result.margin.rhs) <= 3.0 * result.margin.standard_error);
    CHECK_FALSE(result.truncation_flag);
  }
  const auto wide = weighted_deviation_check(one, seq, 5, 100, QuadratureGrid::cube(1, 0.0, 0.5, 64), 1);
  CHECK(wide.truncated_mass == doctest::Approx(0.5));
  CHECK(wide.truncation_flag);
}

TEST_CASE("weighted deviation for heterogeneous collectives") {
  const auto seq = CollectiveSequence::cyclic(
      {kUnitSquare, DistributionModel::fgm(Gaussian{0.5, 0.3}, Uniform{0, 1}, -0.7)});
  const auto grid = QuadratureGrid::cube(2, -1.5, 2.5, 48);
  const auto bump = [](PointRef x) { return std::exp(-(x.squaredNorm())); };
  const auto result = weighted_deviation_check(bump, seq, 20, 3000, grid, 13, 2);
  CHECK(result.margin.passed);
  CHECK(result.margin.lhs <= result.margin.rhs + 3.0 * result.margin.standard_error);
  CHECK(normalized_weight_integral(bump, seq.mean_distribution(20), grid, 4.0) > 0.0);
}

TEST_CASE("integration by parts on a discrete model") {
  const auto v = DistributionModel::discrete(columns({{0.2, 0.3}, {0.6, 0.8}, {0.4, 0.1}}),
                                             pt({0.3, 0.3, 0.4}));
  const Repartition s(columns({{0.2, 0.3}, {0.6, 0.8}, {0.6, 0.8}}));
  const auto alpha = Integrand::from_polynomial(Polynomial::monomial({1, 1}) +
                                                Polynomial::variable(2, 0) * 0.5);
  const auto result = ibp_bound_2d(alpha, s, v, options_on(0.0, 1.0, 64));
  const double exact = (0.06 + 2 * 0.48 + 0.1 + 0.6) / 3.0 - (0.3 * 0.16 + 0.3 * 0.78 + 0.4 * 0.24);
  CHECK(result.lhs == doctest::Approx(std::abs(exact)).epsilon(1e-12));
  CHECK(result.lhs_standard_error == 0.0);
  CHECK(result.passed());
  CHECK_FALSE(result.truncation_flag);
  CHECK(result.identity_residual <= 1e-2);

  const auto constant = Integrand::from_polynomial(Polynomial::constant(2, 5.0));
  const auto flat = ibp_bound_2d(constant, s, v, options_on(0.0, 1.0, 32));
  CHECK(flat.lhs <= 1e-14);
  CHECK(flat.rhs == 0.0);
  CHECK(flat.passed());
}

TEST_CASE("integration by parts on a continuous model") {
  const auto v = DistributionModel::fgm(Uniform{0, 1}, Uniform{0, 1}, 0.5);
  const auto seq = CollectiveSequence::homogeneous(v);
  const auto alpha = Integrand::from_polynomial(Polynomial::monomial({1, 1}));
  auto options = options_on(-0.25, 1.25, 64);
  options.majorant = [](PointRef x) { return 1.0 + std::abs(x[0]) + std::abs(x[1]); };
  options.schwarz_weight = [](PointRef x) { return 1.0 / (1.0 + x.squaredNorm()); };
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto result = ibp_bound_2d(alpha, draw_experiment(seq, 50, 14, r), v, options);
    CHECK(result.passed());
    REQUIRE(result.majorant);
    REQUIRE(result.schwarz);
    CHECK(result.majorant->passed);
    CHECK(result.schwarz->passed);
    CHECK(result.majorant_violation == 0.0);
    CHECK(result.rhs_boundary_form >= 0.0);
    CHECK(result.identity_residual <= 5e-3);
  }
  // A majorant below |α_x| is reported, and its bound fails.
  auto weak = options;
  weak.majorant = [](PointRef) { return 0.1; };
  const auto bad = ibp_bound_2d(alpha, draw_experiment(seq, 50, 14, 0), v, weak);
  CHECK(bad.majorant_violation > 0.0);
  CHECK_FALSE(bad.majorant->passed);
  CHECK_THROWS(ibp_bound_2d(alpha, draw_experiment(seq, 5, 1, 0), v,
                            IbpOptions{QuadratureGrid::cube(3, 0, 1, 4), 0, 0, {}, {}}));
}

TEST_CASE("a box smaller than the support is flagged") {
  const auto v = DistributionModel::independent({Gaussian{0, 1}, Gaussian{0, 1}});
  const auto seq = CollectiveSequence::homogeneous(v);
  const auto alpha = Integrand::from_polynomial(Polynomial::variable(2, 0));
  const auto result = ibp_bound_2d(alpha, draw_experiment(seq, 40, 15, 0), v, options_on(-1, 1, 32));
  CHECK(result.truncation_flag);
  CHECK(result.truncated_mass > 0.5);
}
