#include "helpers.hpp"
#include "oracles.hpp"

#include "vmfunc/errors.hpp"
#include "vmfunc/functional.hpp"
#include "vmfunc/vmcalc.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vmf;
using testing::columns;
using testing::measure;
using testing::pt;

namespace {

Functional variance_composite() {
  std::vector<Integrand> integrands{Integrand::from_polynomial(Polynomial::monomial({1})),
                                    Integrand::from_polynomial(Polynomial::monomial({2}))};
  return Functional::composite(
      std::move(integrands), [](const Eigen::VectorXd &v) { return v[1] - v[0] * v[0]; },
      [](const Eigen::VectorXd &v) {
        Eigen::VectorXd g(2);
        g << -2.0 * v[0], 1.0;
        return g;
      },
      [](const Eigen::VectorXd &) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        h(0, 0) = -2.0;
        return h;
      },
      2);
}

std::vector<Functional> catalog_2d() {
  return {
      Functional::raw_moment({1, 2}),
      Functional::central_moment({2, 1}),
      Functional::central_moment({1, 1}),
      Functional::correlation(),
      Functional::linear([](PointRef x) { return std::sin(x[0]) + x[1]; }),
      Functional::double_integral([](PointRef x, PointRef y) { return x[0] * y[1] + x[1]; }),
  };
}

} // namespace

TEST_CASE("names and orders") {
  CHECK(Functional::raw_moment({1, 2}).name() == "raw_moment[1,2]");
  CHECK(Functional::central_moment({2, 0, 1}).order() == 3);
  CHECK(Functional::correlation().order() == 2);
  CHECK(Functional::correlation().required_dim() == 2);
  CHECK(Functional::raw_moment({1, 2}).required_dim() == 2);
  CHECK_THROWS_AS(Functional::raw_moment({}), std::invalid_argument);
  CHECK_THROWS_AS(Functional::raw_moment({1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(Functional::central_moment({0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(Functional::correlation(), measure({{1, 2, 3}}, {1.0})),
                  std::invalid_argument);
}

TEST_CASE("evaluation on small repartitions") {
  const Repartition r(columns({{1, 2}, {3, 4}}));
  CHECK(eval_on_repartition(Functional::raw_moment({1, 1}), r).value == doctest::Approx(7.0));
  CHECK(eval_on_repartition(Functional::raw_moment({1, 1}), r).method == EvalMethod::ExactSum);
  CHECK(eval_on_repartition(Functional::central_moment({2, 0}), r).value == doctest::Approx(1.0));
  CHECK(eval_on_repartition(Functional::correlation(), r).value == doctest::Approx(1.0));

  const Repartition skew(columns({{0}, {0}, {3}}));
  CHECK(eval_on_repartition(Functional::central_moment({3}), skew).value == doctest::Approx(2.0));
  CHECK(eval_on_repartition(Functional::central_moment({2}), skew).value == doctest::Approx(2.0));

  const Repartition anti(columns({{0, 1}, {1, 0}, {2, -1}}));
  CHECK(eval_on_repartition(Functional::correlation(), anti).value == doctest::Approx(-1.0));

  const auto product = Functional::double_integral([](PointRef x, PointRef y) { return x[0] * y[0]; });
  CHECK(eval_on_repartition(product, skew).value == doctest::Approx(1.0));
}

TEST_CASE("correlation of a constant coordinate is degenerate") {
  const Repartition flat(columns({{1, 5}, {2, 5}, {3, 5}}));
  CHECK_THROWS_AS(eval_on_repartition(Functional::correlation(), flat), DegenerateError);
  const auto model = DistributionModel::discrete(columns({{1, 5}, {2, 5}}), pt({0.5, 0.5}));
  CHECK_THROWS_AS(eval_on_model(Functional::correlation(), model, 0), DegenerateError);
}

TEST_CASE("invariance under coordinate swap and replication") {
  Stream stream({5, 0, 0});
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_discrete_measure(2, 8, stream);
    DiscreteMeasure swapped = v;
    swapped.atoms.row(0) = v.atoms.row(1);
    swapped.atoms.row(1) = v.atoms.row(0);
    CHECK(evaluate(Functional::correlation(), swapped) ==
          doctest::Approx(evaluate(Functional::correlation(), v)).epsilon(1e-12));
    CHECK(evaluate(Functional::central_moment({2, 1}), swapped) ==
          doctest::Approx(evaluate(Functional::central_moment({1, 2}), v)).epsilon(1e-12));

    // Every point repeated three times leaves the repartition unchanged.
    Eigen::MatrixXd points(2, 5);
    for (Eigen::Index j = 0; j < 5; ++j) {
      points.col(j) << 2 * stream.uniform() - 1, 2 * stream.uniform() - 1;
    }
    Eigen::MatrixXd tripled(2, 15);
    tripled << points, points, points;
    for (const auto &f : catalog_2d()) {
      CAPTURE(f.name());
      CHECK(eval_on_repartition(f, Repartition(tripled)).value ==
            doctest::Approx(eval_on_repartition(f, Repartition(points)).value).epsilon(1e-12));
    }
  }
}

TEST_CASE("correlation is bounded and affine invariant") {
  Stream stream({6, 0, 0});
  const auto gamma = Functional::correlation();
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_discrete_measure(2, 10, stream);
    const double g = evaluate(gamma, v);
    CHECK(std::abs(g) <= 1.0 + 1e-12);
    DiscreteMeasure moved = v;
    moved.atoms.row(0) = 3.0 * v.atoms.row(0).array() + 2.0;
    moved.atoms.row(1) = 0.5 * v.atoms.row(1).array() - 7.0;
    CHECK(evaluate(gamma, moved) == doctest::Approx(g).epsilon(1e-10));
    DiscreteMeasure flipped = v;
    flipped.atoms.row(1) = -v.atoms.row(1);
    CHECK(evaluate(gamma, flipped) == doctest::Approx(-g).epsilon(1e-10));
    // Central moments scale like c^(total order) and ignore shifts.
    DiscreteMeasure scaled = v;
    scaled.atoms = 2.0 * v.atoms.array() + 1.0;
    CHECK(evaluate(Functional::central_moment({2, 1}), scaled) ==
          doctest::Approx(8.0 * evaluate(Functional::central_moment({2, 1}), v)).scale(1.0));
  }
}

TEST_CASE("plug-in values agree across evaluation paths") {
  const Eigen::MatrixXd atoms = columns({{0.1, 0.3}, {-0.5, 1.0}, {0.7, -0.2}, {0.2, 0.2}});
  const Eigen::VectorXd probs = pt({0.1, 0.4, 0.3, 0.2});
  const auto model = DistributionModel::discrete(atoms, probs);
  const DiscreteMeasure m{atoms, probs};
  for (const auto &f : catalog_2d()) {
    CAPTURE(f.name());
    const auto result = eval_on_model(f, model, 0);
    CHECK(result.method == EvalMethod::ExactSum);
    CHECK(result.standard_error == 0.0);
    CHECK(result.value == doctest::Approx(evaluate(f, m)).epsilon(1e-14));
  }
  // A repartition with repeated points matches the discrete model with rational weights.
  const Repartition r(columns({{1, 0}, {1, 0}, {2, 3}, {0, 1}}));
  const auto as_model =
      DistributionModel::discrete(columns({{1, 0}, {2, 3}, {0, 1}}), pt({0.5, 0.25, 0.25}));
  for (const auto &f : catalog_2d()) {
    CHECK(eval_on_repartition(f, r).value ==
          doctest::Approx(eval_on_model(f, as_model, 0).value).epsilon(1e-13));
  }
  CHECK(evaluate(variance_composite(), measure({{0}, {1}, {3}}, {0.25, 0.25, 0.5})) ==
        doctest::Approx(evaluate(Functional::central_moment({2}), measure({{0}, {1}, {3}}, {0.25, 0.25, 0.5}))));
}

TEST_CASE("FGM correlation against quadrature and Monte Carlo") {
  for (double theta : {-1.0, -0.3, 0.5, 0.9}) {
    const auto model = DistributionModel::fgm(Uniform{0, 1}, Uniform{0, 1}, theta);
    const auto exact = eval_on_model(Functional::correlation(), model, 0);
    CHECK(exact.method == EvalMethod::ExactMoments);
    CHECK(exact.value == doctest::Approx(oracle::fgm_uniform_correlation(theta)).epsilon(1e-10));
  }
  const auto gaussian = DistributionModel::fgm(Gaussian{1, 2}, Gaussian{-1, 0.5}, 0.6);
  CHECK(eval_on_model(Functional::correlation(), gaussian, 0).value ==
        doctest::Approx(0.6 / std::numbers::pi).epsilon(1e-10));

  // A double integral has no closed form here, so Monte Carlo must cover the exact value.
  const auto model = DistributionModel::fgm(Uniform{0, 1}, Uniform{0, 1}, 0.9);
  const auto f = Functional::double_integral([](PointRef x, PointRef y) { return x[0] * y[1]; });
  const auto mc = eval_on_model(f, model, 100000, 17);
  CHECK(mc.method == EvalMethod::MonteCarlo);
  CHECK(mc.standard_error > 0.0);
  CHECK(std::abs(mc.value - 0.25) <= 3.0 * mc.standard_error);
  const auto sine = Functional::linear([](PointRef x) { return std::sin(x[0]); });
  const auto half_wave =
      DistributionModel::independent({Uniform{0, std::numbers::pi}, Uniform{0, 1}});
  const auto s = eval_on_model(sine, half_wave, 100000, 3);
  CHECK(std::abs(s.value - 2.0 / std::numbers::pi) <= 3.0 * s.standard_error);
  CHECK_THROWS_AS(eval_on_model(sine, half_wave, 0), std::invalid_argument);
}

TEST_CASE("Monte Carlo seeds reproduce") {
  const auto model = DistributionModel::fgm(Gaussian{0, 1}, Exponential{1}, 0.4);
  const auto f = Functional::linear([](PointRef x) { return std::atan(x[0] * x[1]); });
  const auto a = eval_on_model(f, model, 5000, 9);
  CHECK(a.value == eval_on_model(f, model, 5000, 9).value);
  CHECK(a.value != eval_on_model(f, model, 5000, 10).value);
}

TEST_CASE("Student-t moment warnings") {
  const auto t4 = DistributionModel::fgm(StudentT{4}, StudentT{4}, 0.5);
  const auto t5 = DistributionModel::fgm(StudentT{5}, StudentT{5}, 0.5);
  CHECK(moment_warning(Functional::correlation(), t4).has_value());
  CHECK_FALSE(moment_warning(Functional::correlation(), t5).has_value());
  CHECK_FALSE(moment_warning(Functional::correlation(),
                             DistributionModel::independent({Uniform{}, Uniform{}}))
                  .has_value());
  CHECK(moment_warning(Functional::raw_moment({1, 0}), t4) == std::nullopt);
  CHECK(eval_on_model(Functional::correlation(), t4, 1000, 1).warnings.size() == 1);
}

TEST_CASE("Expectation integrates models") {
  const auto model = DistributionModel::independent({Gaussian{1, 2}, Exponential{0.5}});
  const Expectation e(model, 0, 0);
  CHECK(*e.exact_central_moment({2, 0}) == doctest::Approx(4.0));
  CHECK(*e.exact_central_moment({0, 2}) == doctest::Approx(4.0));
  CHECK(*e.exact_central_moment({1, 1}) == doctest::Approx(0.0).scale(1.0));
  CHECK(*e.exact_raw_moment({1, 1}) == doctest::Approx(2.0));
  CHECK_FALSE(e.sampled());
  CHECK_THROWS_AS(e.mean([](PointRef x) { return x[0]; }), std::invalid_argument);

  const Expectation sampled(model, 1000, 4);
  CHECK(sampled.measure().size() == 1000);
  CHECK(sampled.sampled());
  CHECK(sampled.mean_standard_error([](PointRef x) { return x[0]; }) > 0.0);
}

TEST_CASE("arithmetic functions of frequencies") {
  const auto linear = ArithmeticFunction::linear(pt({0.0, 1.0, 4.0}));
  CHECK(frequencies_as_function(linear, pt({0.5, 0.25, 0.25})) == doctest::Approx(1.25));
  CHECK_THROWS(frequencies_as_function(linear, pt({0.5, 0.25, 0.3})));
  CHECK_THROWS(frequencies_as_function(linear, pt({1.25, -0.25, 0.0})));
  const auto square = ArithmeticFunction::power(1, 2, 3);
  CHECK(frequencies_as_function(square, pt({0.5, 0.5, 0.0})) == doctest::Approx(0.25));
  CHECK(square.gradient(pt({0.5, 0.5, 0.0}))[1] == doctest::Approx(1.0));
  CHECK_THROWS(ArithmeticFunction::power(3, 2, 3));
}
