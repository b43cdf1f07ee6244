#include "vmfunc/cli/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace vmf::cli {

void fail(const YAML::Node &node, const std::string &message) {
  const auto mark = node.Mark();
  std::ostringstream out;
  out << "config error";
  if (!mark.is_null()) {
    out << " at line " << mark.line + 1;
  }
  out << ": " << message;
  throw ConfigError(out.str());
}

void check_keys(const YAML::Node &node, const std::string &context,
                std::initializer_list<const char *> allowed,
                std::initializer_list<const char *> required) {
  if (!node.IsMap()) {
    fail(node, context + " must be a mapping");
  }
  for (const auto &entry : node) {
    const auto key = entry.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char *k) { return key == k; })) {
      fail(entry.first, "unknown key '" + key + "' in " + context);
    }
  }
  for (const char *key : required) {
    if (!node[key]) {
      fail(node, std::string("missing key '") + key + "' in " + context);
    }
  }
}

std::string sha256_hex(const std::string &bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

ExperimentConfig parse_config(const std::string &text, const std::string &name) {
  ExperimentConfig config;
  config.text = text;
  config.digest = sha256_hex(text);
  config.name = name;
  try {
    config.root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    throw ConfigError("config error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const auto &root = config.root;
  if (!root.IsMap()) {
    throw ConfigError("config error: top level must be a mapping");
  }
  const auto schema = get<std::string>(root, "schema");
  if (schema != kSchemaVersion) {
    fail(root["schema"], "unsupported schema '" + schema + "', expected v1");
  }
  config.experiment = get<std::string>(root, "experiment");
  static const std::set<std::string> experiments{"deriv-check", "clt-run", "enumerate", "bounds"};
  if (!experiments.count(config.experiment)) {
    fail(root["experiment"], "unknown experiment '" + config.experiment + "'");
  }
  config.seed = get_or<std::uint64_t>(root, "seed", 0);
  if (root["threads"]) {
    config.threads = get<unsigned>(root, "threads");
  }
  if (root["output_dir"]) {
    config.output_dir = get<std::string>(root, "output_dir");
  }
  config.name = get_or<std::string>(root, "name", name);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.stem().string());
}

Marginal build_marginal(const YAML::Node &node) {
  const auto kind = get<std::string>(node, "kind");
  if (kind == "uniform") {
    check_keys(node, "uniform marginal", {"kind", "a", "b"}, {"a", "b"});
    return Uniform{get<double>(node, "a"), get<double>(node, "b")};
  }
  if (kind == "gaussian") {
    check_keys(node, "gaussian marginal", {"kind", "mean", "stddev"}, {"mean", "stddev"});
    return Gaussian{get<double>(node, "mean"), get<double>(node, "stddev")};
  }
  if (kind == "exponential") {
    check_keys(node, "exponential marginal", {"kind", "rate"}, {"rate"});
    return Exponential{get<double>(node, "rate")};
  }
  if (kind == "student_t") {
    check_keys(node, "student_t marginal", {"kind", "dof"}, {"dof"});
    return StudentT{get<double>(node, "dof")};
  }
  fail(node["kind"], "unknown marginal kind '" + kind + "'");
}

namespace {

template <class F> auto wrap(const YAML::Node &node, F &&build) {
  try {
    return build();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    fail(node, e.what());
  }
}

Eigen::VectorXd vector_of(const YAML::Node &node, const char *key) {
  const auto values = get<std::vector<double>>(node, key);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

DistributionModel build_model(const YAML::Node &node) {
  const auto kind = get<std::string>(node, "kind");
  return wrap(node, [&] {
    if (kind == "independent") {
      check_keys(node, "independent model", {"kind", "marginals"}, {"marginals"});
      std::vector<Marginal> marginals;
      for (const auto &m : node["marginals"]) {
        marginals.push_back(build_marginal(m));
      }
      return DistributionModel::independent(std::move(marginals));
    }
    if (kind == "fgm") {
      check_keys(node, "fgm model", {"kind", "first", "second", "theta"},
                 {"first", "second", "theta"});
      return DistributionModel::fgm(build_marginal(node["first"]), build_marginal(node["second"]),
                                    get<double>(node, "theta"));
    }
    if (kind == "discrete") {
      check_keys(node, "discrete model", {"kind", "atoms", "probs"}, {"atoms", "probs"});
      const auto atoms = get<std::vector<std::vector<double>>>(node, "atoms");
      const auto probs = vector_of(node, "probs");
      if (atoms.empty()) {
        fail(node["atoms"], "discrete model needs atoms");
      }
      Eigen::MatrixXd matrix(static_cast<Eigen::Index>(atoms.front().size()),
                             static_cast<Eigen::Index>(atoms.size()));
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (atoms[j].size() != atoms.front().size()) {
          fail(node["atoms"], "atoms must share one dimension");
        }
        for (std::size_t i = 0; i < atoms[j].size(); ++i) {
          matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = atoms[j][i];
        }
      }
      return DistributionModel::discrete(std::move(matrix), probs);
    }
    fail(node["kind"], "unknown model kind '" + kind + "'");
  });
}

CollectiveSequence build_sequence(const YAML::Node &node) {
  check_keys(node, "sequence", {"homogeneous", "cyclic"});
  if (node["homogeneous"] && !node["cyclic"]) {
    return CollectiveSequence::homogeneous(build_model(node["homogeneous"]));
  }
  if (node["cyclic"] && !node["homogeneous"]) {
    std::vector<DistributionModel> models;
    for (const auto &m : node["cyclic"]) {
      models.push_back(build_model(m));
    }
    return wrap(node, [&] { return CollectiveSequence::cyclic(std::move(models)); });
  }
  fail(node, "sequence needs exactly one of 'homogeneous' or 'cyclic'");
}

Polynomial build_polynomial(const YAML::Node &node, int dim) {
  if (!node.IsSequence() || node.size() == 0) {
    fail(node, "polynomial terms must be a nonempty list");
  }
  Polynomial p(dim);
  for (const auto &term : node) {
    check_keys(term, "polynomial term", {"coef", "exponents"}, {"coef", "exponents"});
    const auto e = get<std::vector<int>>(term, "exponents");
    if (static_cast<int>(e.size()) != dim) {
      fail(term, "term exponents must have length " + std::to_string(dim));
    }
    p.add_term(e, get<double>(term, "coef"));
  }
  return p;
}

namespace {

Functional composite_preset(const YAML::Node &node, const std::string &preset) {
  if (preset == "variance") {
    // F(A, B) = B - A² with A = ∫x dV, B = ∫x² dV.
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
  if (preset == "coefficient_of_variation") {
    // F(A, B) = sqrt(B - A²) / A.
    std::vector<Integrand> integrands{Integrand::from_polynomial(Polynomial::monomial({1})),
                                      Integrand::from_polynomial(Polynomial::monomial({2}))};
    return Functional::composite(
        std::move(integrands),
        [](const Eigen::VectorXd &v) { return std::sqrt(v[1] - v[0] * v[0]) / v[0]; },
        [](const Eigen::VectorXd &v) {
          const double a = v[0];
          const double s = std::sqrt(v[1] - a * a);
          Eigen::VectorXd g(2);
          g << -1.0 / s - s / (a * a), 1.0 / (2.0 * a * s);
          return g;
        },
        [](const Eigen::VectorXd &v) {
          const double a = v[0];
          const double q = v[1] - a * a;
          const double s = std::sqrt(q);
          Eigen::MatrixXd h(2, 2);
          h(0, 0) = -a / (q * s) + 1.0 / (a * s) + 2.0 * s / (a * a * a);
          h(0, 1) = h(1, 0) = 1.0 / (2.0 * q * s) - 1.0 / (2.0 * a * a * s);
          h(1, 1) = -1.0 / (4.0 * a * q * s);
          return h;
        },
        2);
  }
  fail(node, "unknown composite preset '" + preset + "'");
}

} // namespace

Functional build_functional(const YAML::Node &node) {
  const auto kind = get<std::string>(node, "kind");
  return wrap(node, [&] {
    if (kind == "linear") {
      check_keys(node, "linear functional", {"kind", "dim", "terms", "function", "coordinate"});
      if (node["terms"]) {
        return Functional::linear(build_polynomial(node["terms"], get<int>(node, "dim")));
      }
      const auto name = get<std::string>(node, "function");
      const auto i = static_cast<Eigen::Index>(get_or<int>(node, "coordinate", 0));
      if (name == "sin") {
        return Functional::linear([i](PointRef x) { return std::sin(x[i]); });
      }
      if (name == "exp") {
        return Functional::linear([i](PointRef x) { return std::exp(x[i]); });
      }
      if (name == "atan") {
        return Functional::linear([i](PointRef x) { return std::atan(x[i]); });
      }
      fail(node["function"], "unknown linear function '" + name + "'");
    }
    if (kind == "raw_moment") {
      check_keys(node, "raw_moment functional", {"kind", "exponents"}, {"exponents"});
      return Functional::raw_moment(get<std::vector<int>>(node, "exponents"));
    }
    if (kind == "central_moment") {
      check_keys(node, "central_moment functional", {"kind", "exponents"}, {"exponents"});
      return Functional::central_moment(get<std::vector<int>>(node, "exponents"));
    }
    if (kind == "correlation") {
      check_keys(node, "correlation functional", {"kind"});
      return Functional::correlation();
    }
    if (kind == "double_integral") {
      check_keys(node, "double_integral functional", {"kind", "kernel"}, {"kernel"});
      const auto kernel = get<std::string>(node, "kernel");
      if (kernel == "product") {
        return Functional::double_integral([](PointRef x, PointRef y) { return x.dot(y); }, 2);
      }
      if (kernel == "gaussian") {
        return Functional::double_integral(
            [](PointRef x, PointRef y) { return std::exp(-(x - y).squaredNorm()); }, 1);
      }
      if (kernel == "asymmetric") {
        return Functional::double_integral(
            [](PointRef x, PointRef y) { return x[0] * std::exp(0.5 * y[0]) + x[0] * x[0] * y[0]; },
            3);
      }
      fail(node["kernel"], "unknown double_integral kernel '" + kernel + "'");
    }
    if (kind == "composite") {
      check_keys(node, "composite functional", {"kind", "preset"}, {"preset"});
      return composite_preset(node, get<std::string>(node, "preset"));
    }
    fail(node["kind"], "unknown functional kind '" + kind + "'");
  });
}

CellProbabilities build_cell_probabilities(const YAML::Node &node) {
  const auto rows = node.as<std::vector<std::vector<double>>>();
  CellProbabilities out;
  for (const auto &row : rows) {
    out.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  wrap(node, [&] { return mean_cell_probabilities(out, 1); });
  return out;
}

ArithmeticFunction build_arithmetic_function(const YAML::Node &node, int cells) {
  const auto kind = get<std::string>(node, "kind");
  return wrap(node, [&] {
    if (kind == "linear") {
      check_keys(node, "linear arithmetic function", {"kind", "values"}, {"values"});
      const auto values = vector_of(node, "values");
      if (values.size() != cells) {
        fail(node["values"], "values must have one entry per cell");
      }
      return ArithmeticFunction::linear(values);
    }
    if (kind == "power") {
      check_keys(node, "power arithmetic function", {"kind", "cell", "exponent"},
                 {"cell", "exponent"});
      return ArithmeticFunction::power(get<int>(node, "cell"), get<int>(node, "exponent"), cells);
    }
    fail(node["kind"], "unknown arithmetic function kind '" + kind + "'");
  });
}

QuadratureGrid build_grid(const YAML::Node &node, int dim) {
  check_keys(node, "grid", {"lower", "upper", "points"}, {"lower", "upper"});
  auto corner = [&](const char *key) {
    const auto child = node[key];
    if (child.IsScalar()) {
      return Point(Point::Constant(dim, get<double>(node, key)));
    }
    const auto values = get<std::vector<double>>(node, key);
    if (static_cast<int>(values.size()) != dim) {
      fail(child, std::string(key) + " must have length " + std::to_string(dim));
    }
    return Point(Eigen::Map<const Eigen::VectorXd>(values.data(), dim));
  };
  QuadratureGrid grid{corner("lower"), corner("upper"), get_or<int>(node, "points", 64)};
  if ((grid.upper.array() <= grid.lower.array()).any() || grid.points_per_axis < 1) {
    fail(node, "grid needs upper > lower and points >= 1");
  }
  return grid;
}

PointFunction build_weight(const YAML::Node &node) {
  const auto kind = get<std::string>(node, "kind");
  if (kind == "one") {
    check_keys(node, "weight", {"kind"});
    return [](PointRef) { return 1.0; };
  }
  if (kind == "gaussian_bump") {
    check_keys(node, "weight", {"kind", "center", "width"}, {"center", "width"});
    const auto center = vector_of(node, "center");
    const double width = get<double>(node, "width");
    return [center, width](PointRef x) {
      return std::exp(-(x - center).squaredNorm() / (2.0 * width * width));
    };
  }
  if (kind == "majorant") {
    // ψ₁(x, y) = c + 2 sqrt(x² + y²).
    check_keys(node, "weight", {"kind", "c"}, {"c"});
    const double c = get<double>(node, "c");
    return [c](PointRef x) { return c + 2.0 * x.norm(); };
  }
  if (kind == "power_law") {
    // (1 + |X|²)^(-exponent/2).
    check_keys(node, "weight", {"kind", "exponent"}, {"exponent"});
    const double exponent = get<double>(node, "exponent");
    return [exponent](PointRef x) { return std::pow(1.0 + x.squaredNorm(), -0.5 * exponent); };
  }
  fail(node["kind"], "unknown weight kind '" + kind + "'");
}

std::vector<std::size_t> build_schedule(const YAML::Node &node, const char *key) {
  const auto child = node[key];
  if (!child) {
    fail(node, std::string("missing key '") + key + "'");
  }
  if (child.IsScalar()) {
    return {get<std::size_t>(node, key)};
  }
  const auto values = get<std::vector<std::size_t>>(node, key);
  if (std::any_of(values.begin(), values.end(), [](std::size_t n) { return n < 1; })) {
    fail(child, std::string(key) + " entries must be >= 1");
  }
  return values;
}

} // namespace vmf::cli
