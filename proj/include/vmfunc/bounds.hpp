#pragma once

#include "vmfunc/asymptotics.hpp"
#include "vmfunc/functional.hpp"
#include "vmfunc/repartition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace vmf {

/// Tensor midpoint rule on the truncation box [lower, upper]^k.
struct QuadratureGrid {
  Point lower;
  Point upper;
  int points_per_axis = 64;

  static QuadratureGrid cube(int dim, double lower, double upper, int points_per_axis);

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::Index size() const;
  double cell_volume() const;
  /// Midpoints along one axis.
  Eigen::VectorXd axis(int i) const;
  /// All nodes, one per column, axis 0 varying fastest.
  Eigen::MatrixXd nodes() const;
  /// Same box, twice the points per axis.
  QuadratureGrid refined() const;
};

/// S_n at every node, in `nodes()` order.
Eigen::VectorXd repartition_on_grid(const Repartition &s, const QuadratureGrid &grid);
Eigen::VectorXd cdf_on_grid(const DistributionModel &v, const QuadratureGrid &grid);

struct WeightedDeviationResult {
  BoundMargin margin;
  /// V_n mass outside the truncation box.
  double truncated_mass = 0.0;
  bool truncation_flag = false;
};

/// E{J} = E{∫ψ(S_n - V_n)² dX} against (1/n)∫ψV_n(1 - V_n) dX, both by the
/// same quadrature; E{J} from `replications` experiments.
WeightedDeviationResult weighted_deviation_check(const PointFunction &psi,
                                                 const CollectiveSequence &seq, std::size_t n,
                                                 std::size_t replications,
                                                 const QuadratureGrid &grid, std::uint64_t seed,
                                                 unsigned threads = 1);

/// (1/s_n)∫ψV_n(1 - V_n) dX; should tend to zero for the weighted deviation to vanish.
double normalized_weight_integral(const PointFunction &psi, const DistributionModel &v_n,
                                  const QuadratureGrid &grid, double s_n_sq);

struct IbpOptions {
  QuadratureGrid grid;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  /// ψ₁ majorizing |α_x|, |α_y|, |α_xy|; enables the 3∬ψ₁|T| bound.
  PointFunction majorant;
  /// Positive ψ for the Schwarz form lhs² <= 9∬ψ₁²/ψ · ∬ψT² (needs majorant).
  PointFunction schwarz_weight;
};

struct IbpResult {
  /// |∬α dT_n| with T_n = S_n - V_n.
  double lhs = 0.0;
  double lhs_standard_error = 0.0;
  /// ∬(|α_xy| + |α_x| + |α_y|)|T_n| on the refined grid.
  double rhs = 0.0;
  /// |rhs(G) - rhs(G/2)| plus a rounding floor for lhs.
  double quadrature_tolerance = 0.0;
  /// ∬|α_xy||T| plus the two boundary line integrals at the upper edges.
  double rhs_boundary_form = 0.0;
  /// |∬α dT - (integrated-by-parts form)| by quadrature.
  double identity_residual = 0.0;
  double truncated_mass = 0.0;
  bool truncation_flag = false;
  std::optional<BoundMargin> majorant;
  std::optional<BoundMargin> schwarz;
  /// max over nodes of (max partial - ψ₁), positive when ψ₁ fails to majorize.
  double majorant_violation = 0.0;

  BoundMargin margin() const;
  bool passed() const;
};

IbpResult ibp_bound_2d(const Integrand &alpha, const Repartition &s, const DistributionModel &v,
                       const IbpOptions &options);

} // namespace vmf
