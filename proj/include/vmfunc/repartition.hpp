#pragma once

#include "vmfunc/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace vmf {

/// Empirical repartition S(X) of n stored k-dimensional results.
///
/// nS(X) counts the stored points whose every coordinate is <= the matching
/// coordinate of X. Points are stored one per column.
class Repartition {
public:
  explicit Repartition(Eigen::MatrixXd points);

  int dim() const { return static_cast<int>(points_.rows()); }
  Eigen::Index size() const { return points_.cols(); }
  const Eigen::MatrixXd &points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.col(i); }

  /// S(x) in {0, 1/n, ..., 1}.
  double operator()(PointRef x) const;

  /// The repartition as a measure with weight 1/n per point.
  DiscreteMeasure as_measure() const;

private:
  Eigen::MatrixXd points_;
};

double repartition_eval(const Repartition &r, PointRef x);
double model_cdf(const DistributionModel &m, PointRef x);

/// Sequence of collectives C'_1, C'_2, ...: either one model repeated, or an
/// explicit list used cyclically (index ν uses list[ν mod L]).
class CollectiveSequence {
public:
  static CollectiveSequence homogeneous(DistributionModel model);
  static CollectiveSequence cyclic(std::vector<DistributionModel> models);

  int dim() const { return models_.front().dim(); }
  bool is_homogeneous() const { return models_.size() == 1; }
  std::size_t period() const { return models_.size(); }

  /// Model of the collective with zero-based index ν.
  const DistributionModel &model(std::size_t index) const {
    return models_[index % models_.size()];
  }

  /// V_n = (1/n)(V'_1 + ... + V'_n).
  DistributionModel mean_distribution(std::size_t n) const;

private:
  explicit CollectiveSequence(std::vector<DistributionModel> models);
  std::vector<DistributionModel> models_;
};

/// One result from each of the first n collectives. Point ν is drawn from
/// stream (seed, replication, ν) so any replication reproduces in isolation.
Repartition draw_experiment(const CollectiveSequence &seq, std::size_t n, std::uint64_t seed,
                            std::uint64_t replication);

/// Half-open axis-aligned box [lower, upper).
struct Box {
  Point lower;
  Point upper;

  bool contains(PointRef x) const;
};

/// l >= 2 pairwise disjoint boxes L_1, ..., L_l.
class CellPartition {
public:
  explicit CellPartition(std::vector<Box> cells);

  int dim() const { return static_cast<int>(cells_.front().lower.size()); }
  std::size_t size() const { return cells_.size(); }
  const std::vector<Box> &cells() const { return cells_; }

  /// Regular grid of equal cells over [lower, upper).
  static CellPartition grid(const Point &lower, const Point &upper,
                            const std::vector<int> &cells_per_dim);

private:
  std::vector<Box> cells_;
};

/// Probability mass of a half-open box under a model.
double box_probability(const DistributionModel &m, const Box &box);

/// Relative frequencies ρ_λ of the stored points in each cell.
Eigen::VectorXd discretize(const Repartition &r, const CellPartition &p);
/// Cell probabilities p'_λ (corner inclusion–exclusion on the CDF for
/// continuous models, atom counting for discrete ones).
Eigen::VectorXd discretize(const DistributionModel &m, const CellPartition &p);

} // namespace vmf
