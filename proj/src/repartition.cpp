#include "vmfunc/repartition.hpp"

#include <stdexcept>

namespace vmf {

Repartition::Repartition(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw std::invalid_argument("repartition needs n >= 1 points of dimension k >= 1");
  }
  if (!points_.allFinite()) {
    throw std::invalid_argument("repartition points must be finite");
  }
}

double Repartition::operator()(PointRef x) const {
  if (x.size() != points_.rows()) {
    throw std::invalid_argument("repartition: dimension mismatch");
  }
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < points_.cols(); ++i) {
    if ((points_.col(i).array() <= x.array()).all()) {
      ++count;
    }
  }
  return static_cast<double>(count) / static_cast<double>(points_.cols());
}

DiscreteMeasure Repartition::as_measure() const {
  return DiscreteMeasure{points_, Eigen::VectorXd::Constant(points_.cols(),
                                                             1.0 / static_cast<double>(size()))};
}

double repartition_eval(const Repartition &r, PointRef x) { return r(x); }

double model_cdf(const DistributionModel &m, PointRef x) { return m.cdf(x); }

CollectiveSequence::CollectiveSequence(std::vector<DistributionModel> models)
    : models_(std::move(models)) {
  if (models_.empty()) {
    throw std::invalid_argument("collective sequence needs at least one model");
  }
  const int dim = models_.front().dim();
  for (const auto &m : models_) {
    if (m.dim() != dim) {
      throw std::invalid_argument("all collectives must share a dimension");
    }
  }
}

CollectiveSequence CollectiveSequence::homogeneous(DistributionModel model) {
  return CollectiveSequence({std::move(model)});
}

CollectiveSequence CollectiveSequence::cyclic(std::vector<DistributionModel> models) {
  return CollectiveSequence(std::move(models));
}

DistributionModel CollectiveSequence::mean_distribution(std::size_t n) const {
  if (n == 0) {
    throw std::invalid_argument("mean distribution needs n >= 1");
  }
  if (is_homogeneous()) {
    return models_.front();
  }
  std::vector<DistributionModel> members;
  members.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    members.push_back(model(i));
  }
  return DistributionModel::mixture(std::move(members));
}

Repartition draw_experiment(const CollectiveSequence &seq, std::size_t n, std::uint64_t seed,
                            std::uint64_t replication) {
  if (n == 0) {
    throw std::invalid_argument("draw_experiment needs n >= 1");
  }
  Eigen::MatrixXd points(seq.dim(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Stream stream({seed, replication, i});
    points.col(static_cast<Eigen::Index>(i)) = seq.model(i).sample(stream);
  }
  return Repartition(std::move(points));
}

bool Box::contains(PointRef x) const {
  return (lower.array() <= x.array()).all() && (x.array() < upper.array()).all();
}

CellPartition::CellPartition(std::vector<Box> cells) : cells_(std::move(cells)) {
  if (cells_.size() < 2) {
    throw std::invalid_argument("cell partition needs at least two cells");
  }
  const auto dim = cells_.front().lower.size();
  for (const auto &box : cells_) {
    if (box.lower.size() != dim || box.upper.size() != dim || dim < 1) {
      throw std::invalid_argument("cell partition boxes must share a dimension");
    }
    if ((box.lower.array() >= box.upper.array()).any()) {
      throw std::invalid_argument("cell box needs lower < upper in every coordinate");
    }
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    for (std::size_t j = i + 1; j < cells_.size(); ++j) {
      const auto &a = cells_[i];
      const auto &b = cells_[j];
      const bool overlap =
          (a.lower.array() < b.upper.array()).all() && (b.lower.array() < a.upper.array()).all();
      if (overlap) {
        throw std::invalid_argument("cell partition boxes overlap");
      }
    }
  }
}

CellPartition CellPartition::grid(const Point &lower, const Point &upper,
                                  const std::vector<int> &cells_per_dim) {
  const auto k = lower.size();
  if (upper.size() != k || static_cast<Eigen::Index>(cells_per_dim.size()) != k) {
    throw std::invalid_argument("grid: dimension mismatch");
  }
  std::vector<Box> boxes;
  std::vector<int> index(static_cast<std::size_t>(k), 0);
  while (true) {
    Box box{Point(k), Point(k)};
    for (Eigen::Index d = 0; d < k; ++d) {
      const double width = (upper[d] - lower[d]) / cells_per_dim[static_cast<std::size_t>(d)];
      box.lower[d] = lower[d] + width * index[static_cast<std::size_t>(d)];
      box.upper[d] = index[static_cast<std::size_t>(d)] + 1 == cells_per_dim[static_cast<std::size_t>(d)]
                         ? upper[d]
                         : lower[d] + width * (index[static_cast<std::size_t>(d)] + 1);
    }
    boxes.push_back(std::move(box));
    std::size_t d = 0;
    while (d < index.size() && ++index[d] == cells_per_dim[d]) {
      index[d] = 0;
      ++d;
    }
    if (d == index.size()) {
      break;
    }
  }
  return CellPartition(std::move(boxes));
}

double box_probability(const DistributionModel &m, const Box &box) {
  if (box.lower.size() != m.dim()) {
    throw std::invalid_argument("box_probability: dimension mismatch");
  }
  if (const auto *mix = std::get_if<Mixture>(&m.kind())) {
    double sum = 0.0;
    for (const auto &member : mix->members) {
      sum += box_probability(member, box);
    }
    return sum / static_cast<double>(mix->members.size());
  }
  if (auto measure = m.as_measure()) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < measure->size(); ++i) {
      if (box.contains(measure->atoms.col(i))) {
        sum += measure->weights[i];
      }
    }
    return sum;
  }
  // Continuous: P(lower < X <= upper) by inclusion–exclusion over the 2^k corners.
  const int k = m.dim();
  double sum = 0.0;
  Point corner(k);
  for (unsigned mask = 0; mask < (1U << k); ++mask) {
    int lower_count = 0;
    for (int d = 0; d < k; ++d) {
      if ((mask >> d) & 1U) {
        corner[d] = box.lower[d];
        ++lower_count;
      } else {
        corner[d] = box.upper[d];
      }
    }
    sum += (lower_count % 2 == 0 ? 1.0 : -1.0) * m.cdf(corner);
  }
  return std::max(sum, 0.0);
}

Eigen::VectorXd discretize(const Repartition &r, const CellPartition &p) {
  if (r.dim() != p.dim()) {
    throw std::invalid_argument("discretize: dimension mismatch");
  }
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (p.cells()[c].contains(r.point(i))) {
        weights[static_cast<Eigen::Index>(c)] += 1.0;
        break;
      }
    }
  }
  return weights / static_cast<double>(r.size());
}

Eigen::VectorXd discretize(const DistributionModel &m, const CellPartition &p) {
  if (m.dim() != p.dim()) {
    throw std::invalid_argument("discretize: dimension mismatch");
  }
  Eigen::VectorXd weights(static_cast<Eigen::Index>(p.size()));
  for (std::size_t c = 0; c < p.size(); ++c) {
    weights[static_cast<Eigen::Index>(c)] = box_probability(m, p.cells()[c]);
  }
  return weights;
}

} // namespace vmf
