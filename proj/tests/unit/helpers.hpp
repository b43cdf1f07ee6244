#pragma once

#include "vmfunc/model.hpp"

#include <Eigen/Dense>

#include <initializer_list>

namespace testing {

inline vmf::Point pt(std::initializer_list<double> xs) {
  vmf::Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

/// One point per braced list, stored as columns.
inline Eigen::MatrixXd columns(std::initializer_list<std::initializer_list<double>> cols) {
  const auto k = static_cast<Eigen::Index>(cols.begin()->size());
  Eigen::MatrixXd m(k, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto &c : cols) m.col(j++) = pt(c);
  return m;
}

inline vmf::DiscreteMeasure measure(std::initializer_list<std::initializer_list<double>> atoms,
                                    std::initializer_list<double> weights) {
  return vmf::DiscreteMeasure{columns(atoms), pt(weights)};
}

} // namespace testing
