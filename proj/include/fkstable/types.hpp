#pragma once

#include <Eigen/Dense>

namespace fkstable {

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using ArrayX = Eigen::Array<T, Eigen::Dynamic, 1>;

using Real   = double;
using Matrix = MatrixX<Real>;
using Vector = VectorX<Real>;
using Array  = ArrayX<Real>;

// A point of R^d. The state space of every process here is R^d \ {0}.
using Point = Vector;

inline Point point1(Real x) {
  Point p(1);
  p(0) = x;
  return p;
}

}  // namespace fkstable
