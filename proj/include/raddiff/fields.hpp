#pragma once

#include <Eigen/Core>

namespace raddiff {

using Index = Eigen::Index;

/// Nodal values T(x_i).
template <typename Scalar>
using BasicScalarField = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Nodal-angular values psi(x_i, mu_j): one row per mesh node, one column per
/// quadrature direction, so each direction's ray is contiguous.
template <typename Scalar>
using BasicKineticField = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using ScalarField = BasicScalarField<double>;
using KineticField = BasicKineticField<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& values) {
  return values.allFinite();
}

}  // namespace raddiff
