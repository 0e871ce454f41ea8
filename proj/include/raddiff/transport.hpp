#pragma once

#include <cmath>
#include <optional>
#include <type_traits>
#include <utility>

#include "raddiff/errors.hpp"
#include "raddiff/fields.hpp"
#include "raddiff/mesh.hpp"
#include "raddiff/quadrature.hpp"

namespace raddiff {

/// Incoming boundary intensities. Both vectors have one entry per quadrature
/// direction; only entries with mu > 0 of `left` and mu < 0 of `right` are read.
/// Half-space problems carry no right data.
template <typename Scalar>
struct BasicInflowData {
  using Vector = BasicScalarField<Scalar>;
  Vector left;
  std::optional<Vector> right;

  static BasicInflowData isotropic(Index n_dirs, Scalar left_value, Scalar right_value) {
    return {Vector::Constant(n_dirs, left_value), Vector::Constant(n_dirs, right_value)};
  }
  static BasicInflowData half_space(Vector left_values) { return {std::move(left_values), std::nullopt}; }
};

using InflowData = BasicInflowData<double>;

enum class FarClosure { equilibrium_at_L };

/// Cell-exact integrating-factor sweeps of eps*mu*psi' + psi = S with S linear
/// on each cell. The per-cell coefficients depend only on (eps, mesh, |mu|) and
/// are tabulated once, so repeated sweeps inside fixed-point loops are cheap.
template <typename Scalar>
class Sweeper {
 public:
  using Vector = BasicScalarField<Scalar>;
  using Kinetic = BasicKineticField<Scalar>;
  using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Sweeper(Scalar eps, const Mesh1D<Scalar>& mesh, const AngularQuadrature<Scalar>& quad)
      : mesh_(mesh), quad_(quad) {
    using std::exp;
    using std::expm1;
    if (!(eps > 0)) throw InvalidArgument("eps must be positive");
    const Index nh = quad.per_half();
    const Index nc = mesh.cells();
    decay_.resize(nc, nh);
    upstream_.resize(nc, nh);
    downstream_.resize(nc, nh);
    for (Index p = 0; p < nh; ++p) {
      const Scalar mu = quad.mu(nh + p);
      if (!(mu > 0)) throw InvalidArgument("quadrature contains mu = 0");
      for (Index i = 0; i < nc; ++i) {
        const Scalar t = mesh.width(i) / (eps * mu);
        const Scalar e = exp(-t);
        const Scalar g = -expm1(-t) / t;  // (1 - e^-t) / t
        decay_(i, p) = e;
        upstream_(i, p) = g - e;
        downstream_(i, p) = 1 - g;
      }
    }
  }

  const Mesh1D<Scalar>& mesh() const { return mesh_; }
  const AngularQuadrature<Scalar>& quadrature() const { return quad_; }

  /// Isotropic source, inflow at both ends.
  Kinetic operator()(const Vector& source, const BasicInflowData<Scalar>& inflow) const {
    check_source_rows(source.size());
    const Vector& right = require_right(inflow);
    return march([&](Index i, Index) { return source[i]; }, inflow.left,
                 [&](Index j) { return right[j]; });
  }

  /// Direction-dependent source, inflow at both ends.
  Kinetic operator()(const Kinetic& source, const BasicInflowData<Scalar>& inflow) const {
    check_source_rows(source.rows());
    check_source_cols(source.cols());
    const Vector& right = require_right(inflow);
    return march([&](Index i, Index j) { return source(i, j); }, inflow.left,
                 [&](Index j) { return right[j]; });
  }

  /// Half-space sweep: incoming values at the far end equal the local source.
  Kinetic half_space(const Vector& source, const Vector& inflow_left) const {
    check_source_rows(source.size());
    const Index last = mesh_.size() - 1;
    return march([&](Index i, Index) { return source[i]; }, inflow_left,
                 [&](Index) { return source[last]; });
  }

  Kinetic half_space(const Kinetic& source, const Vector& inflow_left) const {
    check_source_rows(source.rows());
    check_source_cols(source.cols());
    const Index last = mesh_.size() - 1;
    return march([&](Index i, Index j) { return source(i, j); }, inflow_left,
                 [&](Index j) { return source(last, j); });
  }

 private:
  template <class Source, class Right>
  Kinetic march(Source&& src, const Vector& left, Right&& right) const {
    const Index n = mesh_.size();
    const Index nd = quad_.size();
    const Index nh = quad_.per_half();
    if (left.size() != nd) throw InvalidArgument("inflow size does not match quadrature");
    Kinetic psi(n, nd);
    for (Index j = 0; j < nd; ++j) {
      if (j >= nh) {
        const Index p = j - nh;
        Scalar v = left[j];
        psi(0, j) = v;
        for (Index i = 0; i + 1 < n; ++i) {
          v = decay_(i, p) * v + upstream_(i, p) * src(i, j) + downstream_(i, p) * src(i + 1, j);
          psi(i + 1, j) = v;
        }
      } else {
        const Index p = nh - 1 - j;
        Scalar v = right(j);
        psi(n - 1, j) = v;
        for (Index i = n - 2; i >= 0; --i) {
          v = decay_(i, p) * v + upstream_(i, p) * src(i + 1, j) + downstream_(i, p) * src(i, j);
          psi(i, j) = v;
        }
      }
    }
    return psi;
  }

  void check_source_rows(Index rows) const {
    if (rows != mesh_.size()) throw InvalidArgument("source size does not match mesh");
  }
  void check_source_cols(Index cols) const {
    if (cols != quad_.size()) throw InvalidArgument("source directions do not match quadrature");
  }
  static const Vector& require_right(const BasicInflowData<Scalar>& inflow) {
    if (!inflow.right) throw InvalidArgument("slab sweep needs right inflow data");
    return *inflow.right;
  }

  Mesh1D<Scalar> mesh_;
  AngularQuadrature<Scalar> quad_;
  Table decay_, upstream_, downstream_;
};

template <typename Scalar>
BasicKineticField<Scalar> sweep(Scalar eps, const std::type_identity_t<BasicScalarField<Scalar>>& source,
                                const BasicInflowData<Scalar>& inflow, const Mesh1D<Scalar>& mesh,
                                const AngularQuadrature<Scalar>& quad) {
  return Sweeper<Scalar>(eps, mesh, quad)(source, inflow);
}

template <typename Scalar>
BasicKineticField<Scalar> half_space_sweep(const std::type_identity_t<BasicScalarField<Scalar>>& source,
                                           const BasicInflowData<Scalar>& inflow_left,
                                           const Mesh1D<Scalar>& mesh,
                                           const AngularQuadrature<Scalar>& quad,
                                           FarClosure closure = FarClosure::equilibrium_at_L) {
  (void)closure;
  return Sweeper<Scalar>(Scalar(1), mesh, quad).half_space(source, inflow_left.left);
}

}  // namespace raddiff
