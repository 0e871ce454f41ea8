#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "raddiff/errors.hpp"
#include "raddiff/fields.hpp"

namespace raddiff {

/// Ordered nodes 0 = x_0 < x_1 < ... < x_n = length.
template <typename Scalar>
class Mesh1D {
 public:
  using Vector = BasicScalarField<Scalar>;

  Mesh1D() = default;

  explicit Mesh1D(Vector nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw InvalidArgument("mesh needs at least two nodes");
    if (!nodes_.allFinite()) throw InvalidArgument("mesh nodes must be finite");
    if (nodes_[0] != Scalar(0)) throw InvalidArgument("first mesh node must be 0");
    for (Index i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) {
        throw InvalidArgument("mesh nodes must be strictly increasing");
      }
    }
  }

  Index size() const { return nodes_.size(); }
  Index cells() const { return nodes_.size() - 1; }
  Scalar length() const { return nodes_[nodes_.size() - 1]; }
  const Vector& nodes() const { return nodes_; }
  Scalar operator[](Index i) const { return nodes_[i]; }

  /// Width of cell i = [x_i, x_{i+1}].
  Scalar width(Index i) const { return nodes_[i + 1] - nodes_[i]; }

  Vector widths() const { return nodes_.tail(cells()) - nodes_.head(cells()); }

  Scalar min_width() const { return widths().minCoeff(); }

  /// Trapezoid-rule weights, so that w.dot(f) approximates the integral of f.
  Vector trapezoid_weights() const {
    Vector w = Vector::Zero(size());
    for (Index i = 0; i < cells(); ++i) {
      w[i] += width(i) / 2;
      w[i + 1] += width(i) / 2;
    }
    return w;
  }

  /// Index of the cell containing x (clamped to the mesh).
  Index locate(Scalar x) const {
    const auto* begin = nodes_.data();
    const auto* end = begin + nodes_.size();
    Index i = static_cast<Index>(std::upper_bound(begin, end, x) - begin) - 1;
    return std::clamp<Index>(i, 0, cells() - 1);
  }

 private:
  Vector nodes_;
};

enum class Grading { uniform, layer_graded };

template <typename Scalar>
struct GradingOptions {
  Scalar layer_extent = 5;  // layer region is [0, layer_extent * eps]
  Scalar ratio = 1.15;      // upper bound on the geometric stretching ratio
};

namespace detail {

// Width of the last of n geometric cells with ratio r spanning ell.
template <typename Scalar>
Scalar last_geometric_width(Scalar ell, Index n, Scalar r) {
  using std::pow;
  if (r == Scalar(1)) return ell / Scalar(n);
  return ell * (r - 1) / (r - pow(r, Scalar(1 - n)));
}

}  // namespace detail

/// Uniform mesh with n_bulk nodes, or a mesh whose first n_layer cells stretch
/// geometrically from x = 0 across [0, layer_extent * eps] and continue with
/// uniform spacing length / (n_bulk - 1). The stretching ratio is reduced below
/// opts.ratio when needed so the last layer cell does not exceed the bulk spacing.
template <typename Scalar>
Mesh1D<Scalar> build_mesh(Index n_bulk, Index n_layer, Scalar eps, Grading grading,
                          Scalar length, const GradingOptions<Scalar>& opts = {}) {
  using std::pow;
  if (!(length > 0) || !std::isfinite(static_cast<double>(length))) {
    throw InvalidArgument("mesh length must be positive");
  }
  if (!(eps > 0) || !std::isfinite(static_cast<double>(eps))) {
    throw InvalidArgument("eps must be positive");
  }
  if (n_bulk < 2) throw InvalidArgument("n_bulk must be at least 2");
  using Vector = typename Mesh1D<Scalar>::Vector;

  if (grading == Grading::uniform) {
    return Mesh1D<Scalar>(Vector::LinSpaced(n_bulk, Scalar(0), length));
  }
  if (n_layer < 2) throw InvalidArgument("n_layer must be at least 2");
  if (!(opts.ratio >= 1) || !(opts.layer_extent > 0)) {
    throw InvalidArgument("grading ratio must be >= 1 and layer extent positive");
  }

  const Scalar h_bulk = length / Scalar(n_bulk - 1);
  const Scalar ell = std::min(opts.layer_extent * eps, length / 2);
  const Scalar cap = std::max(h_bulk, ell / Scalar(n_layer));
  Scalar r = opts.ratio;
  if (detail::last_geometric_width(ell, n_layer, r) > cap) {
    Scalar lo = 1, hi = r;
    for (int it = 0; it < 200; ++it) {
      Scalar mid = (lo + hi) / 2;
      if (detail::last_geometric_width(ell, n_layer, mid) > cap) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    r = lo;
  }

  const Scalar rest = length - ell;
  Index n_rest = static_cast<Index>(std::ceil(static_cast<double>(rest / h_bulk) - 1e-9));
  n_rest = std::max<Index>(n_rest, 1);

  Vector nodes(n_layer + n_rest + 1);
  for (Index i = 0; i <= n_layer; ++i) {
    if (r == Scalar(1)) {
      nodes[i] = ell * Scalar(i) / Scalar(n_layer);
    } else {
      // ell * (r^i - 1) / (r^n - 1), written to avoid overflow of r^n.
      const Scalar rn = pow(r, -Scalar(n_layer));
      nodes[i] = ell * (pow(r, Scalar(i - n_layer)) - rn) / (1 - rn);
    }
  }
  nodes[n_layer] = ell;
  for (Index j = 1; j <= n_rest; ++j) {
    nodes[n_layer + j] = ell + rest * Scalar(j) / Scalar(n_rest);
  }
  nodes[nodes.size() - 1] = length;
  return Mesh1D<Scalar>(std::move(nodes));
}

using Mesh = Mesh1D<double>;

}  // namespace raddiff
