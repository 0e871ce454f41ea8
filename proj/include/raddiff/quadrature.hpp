#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "raddiff/errors.hpp"
#include "raddiff/fields.hpp"

namespace raddiff {

/// Discrete ordinates on mu in [-1, 1]. Nodes are sorted ascending: the first
/// half are the negative directions, the second half their mirror images.
template <typename Scalar>
class AngularQuadrature {
 public:
  using Vector = BasicScalarField<Scalar>;

  AngularQuadrature() = default;

  AngularQuadrature(Vector nodes, Vector weights)
      : nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.size() != weights_.size() || nodes_.size() == 0 || nodes_.size() % 2 != 0) {
      throw InvalidArgument("quadrature needs an even, matching number of nodes and weights");
    }
    const Index n = nodes_.size();
    for (Index j = 0; j < n; ++j) {
      if (nodes_[j] == Scalar(0)) throw InvalidArgument("quadrature node mu = 0 is not allowed");
      if (!(weights_[j] > 0)) throw InvalidArgument("quadrature weights must be positive");
      if ((j < n / 2) != (nodes_[j] < 0)) {
        throw InvalidArgument("quadrature nodes must be negative first, then positive");
      }
    }
    moment_weights_ = Scalar(2 * std::numbers::pi) * weights_;
  }

  Index size() const { return nodes_.size(); }
  Index per_half() const { return nodes_.size() / 2; }
  const Vector& nodes() const { return nodes_; }
  const Vector& weights() const { return weights_; }
  Scalar mu(Index j) const { return nodes_[j]; }

  /// 2*pi*w_j, so that <f> = moment_weights().dot(f).
  const Vector& moment_weights() const { return moment_weights_; }

  /// Index of the direction -mu_j.
  Index mirror(Index j) const { return size() - 1 - j; }

  bool incoming_left(Index j) const { return nodes_[j] > 0; }

  /// 2*pi * sum_j w_j mu_j^p.
  Scalar angular_moment(int p) const {
    Scalar s = 0;
    for (Index j = 0; j < size(); ++j) s += moment_weights_[j] * std::pow(nodes_[j], p);
    return s;
  }

 private:
  Vector nodes_;
  Vector weights_;
  Vector moment_weights_;
};

/// Gauss-Legendre rule with 2 * n_per_half nodes on [-1, 1].
template <typename Scalar = double>
AngularQuadrature<Scalar> gauss_quadrature(Index n_per_half) {
  using std::abs;
  using std::cos;
  if (n_per_half < 1) throw InvalidArgument("n_per_half must be at least 1");
  const Index n = 2 * n_per_half;
  BasicScalarField<Scalar> x(n), w(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (Index i = 0; i < n_per_half; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess.
    Scalar z = cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 1;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = z;
      for (Index k = 2; k <= n; ++k) {
        Scalar p2 = (Scalar(2 * k - 1) * z * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (z * p1 - p0) / (z * z - 1);
      Scalar dz = p1 / dp;
      z -= dz;
      if (abs(dz) < Scalar(4) * std::numeric_limits<Scalar>::epsilon()) break;
    }
    {
      Scalar p0 = 1, p1 = z;
      for (Index k = 2; k <= n; ++k) {
        Scalar p2 = (Scalar(2 * k - 1) * z * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (z * p1 - p0) / (z * z - 1);
    }
    const Scalar wi = 2 / ((1 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  return AngularQuadrature<Scalar>(std::move(x), std::move(w));
}

/// Nodewise 2*pi * sum_j w_j psi(x, mu_j).
template <typename Scalar>
BasicScalarField<Scalar> moment(const BasicKineticField<Scalar>& psi,
                                const AngularQuadrature<Scalar>& quad) {
  if (psi.cols() != quad.size()) {
    throw InvalidArgument("kinetic field has " + std::to_string(psi.cols()) +
                          " directions, quadrature has " + std::to_string(quad.size()));
  }
  return psi * quad.moment_weights();
}

using Quadrature = AngularQuadrature<double>;

}  // namespace raddiff
