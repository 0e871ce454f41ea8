#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "raddiff/errors.hpp"
#include "raddiff/fields.hpp"
#include "raddiff/jet.hpp"
#include "raddiff/mesh.hpp"
#include "raddiff/quadrature.hpp"

namespace raddiff {

inline constexpr int kMaxExpansionOrder = 3;

/// Sum of t_i t_j t_l t_m over ordered index tuples with i + j + l + m = k and
/// every index <= max_index. Works for numbers, jets and Eigen arrays.
template <typename T>
T quartic_sum(std::span<const T> t, int k, int max_index) {
  if (k < 0) return T(t[0] * 0);
  if (static_cast<int>(t.size()) <= std::min(k, max_index)) {
    throw InvalidArgument("quartic sum needs terms up to the requested order");
  }
  T sum = t[0] * 0;
  for (int i = 0; i <= std::min(k, max_index); ++i) {
    for (int j = 0; j <= std::min(k - i, max_index); ++j) {
      const T ij = t[i] * t[j];
      for (int l = 0; l <= std::min(k - i - j, max_index); ++l) {
        const int m = k - i - j - l;
        if (m > max_index) continue;
        sum = sum + ij * t[l] * t[m];
      }
    }
  }
  return sum;
}

/// C(T, k): the order-k coefficient of (sum_i eps^i T_i)^4.
template <typename T>
T quartic_full(std::span<const T> t, int k) {
  return quartic_sum(t, k, k);
}

/// E(T, k-1) = C(T, k) - 4 T_0^3 T_k: the part of C(T, k) built from orders
/// below k only. Zero for k <= 1.
template <typename T>
T quartic_lower(std::span<const T> t, int k) {
  if (k <= 0) return T(t[0] * 0);
  return quartic_sum(t, k, k - 1);
}

/// Nodewise (C(T, k), E(T, k-1)) for fields T_0..T_k.
std::pair<ScalarField, ScalarField> quartic_products(std::span<const ScalarField> t, int k);

/// Interior expansion T = sum_k eps^k T_k of the slab problem. Each T_k is
/// represented exactly as a function of x and evaluated pointwise by Taylor
/// jets, so boundary derivatives of any order come out without differencing.
class InteriorExpansion {
 public:
  static constexpr int jet_order = 16;
  using XJet = Jet<double, jet_order>;

  /// Jets of T_0..T_N and C(T, 0..N) at one abscissa.
  struct Point {
    double x = 0;
    std::vector<XJet> temperature;
    std::vector<XJet> quartic;
  };

  explicit InteriorExpansion(const Quadrature& quad, double length = 1.0);

  /// Adds T_k, k = order() + 1, with T_k(0) = left and T_k(length) = right.
  void append_order(double left, double right);

  int order() const { return static_cast<int>(offsets_.size()) - 1; }
  double length() const { return length_; }
  const Quadrature& quadrature() const { return quad_; }

  /// Discrete angular moment 2*pi sum_j w_j mu_j^p.
  double angular_moment(int p) const { return moments_[static_cast<std::size_t>(p)]; }

  Point at(double x) const;

  double temperature(int k, double x) const;
  /// l-th x-derivative of T_k at x.
  double temperature_derivative(int k, int l, double x) const;

  /// psi_k(x, mu_j) = sum_m (-mu_j)^m d^m C(T, k - m) for all directions.
  ScalarField intensity(const Point& p, int k) const;
  /// x-derivative of psi_k.
  ScalarField intensity_slope(const Point& p, int k) const;

  ScalarField temperature_field(int k, const Mesh& mesh) const;
  KineticField intensity_field(int k, const Mesh& mesh) const;

 private:
  // Jet of the order-k correction G_k (zero for k = 0) given lower-order jets.
  XJet correction(std::span<const XJet> t, std::span<const XJet> c, int k) const;
  std::vector<XJet> temperatures_at(double x) const;

  Quadrature quad_;
  double length_;
  std::vector<double> moments_;
  std::vector<double> left_, right_;
  std::vector<std::pair<double, double>> offsets_;  // a_k + b_k x in the forward variable
};

/// Interior expansion through order N: far_values[k] are the left boundary
/// values (layer far fields), right_values[k] the right Dirichlet data.
InteriorExpansion build_interior(int N, const std::vector<double>& far_values,
                                 const std::vector<double>& right_values, const Quadrature& quad);

/// P_k(eta) = sum_{l <= k} eta^l / l! d^l T_{k-l}(0).
class TaylorPoly {
 public:
  TaylorPoly() = default;
  explicit TaylorPoly(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coefficients() const { return c_; }
  double operator()(double eta) const;
  double derivative(double eta) const;

 private:
  std::vector<double> c_;
};

TaylorPoly build_taylor(const InteriorExpansion& interior, int k);

}  // namespace raddiff
