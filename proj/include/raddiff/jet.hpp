#pragma once

#include <array>
#include <cstddef>

namespace raddiff {

/// Truncated Taylor expansion f(x0 + h) = sum_{l <= Order} c_l h^l. Arithmetic
/// propagates all derivatives up to Order exactly (up to round-off).
template <typename Scalar, int Order>
class Jet {
 public:
  static constexpr int order = Order;

  Jet() { c_.fill(Scalar(0)); }
  Jet(Scalar value) {  // NOLINT: implicit promotion of constants
    c_.fill(Scalar(0));
    c_[0] = value;
  }

  /// The identity function x at x0: value x0, slope 1.
  static Jet variable(Scalar x0) {
    Jet j(x0);
    if constexpr (Order >= 1) j.c_[1] = 1;
    return j;
  }

  Scalar& operator[](int l) { return c_[static_cast<std::size_t>(l)]; }
  Scalar operator[](int l) const { return c_[static_cast<std::size_t>(l)]; }

  Scalar value() const { return c_[0]; }

  /// l-th derivative at x0.
  Scalar derivative_value(int l) const {
    Scalar f = 1;
    for (int i = 2; i <= l; ++i) f *= Scalar(i);
    return c_[static_cast<std::size_t>(l)] * f;
  }

  /// Jet of f'. The top coefficient is unknown and set to zero.
  Jet derivative() const {
    Jet d;
    for (int l = 0; l < Order; ++l) d.c_[l] = Scalar(l + 1) * c_[l + 1];
    return d;
  }

  Jet derivative(int times) const {
    Jet d = *this;
    for (int t = 0; t < times; ++t) d = d.derivative();
    return d;
  }

  Jet& operator+=(const Jet& o) {
    for (int l = 0; l <= Order; ++l) c_[l] += o.c_[l];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int l = 0; l <= Order; ++l) c_[l] -= o.c_[l];
    return *this;
  }
  Jet& operator*=(Scalar s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= Scalar(-1); }
  friend Jet operator*(Jet a, Scalar s) { return a *= s; }
  friend Jet operator*(Scalar s, Jet a) { return a *= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int i = 0; i <= Order; ++i) {
      if (a.c_[i] == Scalar(0)) continue;
      for (int j = 0; i + j <= Order; ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& f) {
    Jet g;
    g.c_[0] = 1 / f.c_[0];
    for (int n = 1; n <= Order; ++n) {
      Scalar s = 0;
      for (int k = 1; k <= n; ++k) s += f.c_[k] * g.c_[n - k];
      g.c_[n] = -s * g.c_[0];
    }
    return g;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

 private:
  std::array<Scalar, Order + 1> c_;
};

}  // namespace raddiff
