#include "raddiff/interior.hpp"

#include <cmath>

#include "raddiff/elliptic.hpp"

namespace raddiff {

std::pair<ScalarField, ScalarField> quartic_products(std::span<const ScalarField> t, int k) {
  if (k < 0 || static_cast<int>(t.size()) <= k) {
    throw InvalidArgument("quartic products need fields T_0..T_k");
  }
  std::vector<Eigen::ArrayXd> a;
  a.reserve(t.size());
  for (const auto& f : t) {
    if (f.size() != t[0].size()) throw InvalidArgument("quartic products need equally sized fields");
    a.push_back(f.array());
  }
  const std::span<const Eigen::ArrayXd> s(a);
  return {quartic_full(s, k).matrix(), quartic_lower(s, k).matrix()};
}

InteriorExpansion::InteriorExpansion(const Quadrature& quad, double length)
    : quad_(quad), length_(length) {
  if (!(length > 0)) throw InvalidArgument("interior domain length must be positive");
  for (int p = 0; p <= 2 * kMaxExpansionOrder + 4; ++p) moments_.push_back(quad.angular_moment(p));
}

InteriorExpansion::XJet InteriorExpansion::correction(std::span<const XJet> t,
                                                      std::span<const XJet> c, int k) const {
  XJet g;
  if (k == 0) return g;
  g = -angular_moment(2) * quartic_lower(t.first(static_cast<std::size_t>(k)), k);
  for (int m = 1; m <= k - 1; m += 2) {
    g -= angular_moment(m + 3) * c[static_cast<std::size_t>(k - 1 - m)].derivative(m + 1);
  }
  return g;
}

std::vector<InteriorExpansion::XJet> InteriorExpansion::temperatures_at(double x) const {
  const int n = order();
  std::vector<XJet> t;
  if (n < 0) return t;
  t.reserve(static_cast<std::size_t>(n + 1));
  const XJet X = XJet::variable(x);
  const double m2 = angular_moment(2);

  // Order 0: the forward map u = T0 + m2 T0^4 is affine in x; invert by Newton on jets.
  const XJet u = offsets_[0].first + offsets_[0].second * X;
  XJet t0(invert_limit_forward(u.value(), m2));
  for (int it = 0; it < 6; ++it) {
    const XJet t2 = t0 * t0;
    const XJet f = t0 + m2 * (t2 * t2) - u;
    const XJet df = 1.0 + (4 * m2) * (t2 * t0);
    t0 -= f / df;
  }
  t.push_back(t0);
  if (n == 0) return t;

  const XJet t03 = t0 * t0 * t0;
  const XJet inv_d = reciprocal(1.0 + (4 * m2) * t03);
  std::vector<XJet> c{t03 * t0};
  for (int k = 1; k <= n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const XJet g = correction(std::span<const XJet>(t).first(ku), c, k);
    t.push_back((g + offsets_[ku].first + offsets_[ku].second * X) * inv_d);
    c.push_back(quartic_full(std::span<const XJet>(t), k));
  }
  return t;
}

void InteriorExpansion::append_order(double left, double right) {
  if (!std::isfinite(left) || !std::isfinite(right)) {
    throw InvalidArgument("interior boundary values must be finite");
  }
  const int k = order() + 1;
  if (k > kMaxExpansionOrder) {
    throw UnsupportedOrder("expansion order " + std::to_string(k) + " exceeds the supported maximum " +
                           std::to_string(kMaxExpansionOrder));
  }
  const double m2 = angular_moment(2);
  if (k == 0) {
    if (!(left >= 0) || !(right >= 0)) {
      throw InvalidArgument("leading-order temperatures must be nonnegative");
    }
    const double u0 = limit_forward(left, m2);
    const double u1 = limit_forward(right, m2);
    offsets_.emplace_back(u0, (u1 - u0) / length_);
  } else {
    // Boundary values of G_k only involve orders below k.
    offsets_.emplace_back(0.0, 0.0);
    auto g_at = [&](double x, double& d) {
      Point p = at(x);
      d = 1 + 4 * m2 * std::pow(p.temperature[0].value(), 3);
      p.temperature.pop_back();
      p.quartic.pop_back();
      return correction(p.temperature, p.quartic, k).value();
    };
    double d0 = 0, d1 = 0;
    const double g0 = g_at(0.0, d0);
    const double g1 = g_at(length_, d1);
    const double a = left * d0 - g0;
    const double b = (right * d1 - g1 - a) / length_;
    offsets_.back() = {a, b};
  }
  left_.push_back(left);
  right_.push_back(right);
}

InteriorExpansion::Point InteriorExpansion::at(double x) const {
  Point p;
  p.x = x;
  p.temperature = temperatures_at(x);
  for (int k = 0; k <= order(); ++k) {
    p.quartic.push_back(quartic_full(std::span<const XJet>(p.temperature), k));
  }
  return p;
}

double InteriorExpansion::temperature(int k, double x) const {
  return temperature_derivative(k, 0, x);
}

double InteriorExpansion::temperature_derivative(int k, int l, double x) const {
  if (k < 0 || k > order()) throw InvalidArgument("interior order not available");
  if (l < 0 || l > jet_order) throw InvalidArgument("derivative order not available");
  const auto t = temperatures_at(x);
  const auto ku = static_cast<std::size_t>(k);
  // Dirichlet data are attained exactly at the end nodes.
  if (l == 0 && x == 0.0) return left_[ku];
  if (l == 0 && x == length_) return right_[ku];
  return t[ku].derivative_value(l);
}

ScalarField InteriorExpansion::intensity(const Point& p, int k) const {
  if (k < 0 || k > order()) throw InvalidArgument("interior order not available");
  const Index nd = quad_.size();
  ScalarField out = ScalarField::Zero(nd);
  for (int m = 0; m <= k; ++m) {
    const double d = p.quartic[static_cast<std::size_t>(k - m)].derivative_value(m);
    for (Index j = 0; j < nd; ++j) out[j] += std::pow(-quad_.mu(j), m) * d;
  }
  return out;
}

ScalarField InteriorExpansion::intensity_slope(const Point& p, int k) const {
  if (k < 0 || k > order()) throw InvalidArgument("interior order not available");
  const Index nd = quad_.size();
  ScalarField out = ScalarField::Zero(nd);
  for (int m = 0; m <= k; ++m) {
    const double d = p.quartic[static_cast<std::size_t>(k - m)].derivative_value(m + 1);
    for (Index j = 0; j < nd; ++j) out[j] += std::pow(-quad_.mu(j), m) * d;
  }
  return out;
}

ScalarField InteriorExpansion::temperature_field(int k, const Mesh& mesh) const {
  ScalarField out(mesh.size());
  for (Index i = 0; i < mesh.size(); ++i) out[i] = temperature(k, mesh[i]);
  return out;
}

KineticField InteriorExpansion::intensity_field(int k, const Mesh& mesh) const {
  KineticField out(mesh.size(), quad_.size());
  for (Index i = 0; i < mesh.size(); ++i) out.row(i) = intensity(at(mesh[i]), k).transpose();
  return out;
}

InteriorExpansion build_interior(int N, const std::vector<double>& far_values,
                                 const std::vector<double>& right_values, const Quadrature& quad) {
  if (N > kMaxExpansionOrder) {
    throw UnsupportedOrder("expansion order " + std::to_string(N) + " exceeds the supported maximum " +
                           std::to_string(kMaxExpansionOrder));
  }
  if (N < 0) throw InvalidArgument("expansion order must be nonnegative");
  if (static_cast<int>(far_values.size()) <= N || static_cast<int>(right_values.size()) <= N) {
    throw InvalidArgument("boundary values missing for some interior orders");
  }
  InteriorExpansion e(quad);
  for (int k = 0; k <= N; ++k) {
    e.append_order(far_values[static_cast<std::size_t>(k)], right_values[static_cast<std::size_t>(k)]);
  }
  return e;
}

double TaylorPoly::operator()(double eta) const {
  double s = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * eta + *it;
  return s;
}

double TaylorPoly::derivative(double eta) const {
  double s = 0;
  for (int l = order(); l >= 1; --l) s = s * eta + l * c_[static_cast<std::size_t>(l)];
  return s;
}

TaylorPoly build_taylor(const InteriorExpansion& interior, int k) {
  if (k < 0 || k > interior.order()) throw InvalidArgument("Taylor polynomial order not available");
  const auto t = interior.at(0.0).temperature;
  std::vector<double> c(static_cast<std::size_t>(k + 1));
  for (int l = 0; l <= k; ++l) c[static_cast<std::size_t>(l)] = t[static_cast<std::size_t>(k - l)][l];
  c[0] = interior.temperature(k, 0.0);
  return TaylorPoly(std::move(c));
}

}  // namespace raddiff
