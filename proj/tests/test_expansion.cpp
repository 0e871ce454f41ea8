#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "raddiff/composite.hpp"
#include "raddiff/errors.hpp"
#include "raddiff/interior.hpp"
#include "raddiff/quadrature.hpp"

using namespace raddiff;

namespace {

const Quadrature& quad8() {
  static const Quadrature q = gauss_quadrature<double>(8);
  return q;
}

BoundaryData data(double tl, double tr, double psi) {
  BoundaryData d;
  d.T_left = tl;
  d.T_right = tr;
  d.psi_left = ScalarField::Constant(quad8().size(), psi);
  return d;
}

std::shared_ptr<const AsymptoticExpansion> expansion(const BoundaryData& d, int N) {
  return std::make_shared<const AsymptoticExpansion>(build_expansion(d, N, quad8()));
}

// Ill-prepared benchmark and a well-prepared one with a real interior gradient.
const std::shared_ptr<const AsymptoticExpansion>& ill(int N) {
  static std::array<std::shared_ptr<const AsymptoticExpansion>, 3> cache;
  auto& e = cache[static_cast<std::size_t>(N)];
  if (!e) e = expansion(data(1.0, 1.0, 1.5), N);
  return e;
}

const std::shared_ptr<const AsymptoticExpansion>& well() {
  static const auto e = expansion(data(1.0, 1.5, 1.0), 0);
  return e;
}

CompositeApproximation composite(const std::shared_ptr<const AsymptoticExpansion>& e, int N, double eps) {
  const Mesh m = build_mesh<double>(400, 80, eps, Grading::layer_graded, 1.0);
  return assemble_composite(N, eps, e, CutoffSpec(auto_delta(N, eps, e->decay_rate(N))), m);
}

// Count of ordered 4-tuples of nonnegative integers with sum k (each <= k).
int compositions(int k) {
  int c = 0;
  for (int i = 0; i <= k; ++i)
    for (int j = 0; i + j <= k; ++j)
      for (int l = 0; i + j + l <= k; ++l) ++c;
  return c;
}

}  // namespace

TEST_CASE("quartic products: leading orders and composition counts") {
  const Index n = 5;
  std::vector<ScalarField> t;
  for (int k = 0; k <= 4; ++k) t.push_back(ScalarField::LinSpaced(n, 0.5 + k, 1.5 + k));
  auto [c0, e0] = quartic_products(std::span<const ScalarField>(t.data(), 1), 0);
  CHECK((c0 - t[0].array().pow(4).matrix()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(e0.cwiseAbs().maxCoeff() == 0.0);
  auto [c1, e1] = quartic_products(std::span<const ScalarField>(t.data(), 2), 1);
  CHECK((c1 - (4 * t[0].array().cube() * t[1].array()).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(e1.cwiseAbs().maxCoeff() == 0.0);
  auto [c2, e2] = quartic_products(std::span<const ScalarField>(t.data(), 3), 2);
  const ScalarField e2_exact = (6 * t[0].array().square() * t[1].array().square()).matrix();
  CHECK((e2 - e2_exact).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c2 - e2 - (4 * t[0].array().cube() * t[2].array()).matrix()).cwiseAbs().maxCoeff() < 1e-12);

  std::vector<double> ones(6, 1.0);
  for (int k = 0; k <= 5; ++k) {
    CHECK(quartic_full(std::span<const double>(ones), k) == compositions(k));
    CHECK(quartic_lower(std::span<const double>(ones), k) == (k == 0 ? 0 : compositions(k) - 4));
  }
  CHECK(compositions(4) == 35);
}

TEST_CASE("quartic product is a coefficient of the fourth power") {
  // (sum eps^i t_i)^4 for random t, coefficient read off by exact polynomial expansion
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> t(4);
  for (double& v : t) v = u(rng);
  std::vector<double> sq(7, 0.0), p4(13, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) sq[i + j] += t[i] * t[j];
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) p4[i + j] += sq[i] * sq[j];
  for (int k = 0; k <= 3; ++k) {
    CHECK(quartic_full(std::span<const double>(t), k) == doctest::Approx(p4[k]).epsilon(1e-13));
  }
}

TEST_CASE("interior terms satisfy the order-by-order equations") {
  // T_k'' + sum_{m even >= 2} M_m d^m C(T, k + 2 - m) = 0 with M_m the angular moments,
  // T_0 at the far value of the leading layer, T_k(1) = 0 for k >= 1.
  const AsymptoticExpansion& e = *ill(2);
  const InteriorExpansion& in = e.interior;
  for (double x : {0.0, 0.1, 0.37, 0.8, 1.0}) {
    const InteriorExpansion::Point p = in.at(x);
    for (int k = 0; k <= in.order(); ++k) {
      double r = p.temperature[k].derivative_value(2);
      double scale = std::abs(r);
      for (int m = 2; m <= k + 2; m += 2) {
        const double term = in.angular_moment(m) * p.quartic[k + 2 - m].derivative_value(m);
        r += term;
        scale = std::max(scale, std::abs(term));
      }
      CAPTURE(x);
      CAPTURE(k);
      CHECK(std::abs(r) < 1e-10 * std::max(1.0, scale));
    }
  }
  CHECK(in.temperature(0, 0.0) == doctest::Approx(e.layers[0].temperature_far).epsilon(1e-14));
  CHECK(in.temperature(0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 1; k <= in.order(); ++k) {
    CHECK(std::abs(in.temperature(k, 1.0)) < 1e-14);
    CHECK(in.temperature(k, 0.0) == doctest::Approx(e.layers[static_cast<std::size_t>(k)].temperature_far).epsilon(1e-12));
  }
}

TEST_CASE("interior intensity is the Chapman-Enskog series of C") {
  const InteriorExpansion& in = ill(2)->interior;
  const InteriorExpansion::Point p = in.at(0.3);
  for (int k = 0; k <= 2; ++k) {
    const ScalarField psi = in.intensity(p, k);
    for (Index j = 0; j < quad8().size(); ++j) {
      const double mu = quad8().mu(j);
      double expect = 0;
      for (int m = 0; m <= k; ++m) expect += std::pow(-mu, m) * p.quartic[k - m].derivative_value(m);
      CHECK(psi[j] == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("constant data give constant leading term and vanishing corrections") {
  const InteriorExpansion in = build_interior(3, {1.2, 0.0, 0.0, 0.0}, {1.2, 0.0, 0.0, 0.0}, quad8());
  for (double x : {0.0, 0.25, 0.5, 1.0}) {
    CHECK(in.temperature(0, x) == doctest::Approx(1.2).epsilon(1e-14));
    for (int k = 1; k <= 3; ++k) CHECK(std::abs(in.temperature(k, x)) < 1e-14);
  }
}

TEST_CASE("orders above the maximum are refused") {
  CHECK_THROWS_AS(build_interior(4, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, quad8()), UnsupportedOrder);
  CHECK_THROWS_AS(build_expansion(data(1, 1, 1.5), kMaxExpansionOrder + 1, quad8()), UnsupportedOrder);
  CHECK_THROWS_AS(build_interior(1, {1}, {1, 0}, quad8()), InvalidArgument);
}

TEST_CASE("Taylor polynomials of the interior at the wall") {
  const InteriorExpansion& in = ill(2)->interior;
  for (int k = 0; k <= 2; ++k) {
    const TaylorPoly P = build_taylor(in, k);
    REQUIRE(P.order() == k);
    double fact = 1;
    for (int l = 0; l <= k; ++l) {
      if (l > 0) fact *= l;
      CHECK(P.coefficients()[l] == doctest::Approx(in.temperature_derivative(k - l, l, 0.0) / fact).epsilon(1e-13));
    }
    CHECK(P(0.0) == doctest::Approx(in.temperature(k, 0.0)).epsilon(1e-14));
    if (k >= 1) CHECK(P.derivative(0.0) == doctest::Approx(in.temperature_derivative(k - 1, 1, 0.0)).epsilon(1e-13));
  }
}

TEST_CASE("cutoff functions: plateaus, nesting and derivative bounds") {
  for (double delta : {0.05, 0.4, CutoffSpec::max_delta}) {
    const CutoffSpec c(delta);
    CHECK(c.chi(0) == 1.0);
    CHECK(c.chi(delta / 4) == 1.0);
    CHECK(c.chi(3 * delta / 8) == 0.0);
    CHECK(c.chi0(delta / 2) == 1.0);
    CHECK(c.chi0(3 * delta / 4) == 0.0);
    double d1 = 0, d2 = 0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = delta * i / 2000.0;
      CHECK(c.chi(x) * c.chi0(x) == doctest::Approx(c.chi(x)).epsilon(1e-15));
      CHECK(c.chi(x) >= 0);
      CHECK(c.chi(x) <= 1);
      d1 = std::max(d1, std::abs(c.chi_derivative(x)));
      d2 = std::max(d2, std::abs(c.chi_second_derivative(x)));
      const double h = 1e-6 * delta;
      if (x > h) {
        const double fd = (c.chi(x + h) - c.chi(x - h)) / (2 * h);
        CHECK(std::abs(fd - c.chi_derivative(x)) < 1e-5 * c.max_first_derivative());
      }
    }
    CHECK(d1 <= c.max_first_derivative() * (1 + 1e-12));
    CHECK(d1 >= 0.99 * c.max_first_derivative());
    CHECK(d2 <= c.max_second_derivative() * (1 + 1e-12));
    CHECK(d2 >= 0.99 * c.max_second_derivative());
  }
  CHECK(CutoffSpec(CutoffSpec::max_delta).chi(1.0) == 0.0);
  CHECK_THROWS_AS(CutoffSpec(0.0), InvalidArgument);
  CHECK_THROWS_AS(CutoffSpec(3.0), InvalidArgument);
}

TEST_CASE("automatic cutoff width") {
  const double lam = 1.2, eps = 0.05;
  const double bound = -(4 / lam) * 2 * eps * std::log(eps);
  CHECK(delta_lower_bound(1, eps, lam) == doctest::Approx(bound).epsilon(1e-15));
  CHECK(auto_delta(1, eps, lam) == doctest::Approx(std::min(1.5 * bound, CutoffSpec::max_delta)));
  CHECK(auto_delta(1, eps, std::nullopt) == CutoffSpec::max_delta);
  CHECK_THROWS_AS(auto_delta(2, 0.1, 1.0), InvalidArgument);
}

TEST_CASE("well-prepared data: no leading layer, composite equals interior at N = 0") {
  const auto& e = well();
  CHECK(e->layers[0].layer_amplitude < 1e-10);
  const CompositeApproximation a = composite(e, 0, 0.05);
  CHECK(a.layer_temperature[0].cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.temperature - a.interior_temperature[0]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("composite pieces add up and match the interior away from the wall") {
  const double eps = 0.05;
  const CompositeApproximation a = composite(ill(1), 1, eps);
  CHECK((a.truncated_temperature(0) - a.interior_temperature[0] - a.layer_temperature[0]).cwiseAbs().maxCoeff() < 1e-14);
  const ScalarField sum = a.interior_temperature[0] + a.layer_temperature[0] +
                          eps * (a.interior_temperature[1] + a.layer_temperature[1]);
  CHECK((a.temperature - sum).cwiseAbs().maxCoeff() < 1e-14);
  const double edge = 3 * a.cutoff.delta() / 8;
  for (Index i = 0; i < a.mesh.size(); ++i) {
    if (a.mesh[i] < edge) continue;
    CHECK(a.temperature[i] == a.truncated_temperature(1, false)[i]);
  }
  CHECK(a.temperature_at(0.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.temperature_at(1.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.temperature_at(0.0, 1, false) != doctest::Approx(1.0).epsilon(1e-6));
  const ScalarField in0 = a.intensity_at(0.0, 0);
  for (Index j = quad8().per_half(); j < quad8().size(); ++j) CHECK(in0[j] == doctest::Approx(1.5).epsilon(1e-10));
  CHECK_THROWS_AS(a.truncated_temperature(2), InvalidArgument);
}

TEST_CASE("composite rejects cutoffs below the admissible width") {
  const auto& e = ill(1);
  const double eps = 0.05;
  const double bound = delta_lower_bound(1, eps, *e->decay_rate(1));
  const Mesh m = build_mesh<double>(200, 40, eps, Grading::layer_graded, 1.0);
  CHECK_THROWS_AS(assemble_composite(1, eps, e, CutoffSpec(0.9 * bound), m), InvalidArgument);
  CHECK_NOTHROW(assemble_composite(1, eps, e, CutoffSpec(1.1 * bound), m));
  CHECK_THROWS_AS(assemble_composite(2, eps, e, CutoffSpec(1.0), m), InvalidArgument);
}

TEST_CASE("composite is insensitive to the half-space resolution") {
  ExpansionOptions fine;
  fine.mesh.h_min /= 2;
  fine.mesh.h_fine /= 2;
  fine.mesh.h_max /= 2;
  const auto ef = std::make_shared<const AsymptoticExpansion>(build_expansion(data(1.0, 1.0, 1.5), 1, quad8(), fine));
  const double eps = 0.05;
  const CompositeApproximation a = composite(ill(1), 1, eps);
  const CompositeApproximation b = assemble_composite(1, eps, ef, a.cutoff, a.mesh);
  CHECK((a.temperature - b.temperature).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("residuals vanish for constant data") {
  const auto e = expansion(data(1.3, 1.3, std::pow(1.3, 4)), 2);
  const CompositeApproximation a = composite(e, 2, 0.05);
  const ResidualReport r = evaluate_residuals(a);
  // the second difference amplifies round-off by eps^2 / h^2 at the finest spacing
  const double h = r.grid.min_width();
  CHECK(r.r1_sup < 1e-13 * 0.05 * 0.05 / (h * h));
  CHECK(r.r2_sup < 1e-11);
}

TEST_CASE("residual scaling: well-prepared N = 0") {
  std::vector<double> r1, r2;
  const std::vector<double> eps{0.1, 0.05, 0.025};
  for (double e : eps) {
    const ResidualReport r = evaluate_residuals(composite(well(), 0, e));
    r1.push_back(r.r1_sup);
    r2.push_back(r.r2_sup);
  }
  const double slope = std::log(r1[0] / r1[2]) / std::log(eps[0] / eps[2]);
  CHECK(slope >= 1.8);
  for (std::size_t i = 1; i < eps.size(); ++i) {
    CHECK(r2[i] / eps[i] == doctest::Approx(r2[0] / eps[0]).epsilon(0.05));
  }
}

TEST_CASE("residual scaling: ill-prepared N = 1") {
  const std::vector<double> eps{0.1, 0.05, 0.025};
  std::vector<double> q1, q2;
  for (double e : eps) {
    const ResidualReport r = evaluate_residuals(composite(ill(1), 1, e));
    q1.push_back(r.r1_sup / (e * e));
    q2.push_back(r.r2_sup / (e * e));
  }
  for (std::size_t i = 1; i < eps.size(); ++i) {
    CHECK(q1[i] < 1.5 * q1[0]);
    CHECK(q2[i] < 1.5 * q2[0]);
    CHECK(q2[i] > 0.5 * q2[0]);
  }
}

TEST_CASE("residual scaling: ill-prepared N = 2 temperature equation") {
  std::vector<double> q;
  for (double e : {0.05, 0.025}) q.push_back(evaluate_residuals(composite(ill(2), 2, e)).r1_sup / (e * e * e));
  CHECK(q[1] < 3 * q[0]);
  CHECK(q[1] > q[0] / 3);
}
