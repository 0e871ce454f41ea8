#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "raddiff/composite.hpp"
#include "raddiff/errors.hpp"
#include "raddiff/milne.hpp"
#include "raddiff/quadrature.hpp"

using namespace raddiff;

namespace {

const Quadrature& quad8() {
  static const Quadrature q = gauss_quadrature<double>(8);
  return q;
}

ScalarField inflow(double v) { return ScalarField::Constant(quad8().size(), v); }

const MilneSolution& benchmark() {
  static const MilneSolution s = solve_nonlinear_milne(1.0, inflow(1.5), quad8(), HalfSpaceMeshOptions{});
  return s;
}

// Dense assembly of the discrete linear layer problem: cell-exact transport
// recurrences for every direction plus the three-point second difference with a
// ghost-node Neumann row at L. Unknowns: g_1..g_{n-1}, then phi(i, j) row-major.
Eigen::VectorXd dense_linear_layer(const Mesh& mesh, const Quadrature& q, double w, const ScalarField& s1,
                                   const KineticField& s2, const ScalarField& inflow_left) {
  const Index n = mesh.size(), nd = q.size();
  const Index ng = n - 1, N = ng + n * nd;
  auto G = [&](Index i) { return i - 1; };
  auto P = [&](Index i, Index j) { return ng + i * nd + j; };
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  // source S_ij = w g_i + s2_ij: adds coefficient `coef` of S_ij to row r
  auto add_source = [&](Index r, Index i, Index j, double coef) {
    if (i > 0) A(r, G(i)) -= coef * w;
    b[r] += coef * s2(i, j);
  };
  for (Index j = 0; j < nd; ++j) {
    const double amu = std::abs(q.mu(j));
    if (q.mu(j) > 0) {
      A(P(0, j), P(0, j)) = 1;
      b[P(0, j)] = inflow_left[j];
      for (Index i = 0; i + 1 < n; ++i) {
        const double tau = mesh.width(i) / amu, e = std::exp(-tau), gf = -std::expm1(-tau) / tau;
        const Index r = P(i + 1, j);
        A(r, P(i + 1, j)) = 1;
        A(r, P(i, j)) = -e;
        add_source(r, i, j, gf - e);
        add_source(r, i + 1, j, 1 - gf);
      }
    } else {
      const Index r = P(n - 1, j);
      A(r, P(n - 1, j)) = 1;
      add_source(r, n - 1, j, 1.0);
      for (Index i = n - 2; i >= 0; --i) {
        const double tau = mesh.width(i) / amu, e = std::exp(-tau), gf = -std::expm1(-tau) / tau;
        const Index rr = P(i, j);
        A(rr, P(i, j)) = 1;
        A(rr, P(i + 1, j)) = -e;
        add_source(rr, i + 1, j, gf - e);
        add_source(rr, i, j, 1 - gf);
      }
    }
  }
  const ScalarField W = q.moment_weights();
  const double m0 = W.sum();
  for (Index i = 1; i < n; ++i) {
    const Index r = G(i);
    // g'' + <phi> - m0 w g = s1
    if (i + 1 < n) {
      const double hl = mesh.width(i - 1), hr = mesh.width(i);
      if (i - 1 > 0) A(r, G(i - 1)) += 2 / (hl * (hl + hr));
      A(r, G(i)) += -2 / (hl * hr);
      A(r, G(i + 1)) += 2 / (hr * (hl + hr));
    } else {
      const double h = mesh.width(n - 2);
      A(r, G(n - 2)) += 2 / (h * h);
      A(r, G(n - 1)) += -2 / (h * h);
    }
    A(r, G(i)) -= m0 * w;
    for (Index j = 0; j < nd; ++j) A(r, P(i, j)) += W[j];
    b[r] = s1[i];
  }
  return A.partialPivLu().solve(b);
}

}  // namespace

TEST_CASE("well-prepared inflow gives no layer") {
  for (double tb : {0.5, 1.0, 2.0}) {
    MilneOptions opts;
    const MilneSolution s =
        solve_nonlinear_milne(tb, inflow(std::pow(tb, 4)), quad8(), HalfSpaceMeshOptions{}, opts);
    CHECK((s.temperature.array() - tb).abs().maxCoeff() < 10 * opts.tol * std::max(1.0, tb));
    CHECK(s.temperature_far == doctest::Approx(tb).epsilon(1e-12));
    CHECK_FALSE(s.decay_rate.has_value());
  }
}

TEST_CASE("benchmark layer: far value bracket and resolution cross-check") {
  const MilneSolution& s = benchmark();
  CHECK(s.temperature_far > 1.0);
  CHECK(s.temperature_far < std::sqrt(1.5));
  CHECK(s.relation_residual < 1e-6);
  CHECK(std::abs(s.intensity_far.maxCoeff() - std::pow(s.temperature_far, 4)) < 1e-6);

  HalfSpaceMeshOptions fine;
  fine.h_min /= 2;
  fine.h_fine /= 2;
  fine.h_max /= 2;
  const MilneSolution f = solve_nonlinear_milne(1.0, inflow(1.5), quad8(), fine);
  CHECK(std::abs(f.temperature_far - s.temperature_far) < 1e-6);
}

TEST_CASE("benchmark layer decays exponentially") {
  const MilneSolution& s = benchmark();
  REQUIRE(s.decay_rate.has_value());
  CHECK(*s.decay_rate > 0);
  // the deviation obeys |T - T_far| <= C exp(-lambda0 eta) with C read off the
  // first part of the domain, for a rate lambda0 just below 1
  const double lambda0 = 0.99;
  double c_near = 0, c_far = 0;
  for (Index i = 0; i < s.mesh.size(); ++i) {
    const double eta = s.mesh[i];
    const double dev = std::abs(s.temperature[i] - s.temperature_far);
    if (dev < 1e-11) continue;
    const double scaled = dev * std::exp(lambda0 * eta);
    (eta <= 5 ? c_near : c_far) = std::max(eta <= 5 ? c_near : c_far, scaled);
  }
  CHECK(c_near > 0);
  CHECK(c_far <= c_near);
}

TEST_CASE("truncation length barely matters once it is large") {
  HalfSpaceMeshOptions a, b;
  a.L_eta = 40;
  b.L_eta = 80;
  const MilneSolution sa = solve_nonlinear_milne(1.0, inflow(1.5), quad8(), a);
  const MilneSolution sb = solve_nonlinear_milne(1.0, inflow(1.5), quad8(), b);
  CHECK(std::abs(sa.temperature_far - sb.temperature_far) < 1e-8);
}

TEST_CASE("larger inflow does not lower the far temperature") {
  double prev = 0;
  for (double v : {1.0, 1.2, 1.5, 2.0}) {
    const MilneSolution s = solve_nonlinear_milne(1.0, inflow(v), quad8(), HalfSpaceMeshOptions{});
    CHECK(s.temperature_far >= prev);
    prev = s.temperature_far;
  }
}

TEST_CASE("anisotropic inflow") {
  ScalarField in = inflow(1.0);
  for (Index j = quad8().per_half(); j < quad8().size(); ++j) in[j] = 1 + quad8().mu(j);
  const MilneSolution s = solve_nonlinear_milne(1.0, in, quad8(), HalfSpaceMeshOptions{});
  CHECK(s.temperature_far > 1.0);
  CHECK(s.relation_residual < 1e-6);
}

TEST_CASE("fit_decay_rate on synthetic profiles") {
  const Mesh m = build_half_space_mesh(HalfSpaceMeshOptions{});
  ScalarField p(m.size());
  for (Index i = 0; i < m.size(); ++i) p[i] = 3 + std::exp(-0.7 * m[i]);
  const auto rate = fit_decay_rate(m.nodes(), p, 3.0, {2.0, 12.0});
  REQUIRE(rate.has_value());
  CHECK(std::abs(*rate - 0.7) < 1e-3);
  CHECK_FALSE(fit_decay_rate(m.nodes(), ScalarField::Constant(m.size(), 3.0), 3.0, {2.0, 12.0}).has_value());
  CHECK_THROWS_AS(fit_decay_rate(m.nodes(), p, 3.0, {5.0, 5.0}), InvalidArgument);
}

TEST_CASE("linear layer: homogeneous data give zero") {
  const Mesh m = build_half_space_mesh(HalfSpaceMeshOptions{});
  const Index n = m.size();
  const LayerSources src{ScalarField::Zero(n), KineticField::Zero(n, quad8().size()), inflow(0.0)};
  const MilneSolution s = solve_linear_milne(1, ScalarField::Constant(n, 4.0), src, m, quad8());
  CHECK(s.temperature.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.intensity.cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(s.decay_rate.has_value());
}

TEST_CASE("linear layer matches a dense direct solve of the discrete system") {
  const Quadrature q = gauss_quadrature<double>(2);
  const Mesh m(ScalarField::LinSpaced(201, 0.0, 20.0));
  const Index n = m.size();
  const double c = 1.1, w = 4 * c * c * c;
  KineticField s2(n, q.size());
  for (Index i = 0; i < n; ++i) s2.row(i).setConstant(std::exp(-m[i]));
  const ScalarField s1 = moment(s2, q);
  const ScalarField zero_in = ScalarField::Zero(q.size());
  MilneOptions opts;
  opts.tol = 1e-14;
  opts.tail_tolerance = 1e-2;  // short domain; only the discrete systems are compared
  const MilneSolution s = solve_linear_milne(1, ScalarField::Constant(n, w), LayerSources{s1, s2, zero_in}, m, q, opts);
  const Eigen::VectorXd x = dense_linear_layer(m, q, w, s1, s2, zero_in);
  double err_g = std::abs(s.temperature[0]);
  for (Index i = 1; i < n; ++i) err_g = std::max(err_g, std::abs(s.temperature[i] - x[i - 1]));
  double err_phi = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q.size(); ++j) err_phi = std::max(err_phi, std::abs(s.intensity(i, j) - x[n - 1 + i * q.size() + j]));
  }
  const double scale = x.cwiseAbs().maxCoeff();
  CHECK(scale > 1e-3);
  CHECK(err_g < 1e-9 * scale);
  CHECK(err_phi < 1e-9 * scale);
  CHECK(s.relation_residual < 1e-6);
}

TEST_CASE("linear layer is linear in its data") {
  const Mesh m = build_half_space_mesh(HalfSpaceMeshOptions{});
  const Index n = m.size();
  const ScalarField w = 4 * benchmark().temperature.array().cube().matrix();
  KineticField s2a(n, quad8().size()), s2b(n, quad8().size());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < quad8().size(); ++j) {
      s2a(i, j) = std::exp(-2 * m[i]) * (1 + quad8().mu(j));
      s2b(i, j) = m[i] * std::exp(-m[i]);
    }
  }
  ScalarField ina = inflow(0.0), inb = inflow(0.0);
  for (Index j = quad8().per_half(); j < quad8().size(); ++j) {
    ina[j] = quad8().mu(j);
    inb[j] = -0.3;
  }
  const LayerSources a{moment(s2a, quad8()), s2a, ina};
  const LayerSources b{-0.5 * moment(s2b, quad8()), s2b, inb};
  const LayerSources ab{a.s1 + b.s1, s2a + s2b, ina + inb};
  const MilneSolution ga = solve_linear_milne(1, w, a, m, quad8());
  const MilneSolution gb = solve_linear_milne(1, w, b, m, quad8());
  const MilneSolution gab = solve_linear_milne(1, w, ab, m, quad8());
  CHECK((gab.temperature - ga.temperature - gb.temperature).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(gab.temperature_far - ga.temperature_far - gb.temperature_far) < 1e-8);
}

TEST_CASE("far-field relations of the first two layers") {
  BoundaryData d;
  d.psi_left = inflow(1.5);
  const AsymptoticExpansion e = build_expansion(d, 1, quad8());
  const MilneSolution& L0 = e.layers[0];
  const MilneSolution& L1 = e.layers[1];
  for (Index j = 0; j < quad8().size(); ++j) {
    CHECK(std::abs(L0.intensity_far[j] - std::pow(L0.temperature_far, 4)) < 1e-6);
    CHECK(std::abs(L1.intensity_far[j] - 4 * std::pow(L0.temperature_far, 3) * L1.temperature_far) < 1e-6);
  }
}

TEST_CASE("milne input checks and evaluation beyond the truncation") {
  CHECK_THROWS_AS(solve_nonlinear_milne(-1.0, inflow(1.0), quad8(), HalfSpaceMeshOptions{}), InvalidArgument);
  ScalarField bad = inflow(1.0);
  bad[quad8().size() - 1] = -1;
  CHECK_THROWS_AS(solve_nonlinear_milne(1.0, bad, quad8(), HalfSpaceMeshOptions{}), InvalidArgument);

  const Mesh m = build_half_space_mesh(HalfSpaceMeshOptions{});
  const Index n = m.size();
  const LayerSources persistent{ScalarField::Ones(n), KineticField::Zero(n, quad8().size()), inflow(0.0)};
  CHECK_THROWS_AS(solve_linear_milne(1, ScalarField::Constant(n, 4.0), persistent, m, quad8()), InvalidArgument);

  const MilneSolution& s = benchmark();
  CHECK(s.temperature_at(1e6) == s.temperature_far);
  CHECK(s.temperature_at(0.0) == doctest::Approx(1.0).epsilon(1e-14));

  HalfSpaceMeshOptions short_domain;
  short_domain.L_eta = 3;
  CHECK_THROWS_AS(solve_nonlinear_milne(1.0, inflow(1.5), quad8(), short_domain), SolverFailure);
}
