#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "raddiff/elliptic.hpp"
#include "raddiff/errors.hpp"
#include "raddiff/mesh.hpp"

using namespace raddiff;
constexpr double pi = std::numbers::pi;

namespace {

Mesh graded(double eps = 0.05) { return build_mesh<double>(60, 30, eps, Grading::layer_graded, 1.0); }

// Plain bisection root of t + (4 pi / 3) t^4 = u, the test-side oracle.
double bisect_limit(double u) {
  double lo = 0, hi = std::max(1.0, u);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + 4 * pi / 3 * std::pow(mid, 4) > u ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("reaction-diffusion: discrete harmonic, constant and quadratic solutions") {
  for (const Mesh& m : {build_mesh<double>(11, 0, 1.0, Grading::uniform, 1.0), graded()}) {
    const Index n = m.size();
    const ScalarField zero = ScalarField::Zero(n), one = ScalarField::Ones(n);
    ScalarField u = solve_reaction_diffusion(1.0, zero, zero, DirichletBC{0, 1}, m);
    CHECK((u - m.nodes()).cwiseAbs().maxCoeff() < 1e-13);

    u = solve_reaction_diffusion(1.0, one, (-one).eval(), DirichletBC{1, 1}, m);
    CHECK((u.array() - 1).abs().maxCoeff() < 1e-13);

    u = solve_reaction_diffusion(1.0, zero, (2 * one).eval(), DirichletBC{0, 0}, m);
    const ScalarField exact = (m.nodes().array().square() - m.nodes().array()).matrix();
    CHECK((u - exact).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reaction-diffusion: comparison principle and linearity") {
  const Mesh m = graded();
  const Index n = m.size();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1), pos(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField c(n), f1(n), f2(n);
    for (Index i = 0; i < n; ++i) {
      c[i] = pos(rng);
      f1[i] = u(rng);
      f2[i] = f1[i] + std::abs(u(rng));
    }
    const DirichletBC bc{u(rng), u(rng)};
    const ScalarField u1 = solve_reaction_diffusion(0.01, c, f1, bc, m);
    const ScalarField u2 = solve_reaction_diffusion(0.01, c, f2, bc, m);
    CHECK((u1 - u2).minCoeff() >= -1e-13);  // larger f, smaller u under a u'' - c u = f

    const ScalarField us = solve_reaction_diffusion(0.01, c, (f1 + f2).eval(), DirichletBC{2 * bc.left, 2 * bc.right}, m);
    CHECK((us - u1 - u2).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reaction-diffusion rejects bad coefficients") {
  const Mesh m = graded();
  const ScalarField z = ScalarField::Zero(m.size());
  CHECK_THROWS_AS(solve_reaction_diffusion(0.0, z, z, DirichletBC{0, 0}, m), InvalidArgument);
  const ScalarField neg = ScalarField::Constant(m.size(), -1);
  CHECK_THROWS_AS(solve_reaction_diffusion(1.0, neg, z, DirichletBC{0, 0}, m), InvalidArgument);
}

TEST_CASE("limit equation: constant, zero and root-find oracle data") {
  const Mesh m = build_mesh<double>(21, 0, 1.0, Grading::uniform, 1.0);
  ScalarField t = solve_limit_equation(DirichletBC{1, 1}, m);
  CHECK((t.array() - 1).abs().maxCoeff() < 1e-12);
  t = solve_limit_equation(DirichletBC{0, 0}, m);
  CHECK(t.cwiseAbs().maxCoeff() == 0.0);

  t = solve_limit_equation(DirichletBC{0, 1}, m);
  const double u_mid = (1 + 4 * pi / 3) / 2;
  CHECK(t[10] == doctest::Approx(bisect_limit(u_mid)).epsilon(1e-12));
  CHECK(t.minCoeff() >= 0);
  CHECK_THROWS_AS(solve_limit_equation(DirichletBC{-1, 1}, m), InvalidArgument);
}

TEST_CASE("limit equation: forward map is linear in x for random data") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 3);
  const Mesh m = graded(0.02);
  for (int trial = 0; trial < 30; ++trial) {
    const DirichletBC bc{u(rng), u(rng)};
    const ScalarField t = solve_limit_equation(bc, m);
    const double u0 = bc.left + 4 * pi / 3 * std::pow(bc.left, 4);
    const double u1 = bc.right + 4 * pi / 3 * std::pow(bc.right, 4);
    double err = 0;
    for (Index i = 0; i < m.size(); ++i) {
      const double fwd = t[i] + 4 * pi / 3 * std::pow(t[i], 4);
      err = std::max(err, std::abs(fwd - ((1 - m[i]) * u0 + m[i] * u1)) / std::max(1.0, std::max(u0, u1)));
    }
    CHECK(err < 1e-10);
  }
}

TEST_CASE("nonlinear temperature: equilibrium") {
  const Mesh m = graded();
  const double c = 1.3;
  const ScalarField mom = ScalarField::Constant(m.size(), 4 * pi * std::pow(c, 4));
  const ScalarField t = solve_nonlinear_temperature(0.05, mom, DirichletBC{c, c}, m, 1e-12);
  CHECK((t.array() - c).abs().maxCoeff() < 1e-12);
}

TEST_CASE("nonlinear temperature: bounded, symmetric, grid-convergent") {
  const double eps = 1.0;
  auto solve = [&](Index n) {
    const Mesh m = build_mesh<double>(n, 0, 1.0, Grading::uniform, 1.0);
    return std::make_pair(m, solve_nonlinear_temperature(eps, ScalarField::Constant(n, 4 * pi).eval(),
                                                         DirichletBC{0, 0}, m, 1e-13));
  };
  const auto [m, t] = solve(101);
  CHECK(t.minCoeff() >= 0);
  CHECK(t.maxCoeff() <= 1);
  for (Index i = 0; i < m.size(); ++i) CHECK(std::abs(t[i] - t[m.size() - 1 - i]) < 1e-12);
  // reference on a 4x finer grid; shared nodes differ by O(h^2)
  const auto [mf, tf] = solve(401);
  double diff = 0;
  for (Index i = 0; i < m.size(); ++i) diff = std::max(diff, std::abs(t[i] - tf[4 * i]));
  const auto [mc, tc] = solve(51);
  double diff_c = 0;
  for (Index i = 0; i < mc.size(); ++i) diff_c = std::max(diff_c, std::abs(tc[i] - tf[8 * i]));
  CHECK(diff < 1e-4);
  CHECK(diff_c / diff > 3.5);
}

TEST_CASE("nonlinear temperature: maximum principle on random data") {
  std::mt19937 rng(99);
  const double g1 = 0.5, g2 = 2.0;
  std::uniform_real_distribution<double> ut(g1, g2), um(4 * pi * std::pow(g1, 4), 4 * pi * std::pow(g2, 4));
  for (double eps : {1.0, 0.1, 0.01}) {
    const Mesh m = graded(eps);
    for (int trial = 0; trial < 10; ++trial) {
      ScalarField mom(m.size());
      for (Index i = 0; i < m.size(); ++i) mom[i] = um(rng);
      const ScalarField t = solve_nonlinear_temperature(eps, mom, DirichletBC{ut(rng), ut(rng)}, m, 1e-11);
      CHECK(t.minCoeff() >= g1 - 1e-12);
      CHECK(t.maxCoeff() <= g2 + 1e-12);
    }
  }
}

TEST_CASE("nonlinear temperature: monotone residuals and quadratic convergence") {
  const Mesh m = graded(0.05);
  ScalarField mom(m.size());
  for (Index i = 0; i < m.size(); ++i) mom[i] = 4 * pi * (1 + 3 * m[i] * m[i]);
  std::vector<double> hist;
  NewtonOptions<double> opts;
  opts.residual_history = &hist;
  const ScalarField guess = ScalarField::Constant(m.size(), 0.5);
  opts.initial_guess = &guess;
  solve_nonlinear_temperature(0.05, mom, DirichletBC{1, 2}, m, 1e-12, opts);
  REQUIRE(hist.size() >= 4);
  for (std::size_t k = 2; k < hist.size(); ++k) CHECK(hist[k] < hist[k - 1]);
  // r_{k+1} / r_k^2 stays bounded once in the local regime
  bool quadratic = false;
  for (std::size_t k = 1; k + 1 < hist.size(); ++k) {
    if (hist[k] < 1e-2 && hist[k + 1] > 1e-13) quadratic = quadratic || hist[k + 1] / (hist[k] * hist[k]) < 1e3;
  }
  CHECK(quadratic);
}

TEST_CASE("nonlinear temperature rejects bad data") {
  const Mesh m = graded();
  const ScalarField neg = ScalarField::Constant(m.size(), -1);
  CHECK_THROWS_AS(solve_nonlinear_temperature(0.1, neg, DirichletBC{1, 1}, m, 1e-10), InvalidArgument);
  const ScalarField ok = ScalarField::Ones(m.size());
  CHECK_THROWS_AS(solve_nonlinear_temperature(0.1, ok, DirichletBC{-1, 1}, m, 1e-10), InvalidArgument);
  CHECK_THROWS_AS(solve_nonlinear_temperature(0.0, ok, DirichletBC{1, 1}, m, 1e-10), InvalidArgument);
}
