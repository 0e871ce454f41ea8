#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "raddiff/errors.hpp"
#include "raddiff/fields.hpp"
#include "raddiff/mesh.hpp"

namespace raddiff {

template <typename Scalar>
struct BasicDirichletBC {
  Scalar left = 0;
  Scalar right = 0;
};

using DirichletBC = BasicDirichletBC<double>;

/// Three-point second difference on a nonuniform mesh. Row i (interior nodes
/// only) reads lower[i] * u[i-1] + diag[i] * u[i] + upper[i] * u[i+1].
template <typename Scalar>
struct SecondDifference {
  BasicScalarField<Scalar> lower, diag, upper;

  explicit SecondDifference(const Mesh1D<Scalar>& mesh) {
    const Index n = mesh.size();
    lower = diag = upper = BasicScalarField<Scalar>::Zero(n);
    for (Index i = 1; i + 1 < n; ++i) {
      const Scalar hl = mesh.width(i - 1);
      const Scalar hr = mesh.width(i);
      lower[i] = 2 / (hl * (hl + hr));
      upper[i] = 2 / (hr * (hl + hr));
      diag[i] = -(lower[i] + upper[i]);
    }
  }

  /// Second difference at interior nodes, zero at the two end nodes.
  BasicScalarField<Scalar> apply(const BasicScalarField<Scalar>& u) const {
    const Index n = u.size();
    BasicScalarField<Scalar> out = BasicScalarField<Scalar>::Zero(n);
    for (Index i = 1; i + 1 < n; ++i) {
      out[i] = lower[i] * u[i - 1] + diag[i] * u[i] + upper[i] * u[i + 1];
    }
    return out;
  }
};

namespace detail {

// Thomas algorithm; sub[0] and sup[n-1] are ignored. Overwrites nothing.
template <typename Scalar>
BasicScalarField<Scalar> solve_tridiagonal(const BasicScalarField<Scalar>& sub,
                                           const BasicScalarField<Scalar>& diag,
                                           const BasicScalarField<Scalar>& sup,
                                           const BasicScalarField<Scalar>& rhs) {
  const Index n = diag.size();
  BasicScalarField<Scalar> c(n), d(n), x(n);
  Scalar beta = diag[0];
  if (beta == Scalar(0)) throw SolverFailure("zero pivot in tridiagonal solve");
  c[0] = sup[0] / beta;
  d[0] = rhs[0] / beta;
  for (Index i = 1; i < n; ++i) {
    beta = diag[i] - sub[i] * c[i - 1];
    if (beta == Scalar(0)) throw SolverFailure("zero pivot in tridiagonal solve");
    c[i] = (i + 1 < n) ? sup[i] / beta : Scalar(0);
    d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
  }
  x[n - 1] = d[n - 1];
  for (Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

// Solves (a * D2 - diag(c)) u = f on the interior with u fixed at both ends.
template <typename Scalar>
BasicScalarField<Scalar> dirichlet_solve(const SecondDifference<Scalar>& d2, Scalar a,
                                         const BasicScalarField<Scalar>& c,
                                         const BasicScalarField<Scalar>& f, Scalar left,
                                         Scalar right, bool check_residual) {
  using std::abs;
  const Index n = f.size();
  BasicScalarField<Scalar> u(n);
  u[0] = left;
  u[n - 1] = right;
  if (n == 2) return u;
  const Index m = n - 2;
  BasicScalarField<Scalar> sub(m), dg(m), sup(m), rhs(m);
  for (Index k = 0; k < m; ++k) {
    const Index i = k + 1;
    sub[k] = a * d2.lower[i];
    sup[k] = a * d2.upper[i];
    dg[k] = a * d2.diag[i] - c[i];
    rhs[k] = f[i];
  }
  rhs[0] -= sub[0] * left;
  rhs[m - 1] -= sup[m - 1] * right;
  u.segment(1, m) = solve_tridiagonal(sub, dg, sup, rhs);
  if (check_residual) {
    Scalar res = 0, scale = 0;
    for (Index i = 1; i + 1 < n; ++i) {
      const Scalar lhs = a * (d2.lower[i] * u[i - 1] + d2.diag[i] * u[i] + d2.upper[i] * u[i + 1]) -
                         c[i] * u[i];
      res = std::max(res, abs(lhs - f[i]));
      const Scalar row = a * (abs(d2.lower[i] * u[i - 1]) + abs(d2.diag[i] * u[i]) +
                              abs(d2.upper[i] * u[i + 1])) +
                         abs(c[i] * u[i]);
      scale = std::max(scale, std::max(row, abs(f[i])));
    }
    if (res > Scalar(1e-10) * std::max(scale, Scalar(1e-300))) {
      throw SolverFailure("tridiagonal solve residual too large", {static_cast<double>(res)});
    }
  }
  return u;
}

}  // namespace detail

/// Second-order finite-difference solution of a*u'' - c*u = f with Dirichlet data.
template <typename Scalar>
BasicScalarField<Scalar> solve_reaction_diffusion(Scalar a, const BasicScalarField<Scalar>& c,
                                                  const BasicScalarField<Scalar>& f,
                                                  const BasicDirichletBC<Scalar>& bc,
                                                  const Mesh1D<Scalar>& mesh) {
  if (!(a > 0)) throw InvalidArgument("diffusion coefficient must be positive");
  if (c.size() != mesh.size() || f.size() != mesh.size()) {
    throw InvalidArgument("coefficient sizes do not match mesh");
  }
  if ((c.array() < 0).any()) throw InvalidArgument("reaction coefficient must be nonnegative");
  return detail::dirichlet_solve(SecondDifference<Scalar>(mesh), a, c, f, bc.left, bc.right, true);
}

/// T + m2 * T^4, with m2 the second angular moment (4*pi/3 for exact quadrature).
template <typename Scalar>
Scalar limit_forward(Scalar t, Scalar m2) {
  const Scalar t2 = t * t;
  return t + m2 * t2 * t2;
}

/// Unique T >= 0 with T + m2 * T^4 = u, for u >= 0: Newton safeguarded by bisection on [0, u].
template <typename Scalar>
Scalar invert_limit_forward(Scalar u, Scalar m2) {
  using std::abs;
  using std::pow;
  if (!(u >= 0)) throw InvalidArgument("limit map is only inverted for nonnegative values");
  if (u == Scalar(0)) return 0;
  Scalar lo = 0, hi = std::min(u, pow(u / m2, Scalar(0.25)));
  Scalar t = hi;
  for (int it = 0; it < 200; ++it) {
    const Scalar f = limit_forward(t, m2) - u;
    if (f > 0) hi = t; else lo = t;
    const Scalar df = 1 + 4 * m2 * t * t * t;
    Scalar next = t - f / df;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    const Scalar step = abs(next - t);
    t = next;
    if (step <= Scalar(1e-15) * std::max(Scalar(1), t) || hi - lo <= Scalar(1e-15) * hi) break;
  }
  return t;
}

/// Solves (T + m2 T^4)'' = 0: the forward map is the linear interpolant of its
/// boundary values and T is recovered node by node.
template <typename Scalar>
BasicScalarField<Scalar> solve_limit_equation(const BasicDirichletBC<Scalar>& bc,
                                              const Mesh1D<Scalar>& mesh,
                                              Scalar m2 = Scalar(4 * std::numbers::pi / 3)) {
  if (!(bc.left >= 0) || !(bc.right >= 0)) {
    throw InvalidArgument("limit equation needs nonnegative boundary temperatures");
  }
  const Scalar u0 = limit_forward(bc.left, m2);
  const Scalar u1 = limit_forward(bc.right, m2);
  const Scalar len = mesh.length();
  BasicScalarField<Scalar> t(mesh.size());
  for (Index i = 0; i < mesh.size(); ++i) {
    const Scalar s = mesh[i] / len;
    t[i] = invert_limit_forward((1 - s) * u0 + s * u1, m2);
  }
  t[0] = bc.left;
  t[mesh.size() - 1] = bc.right;
  return t;
}

template <typename Scalar>
struct NewtonOptions {
  int max_iterations = 60;
  const BasicScalarField<Scalar>* initial_guess = nullptr;
  std::vector<Scalar>* residual_history = nullptr;
};

/// Newton iteration for eps^2 theta'' - 4 pi theta^4 = -rhs_moment with Dirichlet data.
template <typename Scalar>
BasicScalarField<Scalar> solve_nonlinear_temperature(Scalar eps,
                                                     const BasicScalarField<Scalar>& rhs_moment,
                                                     const BasicDirichletBC<Scalar>& bc,
                                                     const Mesh1D<Scalar>& mesh, Scalar tol,
                                                     const NewtonOptions<Scalar>& opts = {}) {
  using std::abs;
  using std::pow;
  const Scalar four_pi = Scalar(4 * std::numbers::pi);
  const Index n = mesh.size();
  if (!(eps > 0) || !(tol > 0)) throw InvalidArgument("eps and tol must be positive");
  if (rhs_moment.size() != n) throw InvalidArgument("moment size does not match mesh");
  if ((rhs_moment.array() < 0).any()) throw InvalidArgument("radiation moment must be nonnegative");
  if (!(bc.left >= 0) || !(bc.right >= 0)) throw InvalidArgument("boundary temperatures must be nonnegative");

  const SecondDifference<Scalar> d2(mesh);
  const Scalar a = eps * eps;
  BasicScalarField<Scalar> theta(n);
  if (opts.initial_guess) {
    if (opts.initial_guess->size() != n) throw InvalidArgument("initial guess size mismatch");
    theta = opts.initial_guess->cwiseMax(Scalar(0));
  } else {
    for (Index i = 0; i < n; ++i) theta[i] = pow(rhs_moment[i] / four_pi, Scalar(0.25));
  }
  theta[0] = bc.left;
  theta[n - 1] = bc.right;

  BasicScalarField<Scalar> residual(n), c(n);
  auto evaluate = [&]() {
    Scalar norm = 0;
    residual.setZero();
    for (Index i = 1; i + 1 < n; ++i) {
      const Scalar t2 = theta[i] * theta[i];
      residual[i] = a * (d2.lower[i] * theta[i - 1] + d2.diag[i] * theta[i] +
                         d2.upper[i] * theta[i + 1]) -
                    four_pi * t2 * t2 + rhs_moment[i];
      norm = std::max(norm, abs(residual[i]));
    }
    return norm;
  };

  Scalar norm = evaluate();
  std::vector<Scalar> history{norm};
  for (int it = 0; it < opts.max_iterations && norm >= tol; ++it) {
    c = (4 * four_pi) * theta.array().cube().matrix();
    // J delta = -residual with delta = 0 at the ends.
    const BasicScalarField<Scalar> delta =
        detail::dirichlet_solve(d2, a, c, (-residual).eval(), Scalar(0), Scalar(0), false);
    theta += delta;
    norm = evaluate();
    history.push_back(norm);
    const Scalar step = delta.cwiseAbs().maxCoeff();
    if (norm >= tol && step <= Scalar(1e-14) * std::max(Scalar(1), theta.cwiseAbs().maxCoeff())) {
      // Round-off floor of the discrete operator reached.
      break;
    }
  }
  if (opts.residual_history) *opts.residual_history = history;
  const Scalar floor_tol =
      std::max(tol, Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() *
                        (a * d2.diag.cwiseAbs().maxCoeff() + four_pi) *
                        std::max(Scalar(1), pow(theta.cwiseAbs().maxCoeff(), Scalar(4))));
  if (!(norm < floor_tol) || !theta.allFinite()) {
    throw SolverFailure("Newton temperature solve did not converge",
                        std::vector<double>(history.begin(), history.end()));
  }
  return theta;
}

}  // namespace raddiff
