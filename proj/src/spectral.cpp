#include "raddiff/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "raddiff/errors.hpp"
#include "raddiff/milne.hpp"

namespace raddiff {

namespace {

// Per-element weights: stiffness conductance w_B / h and the A-density w_A.
struct ElementWeights {
  ScalarField conductance;
  ScalarField density;
};

ElementWeights element_weights(const Mesh& mesh, const ScalarField& profile, double tau) {
  const Index n = mesh.size();
  if (profile.size() != n) throw InvalidArgument("profile size does not match mesh");
  if (!(profile.minCoeff() > 0)) throw InvalidArgument("spectral check needs a positive temperature profile");
  ElementWeights w{ScalarField(n - 1), ScalarField(n - 1)};
  for (Index e = 0; e + 1 < n; ++e) {
    const double h = mesh.width(e);
    const double weight = std::exp(2 * tau * 0.5 * (mesh[e] + mesh[e + 1]));
    const double tm = 0.5 * (profile[e] + profile[e + 1]);
    const double d = 2 * (std::pow(profile[e + 1], 1.5) - std::pow(profile[e], 1.5)) / h;
    w.conductance[e] = weight * 4 * tm * tm * tm / h;
    w.density[e] = 4 * weight * d * d;
  }
  return w;
}

}  // namespace

SpectralForms assemble_spectral_forms(const Mesh& mesh, const ScalarField& profile, double tau) {
  const ElementWeights w = element_weights(mesh, profile, tau);
  const Index n = mesh.size();
  const Index m = n - 1;
  std::vector<Eigen::Triplet<double>> ta, tb;
  ta.reserve(static_cast<std::size_t>(4 * m));
  tb.reserve(static_cast<std::size_t>(4 * m));
  for (Index e = 0; e + 1 < n; ++e) {
    const double h = mesh.width(e);
    const double c = w.conductance[e], wa = w.density[e];
    const Index dofs[2] = {e - 1, e};  // node e + k maps to unknown e + k - 1
    const double kb[2][2] = {{c, -c}, {-c, c}};
    const double ka[2][2] = {{wa * h / 3, wa * h / 6}, {wa * h / 6, wa * h / 3}};
    for (int r = 0; r < 2; ++r) {
      for (int col = 0; col < 2; ++col) {
        if (dofs[r] < 0 || dofs[col] < 0) continue;
        tb.emplace_back(dofs[r], dofs[col], kb[r][col]);
        if (ka[r][col] != 0.0) ta.emplace_back(dofs[r], dofs[col], ka[r][col]);
      }
    }
  }
  SpectralForms f;
  f.A.resize(m, m);
  f.B.resize(m, m);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.B.setFromTriplets(tb.begin(), tb.end());
  return f;
}

SpectralReport check_spectral(const Mesh& mesh, const ScalarField& profile, double tau,
                              const SpectralOptions& opts) {
  if (!(tau > 0)) throw InvalidArgument("tau must be positive");
  SpectralReport rep;
  rep.tau = tau;
  rep.decay_rate = opts.decay_rate;
  if (!rep.decay_rate) {
    const double far = tail_average(mesh, profile, 0.9);
    // deviations at round-off relative to the profile are not a layer
    const double noise = std::max(1e-14, 1e-10 * profile.cwiseAbs().maxCoeff());
    rep.decay_rate = fit_decay_rate(mesh.nodes(), profile, far, opts.fit_window, noise);
  }
  if (rep.decay_rate && !(tau < *rep.decay_rate)) {
    std::ostringstream os;
    os << "tau = " << tau << " must be below the fitted decay rate " << *rep.decay_rate;
    throw InvalidArgument(os.str());
  }
  if (opts.krylov_dimension < 2 || opts.max_restarts < 1) {
    throw InvalidArgument("Krylov dimension must be at least 2 and restarts positive");
  }
  if (!(opts.resolution_floor >= 0)) throw InvalidArgument("resolution floor must be nonnegative");
  if (profile.size() != mesh.size()) throw InvalidArgument("profile size does not match mesh");
  Index used = mesh.size();
  if (opts.resolution_floor > 0) {
    const double far = tail_average(mesh, profile, 0.9);
    const double floor = opts.resolution_floor * profile.cwiseAbs().maxCoeff();
    used = 2;
    for (Index i = mesh.size() - 1; i >= 1; --i) {
      if (std::abs(profile[i] - far) > floor) {
        used = std::max<Index>(i + 2, 2);
        break;
      }
    }
    used = std::min(used, mesh.size());
  }
  const Mesh sub = used == mesh.size() ? mesh : Mesh(mesh.nodes().head(used).eval());
  const ScalarField prof = profile.head(used);
  rep.resolved_extent = sub.length();
  rep.eigenvector = ScalarField::Zero(mesh.size());

  const SpectralForms forms = assemble_spectral_forms(sub, prof, tau);
  const ElementWeights w = element_weights(sub, prof, tau);
  const Index m = forms.B.rows();
  if (!w.conductance.allFinite() || !(w.conductance.minCoeff() > 0)) {
    throw SolverFailure("stiffness form is not positive definite");
  }
  if (!w.density.allFinite()) throw SolverFailure("ratio form is not finite");
  if (w.density.maxCoeff() == 0.0) {
    rep.max_ratio = 0;
    rep.pass = true;
    return rep;
  }

  // B = G^T C G with G the (invertible) difference operator and C the element
  // conductances, so B = R^T R for R = C^{1/2} G and every solve is a running
  // sum. That stays accurate however fast the weight grows along the domain;
  // a factorization of B does not. The ratio maximum is the top eigenvalue of
  // the symmetric operator R^{-T} A R^{-1}.
  const ScalarField root = w.conductance.cwiseSqrt();
  auto r_inverse = [&](const ScalarField& x) {
    ScalarField f(m);
    double acc = 0;
    for (Index k = 0; k < m; ++k) f[k] = acc += x[k] / root[k];
    return f;
  };
  auto r_inverse_transpose = [&](const ScalarField& y) {
    ScalarField z(m);
    double acc = 0;
    for (Index k = m - 1; k >= 0; --k) z[k] = (acc += y[k]) / root[k];
    return z;
  };
  auto apply = [&](const ScalarField& x) -> ScalarField {
    ++rep.iterations;
    return r_inverse_transpose(forms.A * r_inverse(x));
  };

  // Lanczos with full reorthogonalization, restarted from the Ritz vector.
  const Index dim = std::min<Index>(m, opts.krylov_dimension);
  ScalarField start = ScalarField::Ones(m);
  double theta = 0;
  ScalarField ritz;
  bool converged = false;
  for (int restart = 0; restart < opts.max_restarts && !converged; ++restart) {
    Eigen::MatrixXd V(m, dim);
    std::vector<double> alpha, beta;
    V.col(0) = start.normalized();
    Index built = 0;
    double last_beta = 0;
    for (Index j = 0; j < dim; ++j) {
      ScalarField u = apply(V.col(j));
      const double a = V.col(j).dot(u);
      alpha.push_back(a);
      for (int pass = 0; pass < 2; ++pass) {
        u -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * u);
      }
      built = j + 1;
      last_beta = u.norm();
      if (j + 1 == dim || last_beta <= 1e-14 * std::abs(a)) break;
      beta.push_back(last_beta);
      V.col(j + 1) = u / last_beta;
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
    for (Index j = 0; j < built; ++j) {
      T(j, j) = alpha[static_cast<std::size_t>(j)];
      if (j + 1 < built) T(j, j + 1) = T(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw SolverFailure("projected eigenproblem failed");
    theta = es.eigenvalues()[built - 1];
    const ScalarField s = es.eigenvectors().col(built - 1);
    ritz = V.leftCols(built) * s;
    const double residual = std::abs(last_beta * s[built - 1]);
    converged = built == m || residual <= opts.tol * std::max(std::abs(theta), 1e-300);
    start = ritz;
  }
  if (!converged) throw SolverFailure("Lanczos iteration did not converge", {theta});

  ScalarField v = r_inverse(ritz);
  rep.max_ratio = theta;
  rep.pass = theta < 1;
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v /= v[imax];
  // free end: the maximizer continues flat over the dropped tail
  rep.eigenvector.segment(1, m) = v;
  rep.eigenvector.tail(mesh.size() - used).setConstant(v[m - 1]);
  return rep;
}

CoercivityReport check_coercivity(const CompositeApproximation& approx, double eps, int n_eigen) {
  if (std::abs(eps - approx.eps) > 1e-15) throw InvalidArgument("eps differs from the composite's eps");
  if (n_eigen < 1) throw InvalidArgument("n_eigen must be positive");
  const Mesh& mesh = approx.mesh;
  const ScalarField& ta = approx.temperature;
  const Index n = mesh.size();
  const Index m = n - 2;
  if (m < 1) throw InvalidArgument("mesh too coarse for the coercivity check");
  const ScalarField w = 4 * ta.array().cube().matrix();

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m), S = Q, N = Q;
  for (Index e = 0; e + 1 < n; ++e) {
    const double h = mesh.width(e);
    const double we = 0.5 * (w[e] + w[e + 1]);
    const double dw = (w[e + 1] - w[e]) / h;
    const Index dofs[2] = {e - 1, e};
    const double grad[2][2] = {{1 / h, -1 / h}, {-1 / h, 1 / h}};
    const double mass[2][2] = {{h / 3, h / 6}, {h / 6, h / 3}};
    // int w' g g' over the element equals w' (g_{e+1}^2 - g_e^2) / 2.
    const double cross[2] = {-dw / 2, dw / 2};
    for (int r = 0; r < 2; ++r) {
      if (dofs[r] < 0 || dofs[r] >= m) continue;
      Q(dofs[r], dofs[r]) += cross[r];
      for (int c = 0; c < 2; ++c) {
        if (dofs[c] < 0 || dofs[c] >= m) continue;
        Q(dofs[r], dofs[c]) += we * grad[r][c];
        S(dofs[r], dofs[c]) += grad[r][c];
        N(dofs[r], dofs[c]) += mass[r][c];
      }
    }
  }
  CoercivityReport rep;
  const double qmax = Q.cwiseAbs().maxCoeff();
  rep.symmetry_defect = qmax > 0 ? (Q - Q.transpose()).cwiseAbs().maxCoeff() / qmax : 0.0;
  if (rep.symmetry_defect > 1e-10) throw InternalError("coercivity form assembled non-symmetric");
  rep.kappa = 0.5 * w.minCoeff();
  const Eigen::MatrixXd M = Q - rep.kappa * S;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, N, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw SolverFailure("coercivity eigenproblem failed");
  const ScalarField ev = solver.eigenvalues();
  rep.smallest_eigenvalue = ev[0];
  rep.constant = std::max(0.0, -ev[0]);
  rep.pass = std::isfinite(ev[0]) && rep.kappa > 0;
  for (Index k = 0; k < std::min<Index>(n_eigen, ev.size()); ++k) rep.lowest_eigenvalues.push_back(ev[k]);
  return rep;
}

}  // namespace raddiff
