#include "raddiff/fullsolver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "raddiff/errors.hpp"

namespace raddiff {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Round-off level of the discrete temperature operator.
double residual_floor(double eps, const SecondDifference<double>& d2, const ScalarField& T, double m0) {
  const double tmax = std::max(1.0, T.cwiseAbs().maxCoeff());
  return 1e3 * std::numeric_limits<double>::epsilon() *
         (eps * eps * d2.diag.cwiseAbs().maxCoeff() + m0) * std::pow(tmax, 4);
}

// A-posteriori error estimate of a linearly converging iteration from its
// recent sup-norm changes.
class ConvergenceMonitor {
 public:
  double push(double change) {
    if (!changes_.empty() && changes_.back() > 0) ratios_.push_back(change / changes_.back());
    changes_.push_back(change);
    if (change == 0) return 0;
    if (ratios_.empty()) return std::numeric_limits<double>::infinity();
    const std::size_t k = std::min<std::size_t>(3, ratios_.size());
    const double rho = *std::max_element(ratios_.end() - static_cast<std::ptrdiff_t>(k), ratios_.end());
    if (rho >= 1) return std::numeric_limits<double>::infinity();
    return change * rho / (1 - rho);
  }
  const std::vector<double>& changes() const { return changes_; }
  const std::vector<double>& ratios() const { return ratios_; }

 private:
  std::vector<double> changes_;
  std::vector<double> ratios_;
};

struct CoupledResult {
  ScalarField g;
  KineticField phi;
  long iterations = 0;
};

// Source iteration for eps^2 g'' - <1> w g + <phi> = f,  phi = sweep(w g + s).
CoupledResult coupled_linear_solve(const Sweeper<double>& sweeper, const SecondDifference<double>& d2,
                                   double eps, const ScalarField& w, const ScalarField& f,
                                   const KineticField& s, const DirichletBC& bc, const InflowData& inflow,
                                   ScalarField g, double tol, long max_iterations) {
  const Quadrature& quad = sweeper.quadrature();
  const double m0 = quad.moment_weights().sum();
  const ScalarField c = m0 * w;
  ConvergenceMonitor monitor;
  CoupledResult out;
  for (long it = 1; it <= max_iterations; ++it) {
    out.phi = sweeper((s.colwise() + w.cwiseProduct(g)).eval(), inflow);
    ScalarField next = detail::dirichlet_solve(d2, eps * eps, c, (f - moment(out.phi, quad)).eval(), bc.left,
                                               bc.right, false);
    const double change = (next - g).cwiseAbs().maxCoeff();
    g = std::move(next);
    if (!std::isfinite(change)) throw SolverFailure("source iteration produced non-finite values");
    const double estimate = monitor.push(change);
    if (estimate < tol) {
      out.phi = sweeper((s.colwise() + w.cwiseProduct(g)).eval(), inflow);
      out.g = std::move(g);
      out.iterations = it;
      return out;
    }
  }
  const auto& ch = monitor.changes();
  std::vector<double> tail(ch.end() - std::min<std::ptrdiff_t>(20, static_cast<std::ptrdiff_t>(ch.size())),
                           ch.end());
  throw SolverFailure("source iteration stagnated", tail);
}

void finalize_report(SolveReport& r) {
  double factor = 0;
  for (std::size_t n = 1; n < r.ratios.size(); ++n) factor = std::max(factor, r.ratios[n]);
  r.contraction_factor = factor;
}

}  // namespace

void slab_residuals(double eps, const ScalarField& T, const KineticField& psi, const InflowData& inflow,
                    const Sweeper<double>& sweeper, double& residual_temperature,
                    double& residual_intensity) {
  const Mesh& mesh = sweeper.mesh();
  const Quadrature& quad = sweeper.quadrature();
  const SecondDifference<double> d2(mesh);
  const double m0 = quad.moment_weights().sum();
  const ScalarField t4 = T.array().square().square().matrix();
  const ScalarField lhs = eps * eps * d2.apply(T) + moment(psi, quad) - m0 * t4;
  residual_temperature = lhs.segment(1, mesh.size() - 2).cwiseAbs().maxCoeff();
  residual_intensity = (psi - sweeper(t4, inflow)).cwiseAbs().maxCoeff();
}

FullSolution solve_picard(double eps, const DirichletBC& bc, const InflowData& inflow, const Mesh& mesh,
                          const Quadrature& quad, double tol, int max_iterations) {
  const auto start = Clock::now();
  if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
  if (!(bc.left >= 0) || !(bc.right >= 0)) throw InvalidArgument("boundary temperatures must be nonnegative");
  if (!inflow.right) throw InvalidArgument("slab problem needs right inflow data");
  for (Index j = 0; j < quad.size(); ++j) {
    const double v = quad.incoming_left(j) ? inflow.left[j] : (*inflow.right)[j];
    if (!(v >= 0)) throw InvalidArgument("inflow intensities must be nonnegative");
  }
  const Sweeper<double> sweeper(eps, mesh, quad);
  const SecondDifference<double> d2(mesh);
  const double m0 = quad.moment_weights().sum();

  FullSolution sol;
  SolveReport& rep = sol.report;
  rep.method = "picard";
  ScalarField T(mesh.size());
  for (Index i = 0; i < mesh.size(); ++i) {
    const double s = mesh[i] / mesh.length();
    T[i] = (1 - s) * bc.left + s * bc.right;
  }
  ConvergenceMonitor monitor;
  for (int it = 1; it <= max_iterations; ++it) {
    const KineticField psi = sweeper(T.array().square().square().matrix().eval(), inflow);
    NewtonOptions<double> nopts;
    nopts.initial_guess = &T;
    ScalarField theta = solve_nonlinear_temperature(eps, moment(psi, quad), bc, mesh, 0.1 * tol, nopts);
    const double change = (theta - T).cwiseAbs().maxCoeff();
    T = std::move(theta);
    const double estimate = monitor.push(change);
    if (estimate < tol) {
      sol.intensity = sweeper(T.array().square().square().matrix().eval(), inflow);
      slab_residuals(eps, T, sol.intensity, inflow, sweeper, rep.residual_temperature,
                     rep.residual_intensity);
      if (rep.residual_temperature < std::max(tol, residual_floor(eps, d2, T, m0))) {
        rep.converged = true;
        rep.iterations = it;
        break;
      }
    }
  }
  rep.changes = monitor.changes();
  rep.ratios = monitor.ratios();
  finalize_report(rep);
  rep.wall_seconds = seconds_since(start);
  if (!rep.converged) {
    std::ostringstream os;
    os << "Picard iteration did not converge in " << max_iterations << " iterations (last ratio "
       << (rep.ratios.empty() ? 0.0 : rep.ratios.back()) << ")";
    throw SolverFailure(os.str(), rep.ratios.empty() ? std::vector<double>{} : std::vector<double>{rep.ratios.back()});
  }
  sol.temperature = std::move(T);
  return sol;
}

PerturbationFields linearized_solve(double eps, const ScalarField& Ta, const ScalarField& r1,
                                    const KineticField& r2, const KineticField& r, const Mesh& mesh,
                                    const Quadrature& quad, double tol) {
  const Index n = mesh.size();
  if (Ta.size() != n || r1.size() != n || r2.rows() != n || r.rows() != n || r2.cols() != quad.size() ||
      r.cols() != quad.size()) {
    throw InvalidArgument("linearized data do not match mesh and quadrature");
  }
  if (!(Ta.minCoeff() > 0)) throw InvalidArgument("reference temperature must be positive");
  if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
  const Sweeper<double> sweeper(eps, mesh, quad);
  const SecondDifference<double> d2(mesh);
  const ScalarField w = 4 * Ta.array().cube().matrix();
  const ScalarField f = r1 + moment(r, quad);
  const InflowData zero = InflowData::isotropic(quad.size(), 0.0, 0.0);
  CoupledResult res = coupled_linear_solve(sweeper, d2, eps, w, f, r2 + r, DirichletBC{0, 0}, zero,
                                           ScalarField::Zero(n), tol, 2000000);
  return {std::move(res.g), std::move(res.phi), res.iterations};
}

FullSolution solve_contraction(double eps, const CompositeApproximation& approx, double tol,
                               int max_iterations) {
  const auto start = Clock::now();
  if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
  if (std::abs(eps - approx.eps) > 1e-15) throw InvalidArgument("eps differs from the composite's eps");
  const Mesh& mesh = approx.mesh;
  const Quadrature& quad = approx.quad();
  const ScalarField& Ta = approx.temperature;
  if (!(Ta.minCoeff() > 0)) throw InvalidArgument("composite temperature must be positive");
  const BoundaryData& data = approx.data();
  const DirichletBC bc{data.T_left, data.T_right};
  const InflowData inflow = data.inflow();
  const Sweeper<double> sweeper(eps, mesh, quad);
  const SecondDifference<double> d2(mesh);
  const double m0 = quad.moment_weights().sum();
  const ScalarField w = 4 * Ta.array().cube().matrix();

  FullSolution sol;
  SolveReport& rep = sol.report;
  rep.method = "contraction";
  ScalarField T = Ta;
  ConvergenceMonitor monitor;
  int growth = 0;
  for (int it = 1; it <= max_iterations; ++it) {
    // Lagged remainder T^4 - 4 Ta^3 T of the quartic at the previous iterate.
    const ScalarField q = T.array().square().square().matrix() - w.cwiseProduct(T);
    const KineticField s = q.replicate(1, quad.size());
    CoupledResult step = coupled_linear_solve(sweeper, d2, eps, w, m0 * q, s, bc, inflow, T, 0.1 * tol, 2000000);
    rep.inner_iterations += step.iterations;
    const double change = (step.g - T).cwiseAbs().maxCoeff();
    T = std::move(step.g);
    sol.intensity = std::move(step.phi);
    const double estimate = monitor.push(change);
    const auto& ratios = monitor.ratios();
    growth = (it > 1 && !ratios.empty() && ratios.back() >= 1) ? growth + 1 : 0;
    if (growth >= 3) {
      rep.changes = monitor.changes();
      rep.ratios = ratios;
      throw SolverFailure("contraction iteration diverges (ratio >= 1 for three steps); eps may be too large",
                          ratios);
    }
    const bool small = it > 1 ? estimate < tol : change < 1e-3 * tol;
    if (small) {
      slab_residuals(eps, T, sol.intensity, inflow, sweeper, rep.residual_temperature, rep.residual_intensity);
      if (rep.residual_temperature < std::max(10 * tol, residual_floor(eps, d2, T, m0))) {
        rep.converged = true;
        rep.iterations = it;
        break;
      }
    }
  }
  rep.changes = monitor.changes();
  rep.ratios = monitor.ratios();
  finalize_report(rep);
  rep.wall_seconds = seconds_since(start);
  if (!rep.converged) {
    throw SolverFailure("contraction iteration did not converge within the iteration limit", rep.changes);
  }
  sol.temperature = std::move(T);
  return sol;
}

ErrorNorms error_norms(const ScalarField& T, const KineticField& psi, const CompositeApproximation& approx,
                       int m, bool with_layer) {
  const Mesh& mesh = approx.mesh;
  if (T.size() != mesh.size() || psi.rows() != mesh.size() || psi.cols() != approx.quad().size()) {
    throw InvalidArgument("solution and composite live on different meshes");
  }
  const ScalarField dt = T - approx.truncated_temperature(m, with_layer);
  const KineticField dp = psi - approx.truncated_intensity(m, with_layer);
  const ScalarField w = mesh.trapezoid_weights();
  ErrorNorms e;
  e.sup_T = dt.cwiseAbs().maxCoeff();
  e.sup_psi = dp.cwiseAbs().maxCoeff();
  e.l2_T = std::sqrt(w.dot(dt.cwiseAbs2()));
  e.l2_psi = std::sqrt(w.dot(dp.cwiseAbs2() * approx.quad().moment_weights()));
  return e;
}

}  // namespace raddiff
