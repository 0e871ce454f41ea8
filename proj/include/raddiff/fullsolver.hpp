#pragma once

#include <string>
#include <vector>

#include "raddiff/composite.hpp"
#include "raddiff/elliptic.hpp"
#include "raddiff/fields.hpp"
#include "raddiff/mesh.hpp"
#include "raddiff/quadrature.hpp"
#include "raddiff/transport.hpp"

namespace raddiff {

struct SolveReport {
  std::string method;
  bool converged = false;
  int iterations = 0;                // outer iterations
  long inner_iterations = 0;         // source iterations inside linear solves
  double residual_temperature = 0;   // sup |eps^2 T'' + <psi> - <1> T^4| at interior nodes
  double residual_intensity = 0;     // sup |psi - sweep(T^4)|
  std::vector<double> changes;       // sup-norm change per outer iteration
  std::vector<double> ratios;        // changes[n] / changes[n-1]
  double contraction_factor = 0;     // largest ratio after the first iteration
  double wall_seconds = 0;
};

struct FullSolution {
  ScalarField temperature;
  KineticField intensity;
  SolveReport report;
};

/// Deviations (g, phi) from a reference state; homogeneous boundary data.
struct PerturbationFields {
  ScalarField g;
  KineticField phi;
  long iterations = 0;
};

/// Discrete residuals of the slab system for (T, psi) on the sweeper's mesh.
void slab_residuals(double eps, const ScalarField& T, const KineticField& psi, const InflowData& inflow,
                    const Sweeper<double>& sweeper, double& residual_temperature,
                    double& residual_intensity);

/// Alternates a transport sweep with source T^4 and a Newton temperature solve.
FullSolution solve_picard(double eps, const DirichletBC& bc, const InflowData& inflow, const Mesh& mesh,
                          const Quadrature& quad, double tol, int max_iterations = 500000);

/// Source iteration for eps^2 g'' + <phi - 4 Ta^3 g> = r1 + <r>,
/// eps mu phi' + phi - 4 Ta^3 g = r2 + r, with zero boundary data.
PerturbationFields linearized_solve(double eps, const ScalarField& Ta, const ScalarField& r1,
                                    const KineticField& r2, const KineticField& r, const Mesh& mesh,
                                    const Quadrature& quad, double tol);

/// Fixed-point iteration around the composite approximation: each step solves
/// the problem linearized at T^a with the higher-order remainder of the quartic
/// lagged. Starts from (T^a, psi^a) and uses the original boundary data.
FullSolution solve_contraction(double eps, const CompositeApproximation& approx, double tol,
                               int max_iterations = 100);

struct ErrorNorms {
  double sup_T = 0;
  double sup_psi = 0;
  double l2_T = 0;
  double l2_psi = 0;
};

/// Norms of T - sum_{k <= m} eps^k (T_k + layer_k) and of the intensity analogue.
ErrorNorms error_norms(const ScalarField& T, const KineticField& psi, const CompositeApproximation& approx,
                       int m, bool with_layer = true);

}  // namespace raddiff
