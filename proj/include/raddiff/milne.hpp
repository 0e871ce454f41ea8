#pragma once

#include <array>
#include <optional>
#include <vector>

#include "raddiff/fields.hpp"
#include "raddiff/mesh.hpp"
#include "raddiff/quadrature.hpp"
#include "raddiff/transport.hpp"

namespace raddiff {

/// Half-space mesh on [0, L_eta]: geometric growth from h_min, capped at h_fine
/// on [0, fine_extent] where the kinetic layer of the most grazing directions
/// lives, then growing again up to h_max.
struct HalfSpaceMeshOptions {
  double L_eta = 60;
  double h_min = 1e-4;
  double h_fine = 1e-3;
  double fine_extent = 2;
  double h_max = 0.02;
  double ratio = 1.02;
};

Mesh build_half_space_mesh(const HalfSpaceMeshOptions& opts);

struct MilneOptions {
  double tol = 1e-12;                 // sup-norm fixed-point change, relative to max(1, |u|)
  double relaxation = 0.8;            // initial under-relaxation factor
  double min_relaxation = 1e-5;
  int max_iterations = 100000;
  double tail_start = 0.9;            // far field averaged over [tail_start * L, L]
  std::array<double, 2> fit_window{2.0, 12.0};
  double tail_tolerance = 1e-8;
};

struct MilneSolution {
  int order = 0;
  Mesh mesh;
  ScalarField temperature;      // layer temperature on the half-space mesh
  KineticField intensity;       // layer intensity
  double temperature_far = 0;
  ScalarField intensity_far;    // tail average per direction
  std::optional<double> decay_rate;  // empty when there is no layer to fit
  double relation_residual = 0;      // max_j |intensity_far_j - expected far intensity|
  double tail_amplitude = 0;         // |T(L) - T(L/2)|
  double layer_amplitude = 0;        // max |T - T_far|
  int iterations = 0;
  double relaxation = 0;             // factor in use at convergence
  std::vector<double> changes;       // fixed-point change per iteration

  /// Cubic interpolation of the temperature; the far value beyond L.
  double temperature_at(double eta) const;
  /// Cubic interpolation of the intensity per direction; far values beyond L.
  ScalarField intensity_at(double eta) const;
};

/// Data of a linear half-space problem: isotropic temperature-equation source,
/// direction-dependent transport source, inflow for mu > 0.
struct LayerSources {
  ScalarField s1;
  KineticField s2;
  ScalarField inflow;
};

/// Nonlinear problem T'' + <psi - T^4> = 0, mu psi' + psi = T^4 on [0, L] with
/// T(0) = Tb0, psi(0, mu > 0) = inflow, zero Neumann data for T and equilibrium
/// closure for psi at L. Damped Picard iteration.
MilneSolution solve_nonlinear_milne(double Tb0, const ScalarField& inflow, const Mesh& mesh,
                                    const Quadrature& quad, const MilneOptions& opts = {});

MilneSolution solve_nonlinear_milne(double Tb0, const ScalarField& inflow, const Quadrature& quad,
                                    const HalfSpaceMeshOptions& mesh_opts,
                                    const MilneOptions& opts = {});

/// Linear problem g'' + <phi - w g> = s1, mu phi' + phi - w g = s2 with g(0) = 0,
/// phi(0, mu > 0) = inflow, where w = 4 T0^3 is the weight from the order-0 layer.
MilneSolution solve_linear_milne(int order, const ScalarField& weight, const LayerSources& sources,
                                 const Mesh& mesh, const Quadrature& quad,
                                 const MilneOptions& opts = {});

/// -slope of the least-squares line through log|profile - far| for nodes in the
/// window. Points whose deviation is at or below `floor` are ignored (noise);
/// empty when fewer than two remain.
std::optional<double> fit_decay_rate(const ScalarField& eta, const ScalarField& profile,
                                     double far_value, std::array<double, 2> window,
                                     double floor = 1e-14);

/// Trapezoid average of f over [start * L, L].
double tail_average(const Mesh& mesh, const ScalarField& f, double start);

/// Cubic Lagrange interpolation of nodal values at x (clamped stencil).
double interpolate_cubic(const Mesh& mesh, const ScalarField& values, double x);

}  // namespace raddiff
