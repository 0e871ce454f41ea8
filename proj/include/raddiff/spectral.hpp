#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "raddiff/composite.hpp"
#include "raddiff/fields.hpp"
#include "raddiff/mesh.hpp"

namespace raddiff {

/// Weighted quadratic forms of the layer stability ratio, P1 elements with the
/// value at eta = 0 eliminated. Unknown k is the nodal value at node k + 1.
///   B(f, f) = int e^{2 tau eta} (2 T^{3/2})^2 |f'|^2
///   A(f, f) = 4 int e^{2 tau eta} |(2 T^{3/2})'|^2 f^2
struct SpectralForms {
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> B;
};

SpectralForms assemble_spectral_forms(const Mesh& mesh, const ScalarField& profile, double tau);

struct SpectralOptions {
  std::optional<double> decay_rate;       // fitted from the profile when empty
  std::array<double, 2> fit_window{2.0, 12.0};
  // Nodes past the last one with |T - T_far| above this fraction of max |T| are
  // dropped: there the profile is iteration noise, and the growing weight would
  // turn that noise into spurious ratios. Zero keeps the whole mesh.
  double resolution_floor = 1e-9;
  int krylov_dimension = 80;
  int max_restarts = 30;
  double tol = 1e-13;                     // Ritz residual relative to the eigenvalue
};

struct SpectralReport {
  double tau = 0;
  double max_ratio = 0;                   // largest generalized eigenvalue of A f = M B f
  bool pass = false;                      // max_ratio < 1
  ScalarField eigenvector;                // maximizer on the full mesh, zero at eta = 0
  int iterations = 0;                     // operator applications
  double resolved_extent = 0;             // right end of the mesh actually used
  std::optional<double> decay_rate;
};

SpectralReport check_spectral(const Mesh& mesh, const ScalarField& profile, double tau,
                              const SpectralOptions& opts = {});

struct CoercivityReport {
  double kappa = 0;                      // probe min 2 (T^a)^3
  double smallest_eigenvalue = 0;        // of (Q - kappa S) relative to the L2 form
  double constant = 0;                   // max(0, -smallest_eigenvalue)
  bool pass = false;
  std::vector<double> lowest_eigenvalues;
  double symmetry_defect = 0;
};

/// Forms Q(g) = -int 4 Ta^3 g g'' = int 4 Ta^3 |g'|^2 + int (4 Ta^3)' g g',
/// S(g) = int |g'|^2 and N(g) = int g^2 on the composite's mesh, g = 0 at both walls.
CoercivityReport check_coercivity(const CompositeApproximation& approx, double eps, int n_eigen);

}  // namespace raddiff
