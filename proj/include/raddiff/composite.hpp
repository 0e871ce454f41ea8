#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "raddiff/fields.hpp"
#include "raddiff/interior.hpp"
#include "raddiff/mesh.hpp"
#include "raddiff/milne.hpp"
#include "raddiff/quadrature.hpp"
#include "raddiff/transport.hpp"

namespace raddiff {

/// Smooth cutoffs built from the quintic smoothstep: chi = 1 on [0, delta/4] and
/// 0 from 3 delta/8 on; chi0 = 1 on [0, delta/2] and 0 from 3 delta/4 on.
class CutoffSpec {
 public:
  /// Largest delta for which chi vanishes at the far wall x = 1.
  static constexpr double max_delta = 8.0 / 3.0;

  explicit CutoffSpec(double delta);

  double delta() const { return delta_; }
  double chi(double x) const;
  double chi_derivative(double x) const;
  double chi_second_derivative(double x) const;
  double chi0(double x) const;

  /// Upper bounds of |chi'| and |chi''|.
  double max_first_derivative() const;
  double max_second_derivative() const;

 private:
  double delta_;
};

/// Lower bound on delta: -(4 / lambda) (N + 1) eps log(eps).
double delta_lower_bound(int N, double eps, double lambda);

/// 1.5 times the lower bound, clamped to CutoffSpec::max_delta. Without a decay
/// rate (no layer anywhere) the cutoff is immaterial and max_delta is returned.
double auto_delta(int N, double eps, std::optional<double> lambda);

/// Slab boundary data. The left inflow is arbitrary; the right end is
/// well-prepared, psi_b = T_right^4.
struct BoundaryData {
  double T_left = 1;
  double T_right = 1;
  ScalarField psi_left;  // one entry per direction; mu > 0 entries are used

  InflowData inflow() const;
  bool left_well_prepared(double tol = 0) const;
};

struct ExpansionOptions {
  HalfSpaceMeshOptions mesh;
  MilneOptions milne;
};

/// The eps-independent ingredients of the composite approximation: interior
/// terms T_k and layer solutions of orders 0..N.
struct AsymptoticExpansion {
  BoundaryData data;
  Quadrature quad;
  InteriorExpansion interior;
  std::vector<MilneSolution> layers;

  int order() const { return interior.order(); }
  /// Smallest fitted decay rate over the layers of orders <= N.
  std::optional<double> decay_rate(int N) const;
};

/// Sources of the order-k layer problem (k >= 1) on the order-0 layer mesh,
/// given an expansion that holds orders 0..k-1.
LayerSources layer_sources(const AsymptoticExpansion& partial, int k);

/// Alternates layer and interior solves: layer k fixes the left value of T_k,
/// whose boundary derivatives feed layer k + 1.
AsymptoticExpansion build_expansion(const BoundaryData& data, int N, const Quadrature& quad,
                                    const ExpansionOptions& opts = {});

/// Composite approximation at one eps, sampled on a physical mesh.
struct CompositeApproximation {
  int order = 0;
  double eps = 0;
  CutoffSpec cutoff{1.0};
  std::shared_ptr<const AsymptoticExpansion> expansion;
  Mesh mesh;
  std::vector<ScalarField> interior_temperature;  // T_k
  std::vector<KineticField> interior_intensity;   // psi_k
  std::vector<ScalarField> layer_temperature;     // chi (T~_k - T~_k far)
  std::vector<KineticField> layer_intensity;      // chi (psi~_k - psi~_k far)
  ScalarField temperature;                        // T^a
  KineticField intensity;                         // psi^a

  const Quadrature& quad() const { return expansion->quad; }
  const BoundaryData& data() const { return expansion->data; }

  /// sum_{k <= m} eps^k (T_k + [layer]) at an arbitrary point.
  double temperature_at(double x, int m, bool with_layer = true) const;
  ScalarField intensity_at(double x, int m, bool with_layer = true) const;

  /// Same truncation sampled on the mesh.
  ScalarField truncated_temperature(int m, bool with_layer = true) const;
  KineticField truncated_intensity(int m, bool with_layer = true) const;
};

CompositeApproximation assemble_composite(int N, double eps,
                                          std::shared_ptr<const AsymptoticExpansion> expansion,
                                          const CutoffSpec& cutoff, const Mesh& mesh);

struct ResidualReport {
  Mesh grid;
  ScalarField r1;    // eps^2 T'' + <psi - T^4>, zero at end nodes
  KineticField r2;   // eps mu psi' + psi - T^4, zero at end nodes
  double r1_sup = 0, r1_l2 = 0;
  double r2_sup = 0, r2_l2 = 0;
};

/// Grid for residual evaluation: the order-0 layer mesh scaled by eps near the
/// wall (so layer profiles are read at their own nodes), uniform with spacing
/// at most h_bulk further out.
Mesh residual_grid(const CompositeApproximation& approx, double h_bulk = 5e-4);

/// Applies both operators of the slab system to (T^a, psi^a) on the residual grid.
ResidualReport evaluate_residuals(const CompositeApproximation& approx, double h_bulk = 5e-4);

}  // namespace raddiff
