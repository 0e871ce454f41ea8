#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "raddiff/composite.hpp"
#include "raddiff/fullsolver.hpp"

namespace raddiff::app {

inline constexpr int kSchemaVersion = 1;

/// Shared per-run setup: quadrature, boundary data and the eps-independent expansion.
struct Setup {
  Quadrature quad;
  BoundaryData data;
  std::shared_ptr<const AsymptoticExpansion> expansion;
};
Setup prepare(const ExperimentConfig& cfg);

/// Delta for one eps: the explicit value, or the auto rule.
double cutoff_delta(const ExperimentConfig& cfg, const AsymptoticExpansion& e, double eps);
Mesh slab_mesh(const ExperimentConfig& cfg, double eps);
CompositeApproximation composite_for(const ExperimentConfig& cfg, const Setup& s, double eps);

struct SweepRecord {
  double eps = 0;
  double delta = 0;
  bool ok = false;
  std::string reason;              // why the point failed, empty otherwise
  std::string method;              // solver whose output was measured
  int iterations = 0;
  double contraction_factor = 0;   // NaN when the contraction solver was not used
  ErrorNorms with_layer;
  ErrorNorms no_layer;
  double r1_sup = 0, r2_sup = 0;   // residuals of the composite approximation
  double wall_seconds = 0;
};

/// Least-squares slope of log(error) against log(eps).
struct SlopeFit {
  std::optional<double> slope;   // empty when exact or too few points
  bool exact = false;            // every error below 1e-9
  int points = 0;
};
SlopeFit fit_slope(const std::vector<double>& eps, const std::vector<double>& err);

struct SweepResult {
  std::vector<SweepRecord> records;
  SlopeFit sup_T;            // error with the layer corrector
  SlopeFit sup_T_no_layer;   // error without it
  SlopeFit sup_psi;
  int successes = 0;
};

/// Runs one eps point of the sweep. Failures are recorded, never thrown.
SweepRecord run_sweep_point(const ExperimentConfig& cfg, const Setup& s, double eps,
                            const std::string& point_file = {});

// Subcommands. Each writes its files below cfg.out and returns the JSON summary
// it wrote. Invalid input throws InvalidArgument, solver trouble SolverFailure.
nlohmann::json cmd_milne(const ExperimentConfig& cfg);
nlohmann::json cmd_interior(const ExperimentConfig& cfg);
nlohmann::json cmd_composite(const ExperimentConfig& cfg);
nlohmann::json cmd_solve(const ExperimentConfig& cfg);
SweepResult cmd_sweep(const ExperimentConfig& cfg);
nlohmann::json cmd_spectral(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const SlopeFit& fit);

}  // namespace raddiff::app
