#pragma once
#include <optional>
#include <string>
#include <vector>

#include "raddiff/composite.hpp"
#include "raddiff/quadrature.hpp"

namespace raddiff::app {

/// Everything one experiment needs. Defaults describe the ill-prepared
/// benchmark's geometry with well-prepared data; every field has a config key
/// of the same name (see README).
struct ExperimentConfig {
  double T_left = 1;
  double T_right = 1;
  std::string psi_left = "well_prepared";  // or an expression in mu
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  int order = 1;
  std::optional<double> delta;  // empty: auto rule
  int mesh_bulk = 400;
  int mesh_layer = 80;
  int quad = 8;                 // directions per half range
  double L_eta = 60;
  double tol = 1e-9;
  int jobs = 1;
  std::string out = "out";
  bool no_layer = false;
  bool dump_kinetic = false;
  std::optional<double> tau;    // spectral weight exponent; empty: half the decay rate
};

/// Sets one key from its textual value. Unknown keys and malformed values throw
/// InvalidArgument.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` text, '#' starts a comment, blank lines ignored.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Range checks across fields: eps in (0,1) strictly decreasing, order within
/// the supported range, positive sizes and tolerances.
void validate(const ExperimentConfig& cfg);

std::vector<double> parse_number_list(const std::string& text);

/// Boundary data with the psi expression evaluated at the quadrature nodes.
BoundaryData make_boundary_data(const ExperimentConfig& cfg, const Quadrature& quad);

}  // namespace raddiff::app
