#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

#include "raddiff/csv.hpp"
#include "raddiff/errors.hpp"
#include "raddiff/spectral.hpp"

namespace raddiff::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vector_json(const ScalarField& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + cfg.out + "': " + ec.message());
  return dir;
}

std::string eps_tag(double eps) { return "eps" + format_number(eps); }

ScalarField mean_intensity(const KineticField& psi, const Quadrature& quad) {
  return moment(psi, quad) / (4 * std::numbers::pi);
}

std::vector<std::string> kinetic_header(const Quadrature& quad) {
  std::vector<std::string> h;
  for (Index j = 0; j < quad.size(); ++j) h.push_back("psi_" + std::to_string(j));
  return h;
}

void write_quadrature(const fs::path& dir, const Quadrature& quad) {
  CsvTable t({"index", "mu", "weight"});
  for (Index j = 0; j < quad.size(); ++j) {
    t.add_row(std::vector<double>{double(j), quad.mu(j), quad.weights()[j]});
  }
  t.write(dir / "quadrature.csv");
}

// x, T, phi = <psi>/4pi, then extra columns, then psi per direction on request.
CsvTable profile_table(const std::string& xname, const ScalarField& x, const ScalarField& T,
                       const KineticField& psi, const Quadrature& quad, bool kinetic,
                       const std::vector<std::pair<std::string, ScalarField>>& extra = {}) {
  std::vector<std::string> header{xname, "T", "phi"};
  for (const auto& [name, _] : extra) header.push_back(name);
  if (kinetic) {
    auto k = kinetic_header(quad);
    header.insert(header.end(), k.begin(), k.end());
  }
  CsvTable t(header);
  const ScalarField phi = mean_intensity(psi, quad);
  for (Index i = 0; i < x.size(); ++i) {
    std::vector<double> row{x[i], T[i], phi[i]};
    for (const auto& [_, col] : extra) row.push_back(col[i]);
    if (kinetic) {
      for (Index j = 0; j < psi.cols(); ++j) row.push_back(psi(i, j));
    }
    t.add_row(row);
  }
  return t;
}

json report_json(const SolveReport& r) {
  return json{{"method", r.method},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"inner_iterations", r.inner_iterations},
              {"residual_temperature", r.residual_temperature},
              {"residual_intensity", r.residual_intensity},
              {"contraction_factor", r.contraction_factor},
              {"ratios", r.ratios},
              {"changes", r.changes},
              {"wall_seconds", r.wall_seconds}};
}

json norms_json(const ErrorNorms& e) {
  return json{{"sup_T", e.sup_T}, {"sup_psi", e.sup_psi}, {"l2_T", e.l2_T}, {"l2_psi", e.l2_psi}};
}

// Contraction around the composite first; Picard when that fails.
FullSolution solve_full(const ExperimentConfig& cfg, const Setup& s, const CompositeApproximation& approx,
                        std::string* fallback_reason) {
  try {
    return solve_contraction(approx.eps, approx, cfg.tol);
  } catch (const SolverFailure& e) {
    if (fallback_reason) *fallback_reason = e.what();
  }
  return solve_picard(approx.eps, DirichletBC{s.data.T_left, s.data.T_right}, s.data.inflow(), approx.mesh,
                      s.quad, cfg.tol);
}

json header_json(const std::string& command, const ExperimentConfig& cfg) {
  return json{{"schema_version", kSchemaVersion}, {"command", command}, {"config", to_json(cfg)}};
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  return json{{"T_left", cfg.T_left},
              {"T_right", cfg.T_right},
              {"psi_left", cfg.psi_left},
              {"eps", cfg.eps},
              {"order", cfg.order},
              {"delta", cfg.delta ? json(*cfg.delta) : json("auto")},
              {"mesh_bulk", cfg.mesh_bulk},
              {"mesh_layer", cfg.mesh_layer},
              {"quad", cfg.quad},
              {"L_eta", cfg.L_eta},
              {"tol", cfg.tol},
              {"no_layer", cfg.no_layer},
              {"dump_kinetic", cfg.dump_kinetic},
              {"tau", cfg.tau ? json(*cfg.tau) : json("auto")}};
}

json to_json(const SlopeFit& fit) {
  if (fit.exact) return json("exact");
  if (!fit.slope) return json(nullptr);
  return json{{"slope", *fit.slope}, {"points", fit.points}};
}

Setup prepare(const ExperimentConfig& cfg) {
  validate(cfg);
  Setup s;
  s.quad = gauss_quadrature<double>(cfg.quad);
  s.data = make_boundary_data(cfg, s.quad);
  ExpansionOptions opts;
  opts.mesh.L_eta = cfg.L_eta;
  s.expansion = std::make_shared<const AsymptoticExpansion>(build_expansion(s.data, cfg.order, s.quad, opts));
  return s;
}

double cutoff_delta(const ExperimentConfig& cfg, const AsymptoticExpansion& e, double eps) {
  if (cfg.delta) return *cfg.delta;
  return auto_delta(cfg.order, eps, e.decay_rate(cfg.order));
}

Mesh slab_mesh(const ExperimentConfig& cfg, double eps) {
  return build_mesh<double>(cfg.mesh_bulk, cfg.mesh_layer, eps, Grading::layer_graded, 1.0);
}

CompositeApproximation composite_for(const ExperimentConfig& cfg, const Setup& s, double eps) {
  return assemble_composite(cfg.order, eps, s.expansion, CutoffSpec(cutoff_delta(cfg, *s.expansion, eps)),
                            slab_mesh(cfg, eps));
}

SlopeFit fit_slope(const std::vector<double>& eps, const std::vector<double>& err) {
  if (eps.size() != err.size()) throw InvalidArgument("slope fit: size mismatch");
  SlopeFit fit;
  fit.points = static_cast<int>(eps.size());
  if (fit.points < 3) return fit;
  bool exact = true;
  for (double e : err) exact = exact && std::abs(e) < 1e-9;
  if (exact) {
    fit.exact = true;
    return fit;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(err[i] > 0)) return fit;  // log undefined; leave the slope empty
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = fit.points;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

SweepRecord run_sweep_point(const ExperimentConfig& cfg, const Setup& s, double eps,
                            const std::string& point_file) {
  const auto start = std::chrono::steady_clock::now();
  SweepRecord rec;
  rec.eps = eps;
  rec.contraction_factor = kNaN;
  try {
    rec.delta = cutoff_delta(cfg, *s.expansion, eps);
    const CompositeApproximation approx = composite_for(cfg, s, eps);
    const ResidualReport res = evaluate_residuals(approx);
    rec.r1_sup = res.r1_sup;
    rec.r2_sup = res.r2_sup;
    const FullSolution sol = solve_full(cfg, s, approx, nullptr);
    rec.method = sol.report.method;
    rec.iterations = sol.report.iterations;
    if (rec.method == "contraction") rec.contraction_factor = sol.report.contraction_factor;
    rec.with_layer = error_norms(sol.temperature, sol.intensity, approx, 0, true);
    rec.no_layer = error_norms(sol.temperature, sol.intensity, approx, 0, false);
    rec.ok = true;
    if (!point_file.empty()) {
      const ScalarField t0 = approx.truncated_temperature(0, false);
      const ScalarField t0l = approx.truncated_temperature(0, true);
      profile_table("x", approx.mesh.nodes(), sol.temperature, sol.intensity, s.quad, cfg.dump_kinetic,
                    {{"T0", t0}, {"T0_with_layer", t0l}})
          .write(point_file);
    }
  } catch (const InvalidArgument& e) {
    rec.reason = e.what();
  } catch (const SolverFailure& e) {
    rec.reason = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

json cmd_milne(const ExperimentConfig& cfg) {
  const Setup s = prepare(cfg);
  const fs::path dir = output_dir(cfg);
  write_quadrature(dir, s.quad);
  json layers = json::array();
  for (const MilneSolution& L : s.expansion->layers) {
    const ScalarField dev = L.temperature.array() - L.temperature_far;
    profile_table("eta", L.mesh.nodes(), L.temperature, L.intensity, s.quad, cfg.dump_kinetic,
                  {{"T_minus_far", dev}})
        .write(dir / ("milne_" + std::to_string(L.order) + ".csv"));
    layers.push_back(json{{"order", L.order},
                          {"temperature_far", L.temperature_far},
                          {"intensity_far", vector_json(L.intensity_far)},
                          {"relation_residual", L.relation_residual},
                          {"decay_rate", optional_number(L.decay_rate)},
                          {"layer_amplitude", L.layer_amplitude},
                          {"tail_amplitude", L.tail_amplitude},
                          {"iterations", L.iterations},
                          {"relaxation", L.relaxation},
                          {"mesh_nodes", L.mesh.size()}});
  }
  json j = header_json("milne", cfg);
  j["layers"] = layers;
  j["decay_rate"] = optional_number(s.expansion->decay_rate(cfg.order));
  write_json(dir / "farfield.json", j);
  return j;
}

json cmd_interior(const ExperimentConfig& cfg) {
  const Setup s = prepare(cfg);
  const fs::path dir = output_dir(cfg);
  const InteriorExpansion& in = s.expansion->interior;
  const Mesh mesh = build_mesh<double>(cfg.mesh_bulk, 0, 1.0, Grading::uniform, 1.0);
  std::vector<std::string> header{"x"};
  for (int k = 0; k <= in.order(); ++k) header.push_back("T_" + std::to_string(k));
  for (int k = 0; k <= in.order(); ++k) header.push_back("phi_" + std::to_string(k));
  CsvTable t(header);
  std::vector<ScalarField> phis;
  for (int k = 0; k <= in.order(); ++k) phis.push_back(mean_intensity(in.intensity_field(k, mesh), s.quad));
  for (Index i = 0; i < mesh.size(); ++i) {
    std::vector<double> row{mesh[i]};
    for (int k = 0; k <= in.order(); ++k) row.push_back(in.temperature(k, mesh[i]));
    for (int k = 0; k <= in.order(); ++k) row.push_back(phis[k][i]);
    t.add_row(row);
  }
  t.write(dir / "interior.csv");
  json terms = json::array();
  for (int k = 0; k <= in.order(); ++k) {
    terms.push_back(json{{"order", k},
                         {"left", in.temperature(k, 0.0)},
                         {"right", in.temperature(k, 1.0)},
                         {"slope_left", in.temperature_derivative(k, 1, 0.0)},
                         {"slope_right", in.temperature_derivative(k, 1, 1.0)}});
  }
  json j = header_json("interior", cfg);
  j["terms"] = terms;
  write_json(dir / "interior.json", j);
  return j;
}

json cmd_composite(const ExperimentConfig& cfg) {
  const Setup s = prepare(cfg);
  const fs::path dir = output_dir(cfg);
  json records = json::array();
  for (double eps : cfg.eps) {
    const CompositeApproximation a = composite_for(cfg, s, eps);
    std::vector<std::pair<std::string, ScalarField>> extra;
    for (int k = 0; k <= a.order; ++k) extra.emplace_back("T_" + std::to_string(k), a.interior_temperature[k]);
    for (int k = 0; k <= a.order; ++k) extra.emplace_back("layer_" + std::to_string(k), a.layer_temperature[k]);
    profile_table("x", a.mesh.nodes(), a.temperature, a.intensity, s.quad, cfg.dump_kinetic, extra)
        .write(dir / ("composite_" + eps_tag(eps) + ".csv"));
    const ResidualReport r = evaluate_residuals(a);
    const double scale = std::pow(eps, a.order + 1);
    records.push_back(json{{"eps", eps},
                           {"delta", a.cutoff.delta()},
                           {"r1_sup", r.r1_sup},
                           {"r1_l2", r.r1_l2},
                           {"r2_sup", r.r2_sup},
                           {"r2_l2", r.r2_l2},
                           {"r1_sup_scaled", r.r1_sup / scale},
                           {"r2_sup_scaled", r.r2_sup / scale}});
  }
  json j = header_json("composite", cfg);
  j["decay_rate"] = optional_number(s.expansion->decay_rate(cfg.order));
  j["records"] = records;
  write_json(dir / "composite.json", j);
  return j;
}

json cmd_solve(const ExperimentConfig& cfg) {
  const Setup s = prepare(cfg);
  const fs::path dir = output_dir(cfg);
  write_quadrature(dir, s.quad);
  json records = json::array();
  for (double eps : cfg.eps) {
    const CompositeApproximation a = composite_for(cfg, s, eps);
    std::string fallback;
    const FullSolution sol = solve_full(cfg, s, a, &fallback);
    profile_table("x", a.mesh.nodes(), sol.temperature, sol.intensity, s.quad, cfg.dump_kinetic)
        .write(dir / ("solution_" + eps_tag(eps) + ".csv"));
    json rec{{"eps", eps},
             {"delta", a.cutoff.delta()},
             {"report", report_json(sol.report)},
             {"errors", norms_json(error_norms(sol.temperature, sol.intensity, a, 0, !cfg.no_layer))}};
    if (!fallback.empty()) rec["contraction_failure"] = fallback;
    records.push_back(rec);
  }
  json j = header_json("solve", cfg);
  j["records"] = records;
  write_json(dir / "solve.json", j);
  return j;
}

SweepResult cmd_sweep(const ExperimentConfig& cfg) {
  if (cfg.eps.size() < 3) throw InvalidArgument("sweep needs at least 3 eps values");
  const auto start = std::chrono::steady_clock::now();
  const Setup s = prepare(cfg);
  const fs::path dir = output_dir(cfg);
  fs::create_directories(dir / "points");
  write_quadrature(dir, s.quad);

  SweepResult result;
  result.records.resize(cfg.eps.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.eps.size(); i = next++) {
      const double eps = cfg.eps[i];
      result.records[i] = run_sweep_point(cfg, s, eps, (dir / "points" / (eps_tag(eps) + ".csv")).string());
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), cfg.eps.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  // merge, single-threaded and in eps order
  CsvTable table({"eps", "delta", "status", "method", "iterations", "contraction_factor", "sup_T",
                  "sup_T_no_layer", "l2_T", "l2_T_no_layer", "sup_psi", "sup_psi_no_layer", "r1_sup",
                  "r2_sup", "reason"});
  std::vector<double> ok_eps, e_with, e_without, e_psi;
  json records = json::array();
  for (const SweepRecord& r : result.records) {
    auto num = [&](double v) { return r.ok && std::isfinite(v) ? format_number(v) : std::string(); };
    table.add_row(std::vector<std::string>{
        format_number(r.eps), format_number(r.delta), r.ok ? "ok" : "failed", r.method,
        r.ok ? std::to_string(r.iterations) : std::string(), num(r.contraction_factor), num(r.with_layer.sup_T),
        num(r.no_layer.sup_T), num(r.with_layer.l2_T), num(r.no_layer.l2_T), num(r.with_layer.sup_psi),
        num(r.no_layer.sup_psi), num(r.r1_sup), num(r.r2_sup), r.reason});
    json rec{{"eps", r.eps}, {"delta", r.delta}, {"ok", r.ok}, {"wall_seconds", r.wall_seconds}};
    if (r.ok) {
      ok_eps.push_back(r.eps);
      e_with.push_back(r.with_layer.sup_T);
      e_without.push_back(r.no_layer.sup_T);
      e_psi.push_back(r.with_layer.sup_psi);
      rec["method"] = r.method;
      rec["iterations"] = r.iterations;
      rec["contraction_factor"] = std::isfinite(r.contraction_factor) ? json(r.contraction_factor) : json(nullptr);
      rec["with_layer"] = norms_json(r.with_layer);
      rec["no_layer"] = norms_json(r.no_layer);
      rec["r1_sup"] = r.r1_sup;
      rec["r2_sup"] = r.r2_sup;
    } else {
      rec["reason"] = r.reason;
    }
    records.push_back(rec);
  }
  table.write(dir / "sweep.csv");
  result.successes = static_cast<int>(ok_eps.size());
  result.sup_T = fit_slope(ok_eps, e_with);
  result.sup_T_no_layer = fit_slope(ok_eps, e_without);
  result.sup_psi = fit_slope(ok_eps, e_psi);

  json j = header_json("sweep", cfg);
  j["decay_rate"] = optional_number(s.expansion->decay_rate(cfg.order));
  j["records"] = records;
  j["slopes"] = json{{"sup_T", to_json(result.sup_T)},
                     {"sup_T_no_layer", to_json(result.sup_T_no_layer)},
                     {"sup_psi", to_json(result.sup_psi)}};
  j["headline"] = json{{"curve", cfg.no_layer ? "sup_T_no_layer" : "sup_T"},
                       {"slope", to_json(cfg.no_layer ? result.sup_T_no_layer : result.sup_T)}};
  j["successes"] = result.successes;
  j["status"] = result.successes >= 3 ? "ok" : "insufficient";
  j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(dir / "summary.json", j);
  if (result.successes < 3) {
    throw SolverFailure("sweep: only " + std::to_string(result.successes) +
                        " eps points succeeded; at least 3 are needed for a slope");
  }
  return result;
}

json cmd_spectral(const ExperimentConfig& cfg) {
  const Setup s = prepare(cfg);
  const fs::path dir = output_dir(cfg);
  const MilneSolution& L = s.expansion->layers.front();
  const double tau = cfg.tau ? *cfg.tau : (L.decay_rate ? *L.decay_rate / 2 : 0.5);
  if (L.decay_rate && !(tau < *L.decay_rate)) {
    throw InvalidArgument("tau = " + format_number(tau) + " must be below the decay rate " +
                          format_number(*L.decay_rate));
  }
  SpectralOptions sopts;
  sopts.decay_rate = L.decay_rate;
  const SpectralReport rep = check_spectral(L.mesh, L.temperature, tau, sopts);

  // same check on a mesh with every spacing halved
  HalfSpaceMeshOptions fine;
  fine.L_eta = cfg.L_eta;
  fine.h_min /= 2;
  fine.h_fine /= 2;
  fine.h_max /= 2;
  const MilneSolution Lf = solve_nonlinear_milne(s.data.T_left, s.data.psi_left, s.quad, fine);
  const SpectralReport rep_fine = check_spectral(Lf.mesh, Lf.temperature, tau, sopts);

  CsvTable ev({"eta", "profile", "eigenvector"});
  for (Index i = 0; i < L.mesh.size(); ++i) {
    ev.add_row(std::vector<double>{L.mesh[i], L.temperature[i], rep.eigenvector[i]});
  }
  ev.write(dir / "spectral_eigenvector.csv");

  json j = header_json("spectral", cfg);
  j["tau"] = tau;
  j["decay_rate"] = optional_number(L.decay_rate);
  j["max_ratio"] = rep.max_ratio;
  j["pass"] = rep.pass;
  j["iterations"] = rep.iterations;
  j["resolved_extent"] = rep.resolved_extent;
  j["refined_max_ratio"] = rep_fine.max_ratio;
  j["refinement_delta"] = std::abs(rep_fine.max_ratio - rep.max_ratio);
  write_json(dir / "spectral.json", j);

  json coercivity = header_json("spectral", cfg);
  json records = json::array();
  for (double eps : cfg.eps) {
    const CompositeApproximation a = composite_for(cfg, s, eps);
    const CoercivityReport c = check_coercivity(a, eps, 5);
    records.push_back(json{{"eps", eps},
                           {"kappa", c.kappa},
                           {"smallest_eigenvalue", c.smallest_eigenvalue},
                           {"constant", c.constant},
                           {"pass", c.pass},
                           {"lowest_eigenvalues", c.lowest_eigenvalues},
                           {"symmetry_defect", c.symmetry_defect}});
  }
  coercivity["records"] = records;
  write_json(dir / "coercivity.json", coercivity);
  j["coercivity"] = records;
  return j;
}

}  // namespace raddiff::app
