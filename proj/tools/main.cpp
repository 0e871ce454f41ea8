#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "raddiff/errors.hpp"

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;

void print_slope(const char* name, const raddiff::app::SlopeFit& f) {
  if (f.exact) std::printf("  %-16s exact\n", name);
  else if (f.slope) std::printf("  %-16s %.4f (%d points)\n", name, *f.slope, f.points);
  else std::printf("  %-16s n/a\n", name);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace raddiff;
  using namespace raddiff::app;

  CLI::App app{"Diffusive-limit radiative transfer in a slab: layer, expansion and full solves"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  // flag overrides, applied on top of the config file as key/value settings
  std::map<std::string, std::string> overrides;
  auto add_value = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                          help);
  };
  auto add_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_flag_callback(flag, [&overrides, key] { overrides[key] = "true"; }, help);
  };

  const std::map<std::string, std::string> descriptions{
      {"milne", "Solve the boundary-layer problems; write milne_k.csv and farfield.json"},
      {"interior", "Evaluate the interior expansion; write interior.csv and interior.json"},
      {"composite", "Assemble composite approximations and their residuals per eps"},
      {"solve", "Full solve per eps (contraction, Picard fallback); write solution CSVs"},
      {"sweep", "eps-sweep of error norms with slope fits; write sweep.csv and summary.json"},
      {"spectral", "Layer stability ratio and coercivity; write spectral.json and coercivity.json"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Flat key = value config file");
    add_value(sub, "--eps", "eps", "Comma-separated eps list, strictly decreasing");
    add_value(sub, "--order", "order", "Expansion order N");
    add_value(sub, "--delta", "delta", "Cutoff width: a number or 'auto'");
    add_value(sub, "--mesh-bulk", "mesh_bulk", "Bulk node count of the slab mesh");
    add_value(sub, "--mesh-layer", "mesh_layer", "Graded cells in the wall layer");
    add_value(sub, "--quad", "quad", "Gauss directions per half range");
    add_value(sub, "--L-eta", "L_eta", "Half-space truncation length");
    add_value(sub, "--tol", "tol", "Solver tolerance");
    add_value(sub, "--jobs", "jobs", "Concurrent eps points (sweep)");
    add_value(sub, "--out", "out", "Output directory");
    add_value(sub, "--tau", "tau", "Spectral weight exponent or 'auto'");
    add_value(sub, "--T-left", "T_left", "Left wall temperature");
    add_value(sub, "--T-right", "T_right", "Right wall temperature");
    add_value(sub, "--psi", "psi_left", "Left inflow: 'well_prepared' or an expression in mu");
    add_flag(sub, "--no-layer", "no_layer", "Exclude the layer corrector from reported errors");
    add_flag(sub, "--dump-kinetic", "dump_kinetic", "Add per-direction intensities to CSV output");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);
    validate(cfg);

    if (subs["milne"]->parsed()) {
      const auto j = cmd_milne(cfg);
      for (const auto& L : j["layers"]) {
        std::printf("layer %d: T_far = %.12g, relation residual %.2e, decay rate %s\n", L["order"].get<int>(),
                    L["temperature_far"].get<double>(), L["relation_residual"].get<double>(),
                    L["decay_rate"].is_null() ? "none" : L["decay_rate"].dump().c_str());
      }
    } else if (subs["interior"]->parsed()) {
      cmd_interior(cfg);
      std::printf("interior expansion written to %s\n", cfg.out.c_str());
    } else if (subs["composite"]->parsed()) {
      const auto j = cmd_composite(cfg);
      for (const auto& r : j["records"]) {
        std::printf("eps %-8g delta %-8.4g |R1| %.3e |R2| %.3e\n", r["eps"].get<double>(), r["delta"].get<double>(),
                    r["r1_sup"].get<double>(), r["r2_sup"].get<double>());
      }
    } else if (subs["solve"]->parsed()) {
      const auto j = cmd_solve(cfg);
      for (const auto& r : j["records"]) {
        std::printf("eps %-8g %-12s iterations %d, sup error %.3e\n", r["eps"].get<double>(),
                    r["report"]["method"].get<std::string>().c_str(), r["report"]["iterations"].get<int>(),
                    r["errors"]["sup_T"].get<double>());
      }
    } else if (subs["sweep"]->parsed()) {
      const SweepResult res = cmd_sweep(cfg);
      for (const auto& r : res.records) {
        if (r.ok) {
          std::printf("eps %-8g %-12s sup_T %.3e  no layer %.3e\n", r.eps, r.method.c_str(), r.with_layer.sup_T,
                      r.no_layer.sup_T);
        } else {
          std::printf("eps %-8g failed: %s\n", r.eps, r.reason.c_str());
        }
      }
      std::printf("slopes:\n");
      print_slope("sup_T", res.sup_T);
      print_slope("sup_T_no_layer", res.sup_T_no_layer);
      print_slope("sup_psi", res.sup_psi);
    } else if (subs["spectral"]->parsed()) {
      const auto j = cmd_spectral(cfg);
      std::printf("tau %.6g  M* %.6g  %s  (refined mesh delta %.2e)\n", j["tau"].get<double>(),
                  j["max_ratio"].get<double>(), j["pass"].get<bool>() ? "pass" : "fail",
                  j["refinement_delta"].get<double>());
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
