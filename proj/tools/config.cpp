#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "expression.hpp"
#include "raddiff/errors.hpp"
#include "raddiff/interior.hpp"

namespace raddiff::app {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out)) {
    throw InvalidArgument(key + ": not a number: '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  int out = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidArgument(key + ": not an integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = lower(trim(v));
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw InvalidArgument(key + ": not a boolean: '" + v + "'");
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream pieces(text);
  std::string piece;
  while (std::getline(pieces, piece, ',')) {
    std::istringstream words(piece);
    std::string item;
    bool any = false;
    while (words >> item) {
      out.push_back(to_double("eps", item));
      any = true;
    }
    if (!any) throw InvalidArgument("eps: empty entry in list '" + text + "'");
  }
  if (out.empty()) throw InvalidArgument("eps: empty list");
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(value);
  if (key == "T_left") cfg.T_left = to_double(key, v);
  else if (key == "T_right") cfg.T_right = to_double(key, v);
  else if (key == "psi_left") {
    if (v.empty()) throw InvalidArgument("psi_left: empty");
    if (v != "well_prepared") MuExpression check(v);  // parse errors surface here
    cfg.psi_left = v;
  } else if (key == "eps") cfg.eps = parse_number_list(v);
  else if (key == "order") cfg.order = to_int(key, v);
  else if (key == "delta") {
    if (lower(v) == "auto") cfg.delta.reset();
    else cfg.delta = to_double(key, v);
  } else if (key == "mesh_bulk") cfg.mesh_bulk = to_int(key, v);
  else if (key == "mesh_layer") cfg.mesh_layer = to_int(key, v);
  else if (key == "quad") cfg.quad = to_int(key, v);
  else if (key == "L_eta") cfg.L_eta = to_double(key, v);
  else if (key == "tol") cfg.tol = to_double(key, v);
  else if (key == "jobs") cfg.jobs = to_int(key, v);
  else if (key == "out") cfg.out = v;
  else if (key == "no_layer") cfg.no_layer = to_bool(key, v);
  else if (key == "dump_kinetic") cfg.dump_kinetic = to_bool(key, v);
  else if (key == "tau") {
    if (lower(v) == "auto") cfg.tau.reset();
    else cfg.tau = to_double(key, v);
  } else throw InvalidArgument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void validate(const ExperimentConfig& cfg) {
  if (!(cfg.T_left > 0) || !(cfg.T_right > 0)) {
    throw InvalidArgument("boundary temperatures must be positive");
  }
  if (cfg.eps.empty()) throw InvalidArgument("eps list is empty");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    if (!(cfg.eps[i] > 0 && cfg.eps[i] < 1)) throw InvalidArgument("eps values must lie in (0,1)");
    if (i > 0 && !(cfg.eps[i] < cfg.eps[i - 1])) {
      throw InvalidArgument("eps values must be strictly decreasing");
    }
  }
  if (cfg.order < 0 || cfg.order > kMaxExpansionOrder) {
    throw InvalidArgument("order must lie in [0, " + std::to_string(kMaxExpansionOrder) + "]");
  }
  if (cfg.delta && !(*cfg.delta > 0 && *cfg.delta <= CutoffSpec::max_delta)) {
    throw InvalidArgument("delta must lie in (0, 8/3]");
  }
  if (cfg.mesh_bulk < 3) throw InvalidArgument("mesh_bulk must be at least 3");
  if (cfg.mesh_layer < 2) throw InvalidArgument("mesh_layer must be at least 2");
  if (cfg.quad < 1) throw InvalidArgument("quad must be positive");
  if (!(cfg.L_eta > 2)) throw InvalidArgument("L_eta must exceed 2");
  if (!(cfg.tol > 0 && cfg.tol < 1)) throw InvalidArgument("tol must lie in (0,1)");
  if (cfg.jobs < 1) throw InvalidArgument("jobs must be positive");
  if (cfg.out.empty()) throw InvalidArgument("out must not be empty");
  if (cfg.tau && !(*cfg.tau > 0)) throw InvalidArgument("tau must be positive");
}

BoundaryData make_boundary_data(const ExperimentConfig& cfg, const Quadrature& quad) {
  BoundaryData d;
  d.T_left = cfg.T_left;
  d.T_right = cfg.T_right;
  d.psi_left = ScalarField::Constant(quad.size(), std::pow(cfg.T_left, 4));
  if (cfg.psi_left != "well_prepared") {
    const MuExpression f(cfg.psi_left);
    for (Index j = quad.per_half(); j < quad.size(); ++j) {
      const double v = f(quad.mu(j));
      if (!std::isfinite(v) || v < 0) {
        throw InvalidArgument("psi_left must be finite and nonnegative on mu > 0");
      }
      d.psi_left[j] = v;
    }
  }
  return d;
}

}  // namespace raddiff::app
