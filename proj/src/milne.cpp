#include "raddiff/milne.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "raddiff/elliptic.hpp"
#include "raddiff/errors.hpp"

namespace raddiff {

Mesh build_half_space_mesh(const HalfSpaceMeshOptions& o) {
  if (!(o.L_eta > 0) || !(o.h_min > 0) || !(o.h_fine >= o.h_min) || !(o.h_max >= o.h_fine) ||
      !(o.ratio >= 1)) {
    throw InvalidArgument("inconsistent half-space mesh options");
  }
  std::vector<double> x{0.0};
  double h = o.h_min;
  while (x.back() < o.L_eta) {
    const double cap = x.back() < o.fine_extent ? o.h_fine : o.h_max;
    x.push_back(x.back() + h);
    h = std::min(h * o.ratio, cap);
  }
  // Snap the last node to L, merging a sliver cell into its neighbour.
  if (x.size() > 2 && o.L_eta - x[x.size() - 2] < 0.5 * (x[x.size() - 2] - x[x.size() - 3])) {
    x.pop_back();
  }
  x.back() = o.L_eta;
  return Mesh(Eigen::Map<ScalarField>(x.data(), static_cast<Index>(x.size())));
}

double tail_average(const Mesh& mesh, const ScalarField& f, double start) {
  const double a = start * mesh.length();
  double num = 0, den = 0;
  for (Index i = 0; i < mesh.cells(); ++i) {
    if (mesh[i + 1] <= a) continue;
    const double h = mesh.width(i);
    num += 0.5 * h * (f[i] + f[i + 1]);
    den += h;
  }
  return den > 0 ? num / den : f[f.size() - 1];
}

double interpolate_cubic(const Mesh& mesh, const ScalarField& values, double x) {
  const Index n = mesh.size();
  if (n < 4) {
    const Index i = mesh.locate(x);
    const double s = (x - mesh[i]) / mesh.width(i);
    return (1 - s) * values[i] + s * values[i + 1];
  }
  const Index i = mesh.locate(x);
  const Index first = std::clamp<Index>(i - 1, 0, n - 4);
  double sum = 0;
  for (Index a = first; a < first + 4; ++a) {
    double l = 1;
    for (Index b = first; b < first + 4; ++b) {
      if (b != a) l *= (x - mesh[b]) / (mesh[a] - mesh[b]);
    }
    sum += l * values[a];
  }
  return sum;
}

std::optional<double> fit_decay_rate(const ScalarField& eta, const ScalarField& profile,
                                     double far_value, std::array<double, 2> window,
                                     double floor) {
  if (eta.size() != profile.size()) throw InvalidArgument("profile and abscissae differ in size");
  if (!(window[1] > window[0])) throw InvalidArgument("decay fit window is empty");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  Index count = 0;
  for (Index i = 0; i < eta.size(); ++i) {
    if (eta[i] < window[0] || eta[i] > window[1]) continue;
    const double dev = std::abs(profile[i] - far_value);
    if (!(dev > floor)) continue;
    const double y = std::log(dev);
    sx += eta[i];
    sy += y;
    sxx += eta[i] * eta[i];
    sxy += eta[i] * y;
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double den = double(count) * sxx - sx * sx;
  if (!(den > 0)) return std::nullopt;
  const double slope = (double(count) * sxy - sx * sy) / den;
  return -slope;
}

namespace {

// Solves u'' = rhs on the half-space mesh with u(0) = left and u'(L) = 0.
ScalarField solve_dirichlet_neumann(const Mesh& mesh, const SecondDifference<double>& d2,
                                    const ScalarField& rhs, double left) {
  const Index n = mesh.size();
  const Index m = n - 1;  // unknowns u_1 .. u_{n-1}
  ScalarField sub(m), dg(m), sup(m), b(m);
  for (Index k = 0; k < m; ++k) {
    const Index i = k + 1;
    if (i + 1 < n) {
      sub[k] = d2.lower[i];
      dg[k] = d2.diag[i];
      sup[k] = d2.upper[i];
    } else {
      const double h = mesh.width(n - 2);
      sub[k] = 2 / (h * h);
      dg[k] = -2 / (h * h);
      sup[k] = 0;
    }
    b[k] = rhs[i];
  }
  b[0] -= sub[0] * left;
  ScalarField u(n);
  u[0] = left;
  u.tail(m) = detail::solve_tridiagonal(sub, dg, sup, b);
  return u;
}

struct FixedPointResult {
  ScalarField state;
  KineticField intensity;
  int iterations = 0;
  double relaxation = 0;
  std::vector<double> changes;
};

// Damped fixed-point iteration u <- u + omega (F(u) - u). The relaxation factor
// is halved and the previous iterate restored whenever the change grows, turns
// non-finite, or (if required) the state becomes negative. Thresholds scale with
// max(1, |u|). A change that stalls within 100 tol of convergence for 50 sweeps
// is accepted: that is the round-off floor of long, finely resolved domains.
FixedPointResult damped_picard(
    const std::function<ScalarField(const ScalarField&, KineticField&)>& map, ScalarField u,
    const MilneOptions& opts, bool require_nonnegative, const char* what) {
  FixedPointResult out;
  double omega = opts.relaxation;
  if (!(omega > 0 && omega <= 1)) throw InvalidArgument("relaxation factor must be in (0, 1]");
  if (!(opts.tol > 0)) throw InvalidArgument("Milne tolerance must be positive");

  KineticField psi;
  ScalarField prev_u, prev_f;
  double prev_change = std::numeric_limits<double>::infinity();
  bool have_prev = false;
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const ScalarField f = map(u, psi);
    const double change = (f - u).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    const bool bad_state = !std::isfinite(change) || !f.allFinite() ||
                           (require_nonnegative && (u.array() < 0).any());
    const bool growing = have_prev && change > prev_change && change > 10 * opts.tol * scale;
    if (bad_state || growing) {
      if (!have_prev) {
        throw SolverFailure(std::string(what) + ": non-finite or inadmissible initial iterate");
      }
      omega /= 2;
      if (omega < opts.min_relaxation) {
        throw SolverFailure(std::string(what) + ": relaxation factor underflow", out.changes);
      }
      u = prev_u + omega * (prev_f - prev_u);
      continue;
    }
    out.changes.push_back(change);
    if (change < 0.9 * best) {
      best = change;
      stalled = 0;
    } else {
      ++stalled;
    }
    if (change < opts.tol * scale || (stalled >= 50 && change < 100 * opts.tol * scale)) {
      out.state = u;
      out.intensity = psi;
      out.iterations = it + 1;
      out.relaxation = omega;
      return out;
    }
    prev_u = u;
    prev_f = f;
    prev_change = change;
    have_prev = true;
    u = u + omega * (f - u);
  }
  std::vector<double> tail(out.changes.end() - std::min<std::ptrdiff_t>(20, out.changes.size()),
                           out.changes.end());
  throw SolverFailure(std::string(what) + ": no convergence within iteration limit", tail);
}

void finish(MilneSolution& s, const Quadrature& quad, const MilneOptions& opts,
            const ScalarField* weight) {
  const Index nd = quad.size();
  s.temperature_far = tail_average(s.mesh, s.temperature, opts.tail_start);
  s.intensity_far.resize(nd);
  for (Index j = 0; j < nd; ++j) {
    s.intensity_far[j] = tail_average(s.mesh, s.intensity.col(j), opts.tail_start);
  }
  const double expected = weight ? tail_average(s.mesh, *weight, opts.tail_start) * s.temperature_far
                                 : std::pow(s.temperature_far, 4);
  s.relation_residual = (s.intensity_far.array() - expected).abs().maxCoeff();
  const Index n = s.mesh.size();
  s.tail_amplitude =
      std::abs(s.temperature[n - 1] - interpolate_cubic(s.mesh, s.temperature, s.mesh.length() / 2));
  s.layer_amplitude = (s.temperature.array() - s.temperature_far).abs().maxCoeff();
  // below this the profile is iteration noise, not a layer
  const double noise = std::max(1e-14, 100 * opts.tol) * std::max(1.0, std::abs(s.temperature_far));
  s.decay_rate = fit_decay_rate(s.mesh.nodes(), s.temperature, s.temperature_far, opts.fit_window,
                                noise);
  if (s.tail_amplitude > opts.tail_tolerance) {
    throw SolverFailure("layer has not decayed at the truncation point; increase L_eta",
                        {s.tail_amplitude});
  }
}

}  // namespace

double MilneSolution::temperature_at(double eta) const {
  if (eta >= mesh.length()) return temperature_far;
  return interpolate_cubic(mesh, temperature, std::max(eta, 0.0));
}

ScalarField MilneSolution::intensity_at(double eta) const {
  if (eta >= mesh.length()) return intensity_far;
  ScalarField out(intensity.cols());
  for (Index j = 0; j < intensity.cols(); ++j) {
    out[j] = interpolate_cubic(mesh, intensity.col(j), std::max(eta, 0.0));
  }
  return out;
}

MilneSolution solve_nonlinear_milne(double Tb0, const ScalarField& inflow, const Mesh& mesh,
                                    const Quadrature& quad, const MilneOptions& opts) {
  if (!(Tb0 >= 0)) throw InvalidArgument("boundary temperature must be nonnegative");
  if (inflow.size() != quad.size()) throw InvalidArgument("inflow size does not match quadrature");
  for (Index j = quad.per_half(); j < quad.size(); ++j) {
    if (!(inflow[j] >= 0)) throw InvalidArgument("inflow intensity must be nonnegative");
  }
  const Sweeper<double> sweeper(1.0, mesh, quad);
  const SecondDifference<double> d2(mesh);
  const double m0 = quad.moment_weights().sum();

  auto map = [&](const ScalarField& t, KineticField& psi) {
    const ScalarField t4 = t.array().square().square().matrix();
    psi = sweeper.half_space(t4, inflow);
    const ScalarField q = moment(psi, quad) - m0 * t4;
    return solve_dirichlet_neumann(mesh, d2, (-q).eval(), Tb0);
  };
  FixedPointResult r = damped_picard(map, ScalarField::Constant(mesh.size(), Tb0), opts, true,
                                     "nonlinear Milne solve");
  if ((r.state.array() < 0).any()) {
    throw SolverFailure("nonlinear Milne solve produced negative temperatures");
  }
  MilneSolution s;
  s.order = 0;
  s.mesh = mesh;
  s.temperature = std::move(r.state);
  s.intensity = std::move(r.intensity);
  s.iterations = r.iterations;
  s.relaxation = r.relaxation;
  s.changes = std::move(r.changes);
  finish(s, quad, opts, nullptr);
  return s;
}

MilneSolution solve_nonlinear_milne(double Tb0, const ScalarField& inflow, const Quadrature& quad,
                                    const HalfSpaceMeshOptions& mesh_opts,
                                    const MilneOptions& opts) {
  return solve_nonlinear_milne(Tb0, inflow, build_half_space_mesh(mesh_opts), quad, opts);
}

MilneSolution solve_linear_milne(int order, const ScalarField& weight, const LayerSources& src,
                                 const Mesh& mesh, const Quadrature& quad,
                                 const MilneOptions& opts) {
  const Index n = mesh.size();
  if (weight.size() != n || src.s1.size() != n || src.s2.rows() != n ||
      src.s2.cols() != quad.size() || src.inflow.size() != quad.size()) {
    throw InvalidArgument("linear Milne data do not match mesh and quadrature");
  }
  if (!(weight.minCoeff() > 0)) throw InvalidArgument("linear Milne weight must be positive");
  if (!src.s1.allFinite() || !src.s2.allFinite() || !src.inflow.allFinite()) {
    throw InvalidArgument("linear Milne sources must be finite");
  }
  const double s_scale = 1 + std::max(src.s1.cwiseAbs().maxCoeff(), src.s2.cwiseAbs().maxCoeff());
  if (std::abs(src.s1[n - 1]) > opts.tail_tolerance * s_scale ||
      src.s2.row(n - 1).cwiseAbs().maxCoeff() > opts.tail_tolerance * s_scale) {
    throw InvalidArgument("layer sources do not decay toward the truncation point");
  }
  const Sweeper<double> sweeper(1.0, mesh, quad);
  const SecondDifference<double> d2(mesh);
  const double m0 = quad.moment_weights().sum();

  auto map = [&](const ScalarField& g, KineticField& phi) {
    const ScalarField wg = weight.cwiseProduct(g);
    phi = sweeper.half_space((src.s2.colwise() + wg).eval(), src.inflow);
    const ScalarField rhs = src.s1 - (moment(phi, quad) - m0 * wg);
    return solve_dirichlet_neumann(mesh, d2, rhs, 0.0);
  };
  FixedPointResult r =
      damped_picard(map, ScalarField::Zero(n), opts, false, "linear Milne solve");
  MilneSolution s;
  s.order = order;
  s.mesh = mesh;
  s.temperature = std::move(r.state);
  s.intensity = std::move(r.intensity);
  s.iterations = r.iterations;
  s.relaxation = r.relaxation;
  s.changes = std::move(r.changes);
  finish(s, quad, opts, &weight);
  return s;
}

}  // namespace raddiff
