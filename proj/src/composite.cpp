#include "raddiff/composite.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "raddiff/elliptic.hpp"
#include "raddiff/errors.hpp"

namespace raddiff {

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10 - 15 * t + 6 * t * t);
}
double smoothstep_d1(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 30 * t * t * (1 - t) * (1 - t);
}
double smoothstep_d2(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 60 * t * (1 - t) * (1 - 2 * t);
}

}  // namespace

CutoffSpec::CutoffSpec(double delta) : delta_(delta) {
  if (!(delta > 0) || !(delta <= max_delta)) {
    std::ostringstream os;
    os << "cutoff width delta = " << delta << " must lie in (0, " << max_delta << "]";
    throw InvalidArgument(os.str());
  }
}

// 1 - s(t) written as s(1 - t) so the tail is exactly zero and never negative
double CutoffSpec::chi(double x) const { return smoothstep((3 * delta_ / 8 - x) / (delta_ / 8)); }

double CutoffSpec::chi_derivative(double x) const {
  const double w = delta_ / 8;
  return -smoothstep_d1((x - delta_ / 4) / w) / w;
}

double CutoffSpec::chi_second_derivative(double x) const {
  const double w = delta_ / 8;
  return -smoothstep_d2((x - delta_ / 4) / w) / (w * w);
}

double CutoffSpec::chi0(double x) const { return smoothstep((3 * delta_ / 4 - x) / (delta_ / 4)); }

double CutoffSpec::max_first_derivative() const { return 1.875 / (delta_ / 8); }

double CutoffSpec::max_second_derivative() const {
  const double w = delta_ / 8;
  return 60 * std::sqrt(3.0) / 18 / (w * w);
}

double delta_lower_bound(int N, double eps, double lambda) {
  if (!(eps > 0 && eps < 1)) throw InvalidArgument("eps must lie in (0, 1)");
  if (!(lambda > 0)) throw InvalidArgument("decay rate must be positive");
  return -(4 / lambda) * (N + 1) * eps * std::log(eps);
}

double auto_delta(int N, double eps, std::optional<double> lambda) {
  if (!lambda) return CutoffSpec::max_delta;
  const double bound = delta_lower_bound(N, eps, *lambda);
  if (bound >= CutoffSpec::max_delta) {
    std::ostringstream os;
    os << "no admissible cutoff: the lower bound -(4/lambda)(N+1) eps log eps = " << bound
       << " exceeds " << CutoffSpec::max_delta << "; reduce eps or N";
    throw InvalidArgument(os.str());
  }
  return std::min(1.5 * bound, CutoffSpec::max_delta);
}

InflowData BoundaryData::inflow() const {
  const Index nd = psi_left.size();
  return {psi_left, ScalarField::Constant(nd, std::pow(T_right, 4))};
}

bool BoundaryData::left_well_prepared(double tol) const {
  const Index nd = psi_left.size();
  const double target = std::pow(T_left, 4);
  for (Index j = nd / 2; j < nd; ++j) {
    if (std::abs(psi_left[j] - target) > tol) return false;
  }
  return true;
}

std::optional<double> AsymptoticExpansion::decay_rate(int N) const {
  std::optional<double> lambda;
  for (int k = 0; k <= N && k < static_cast<int>(layers.size()); ++k) {
    const auto& r = layers[static_cast<std::size_t>(k)].decay_rate;
    if (r && (!lambda || *r < *lambda)) lambda = *r;
  }
  return lambda;
}

LayerSources layer_sources(const AsymptoticExpansion& e, int k) {
  if (k < 1 || e.order() < k - 1 || static_cast<int>(e.layers.size()) < k) {
    throw InvalidArgument("layer sources of order k need orders 0..k-1");
  }
  const auto ku = static_cast<std::size_t>(k);
  const MilneSolution& base = e.layers[0];
  const Mesh& mesh = base.mesh;
  const Quadrature& quad = e.quad;
  const Index n = mesh.size();
  const double t_far = base.temperature_far;
  const double t_far3 = t_far * t_far * t_far;

  const InteriorExpansion::Point p0 = e.interior.at(0.0);
  std::vector<TaylorPoly> taylor;
  for (int j = 0; j < k; ++j) taylor.push_back(build_taylor(e.interior, j));
  // P_k - P_k(0) only involves T_0..T_{k-1}.
  std::vector<double> pk(ku + 1, 0.0);
  for (int l = 1; l <= k; ++l) pk[static_cast<std::size_t>(l)] = p0.temperature[ku - static_cast<std::size_t>(l)][l];
  const TaylorPoly pk_shift(pk);

  ScalarField s(n);
  std::vector<double> x(ku), p(ku);
  for (Index i = 0; i < n; ++i) {
    const double eta = mesh[i];
    for (std::size_t j = 0; j < ku; ++j) {
      p[j] = taylor[j](eta);
      x[j] = e.layers[j].temperature[i] - e.layers[j].temperature_far + p[j];
    }
    const double t0 = base.temperature[i];
    s[i] = 4 * (t0 * t0 * t0 - t_far3) * pk_shift(eta) +
           quartic_lower(std::span<const double>(x), k) - quartic_lower(std::span<const double>(p), k);
  }

  LayerSources src;
  src.s1 = quad.moment_weights().sum() * s;
  src.s2 = s.replicate(1, quad.size());
  const ScalarField slope = e.interior.intensity_slope(p0, k - 1);
  std::vector<double> t_wall(ku);
  for (std::size_t j = 0; j < ku; ++j) t_wall[j] = e.interior.temperature(static_cast<int>(j), 0.0);
  const double e_wall = quartic_lower(std::span<const double>(t_wall), k);
  src.inflow = ScalarField::Zero(quad.size());
  for (Index j = quad.per_half(); j < quad.size(); ++j) src.inflow[j] = quad.mu(j) * slope[j] - e_wall;
  return src;
}

AsymptoticExpansion build_expansion(const BoundaryData& data, int N, const Quadrature& quad,
                                    const ExpansionOptions& opts) {
  if (N < 0) throw InvalidArgument("expansion order must be nonnegative");
  if (N > kMaxExpansionOrder) {
    throw UnsupportedOrder("expansion order " + std::to_string(N) + " exceeds the supported maximum " +
                           std::to_string(kMaxExpansionOrder));
  }
  if (data.psi_left.size() != quad.size()) {
    throw InvalidArgument("boundary intensity size does not match quadrature");
  }
  if (!(data.T_left >= 0) || !(data.T_right >= 0)) {
    throw InvalidArgument("boundary temperatures must be nonnegative");
  }
  AsymptoticExpansion e{data, quad, InteriorExpansion(quad), {}};
  const Mesh mesh = build_half_space_mesh(opts.mesh);
  e.layers.push_back(solve_nonlinear_milne(data.T_left, data.psi_left, mesh, quad, opts.milne));
  e.interior.append_order(e.layers[0].temperature_far, data.T_right);

  MilneOptions linear_opts = opts.milne;
  linear_opts.relaxation = std::min(opts.milne.relaxation, 2 * e.layers[0].relaxation);
  const ScalarField weight = 4 * e.layers[0].temperature.array().cube().matrix();
  for (int k = 1; k <= N; ++k) {
    const LayerSources src = layer_sources(e, k);
    e.layers.push_back(solve_linear_milne(k, weight, src, mesh, quad, linear_opts));
    e.interior.append_order(e.layers.back().temperature_far, 0.0);
  }
  return e;
}

namespace {

double far_intensity(const AsymptoticExpansion& e, int k) {
  const double t0 = e.layers[0].temperature_far;
  if (k == 0) return std::pow(t0, 4);
  return 4 * t0 * t0 * t0 * e.layers[static_cast<std::size_t>(k)].temperature_far;
}

// Layer correctors of orders 0..m at x, accumulated with powers of eps.
void add_layers(const CompositeApproximation& a, double x, int m, double& t, ScalarField* psi) {
  const double chi = a.cutoff.chi(x);
  if (chi == 0.0) return;
  const double eta = x / a.eps;
  double w = 1;
  for (int k = 0; k <= m; ++k, w *= a.eps) {
    const MilneSolution& layer = a.expansion->layers[static_cast<std::size_t>(k)];
    t += w * chi * (layer.temperature_at(eta) - layer.temperature_far);
    if (psi) *psi += (w * chi) * (layer.intensity_at(eta).array() - far_intensity(*a.expansion, k)).matrix();
  }
}

void check_truncation(const CompositeApproximation& a, int m) {
  if (m < 0 || m > a.order) throw InvalidArgument("truncation order exceeds the composite order");
}

}  // namespace

double CompositeApproximation::temperature_at(double x, int m, bool with_layer) const {
  check_truncation(*this, m);
  double t = 0, w = 1;
  for (int k = 0; k <= m; ++k, w *= eps) t += w * expansion->interior.temperature(k, x);
  if (with_layer) add_layers(*this, x, m, t, nullptr);
  return t;
}

ScalarField CompositeApproximation::intensity_at(double x, int m, bool with_layer) const {
  check_truncation(*this, m);
  const InteriorExpansion::Point p = expansion->interior.at(x);
  ScalarField psi = ScalarField::Zero(quad().size());
  double w = 1;
  for (int k = 0; k <= m; ++k, w *= eps) psi += w * expansion->interior.intensity(p, k);
  double t = 0;
  if (with_layer) add_layers(*this, x, m, t, &psi);
  return psi;
}

ScalarField CompositeApproximation::truncated_temperature(int m, bool with_layer) const {
  check_truncation(*this, m);
  ScalarField t = ScalarField::Zero(mesh.size());
  double w = 1;
  for (int k = 0; k <= m; ++k, w *= eps) {
    t += w * interior_temperature[static_cast<std::size_t>(k)];
    if (with_layer) t += w * layer_temperature[static_cast<std::size_t>(k)];
  }
  return t;
}

KineticField CompositeApproximation::truncated_intensity(int m, bool with_layer) const {
  check_truncation(*this, m);
  KineticField psi = KineticField::Zero(mesh.size(), quad().size());
  double w = 1;
  for (int k = 0; k <= m; ++k, w *= eps) {
    psi += w * interior_intensity[static_cast<std::size_t>(k)];
    if (with_layer) psi += w * layer_intensity[static_cast<std::size_t>(k)];
  }
  return psi;
}

CompositeApproximation assemble_composite(int N, double eps,
                                          std::shared_ptr<const AsymptoticExpansion> expansion,
                                          const CutoffSpec& cutoff, const Mesh& mesh) {
  if (!expansion) throw InvalidArgument("composite needs an expansion");
  if (N < 0 || N > expansion->order() || N >= static_cast<int>(expansion->layers.size())) {
    throw InvalidArgument("composite order exceeds the available expansion order");
  }
  if (!(eps > 0 && eps < 1)) throw InvalidArgument("eps must lie in (0, 1)");
  if (std::abs(mesh.length() - expansion->interior.length()) > 1e-12) {
    throw InvalidArgument("composite mesh must span the slab");
  }
  if (const auto lambda = expansion->decay_rate(N)) {
    const double bound = delta_lower_bound(N, eps, *lambda);
    if (!(cutoff.delta() > bound)) {
      std::ostringstream os;
      os << "cutoff width delta = " << cutoff.delta()
         << " violates delta > -(4/lambda)(N+1) eps log eps = " << bound << " (lambda = " << *lambda
         << ")";
      throw InvalidArgument(os.str());
    }
  }

  CompositeApproximation a;
  a.order = N;
  a.eps = eps;
  a.cutoff = cutoff;
  a.expansion = std::move(expansion);
  a.mesh = mesh;
  const Index n = mesh.size();
  const Index nd = a.quad().size();
  const InteriorExpansion& interior = a.expansion->interior;
  for (int k = 0; k <= N; ++k) {
    a.interior_temperature.push_back(ScalarField(n));
    a.interior_intensity.push_back(KineticField(n, nd));
    a.layer_temperature.push_back(ScalarField::Zero(n));
    a.layer_intensity.push_back(KineticField::Zero(n, nd));
  }
  for (Index i = 0; i < n; ++i) {
    const double x = mesh[i];
    const InteriorExpansion::Point p = interior.at(x);
    const double chi = cutoff.chi(x);
    for (int k = 0; k <= N; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      a.interior_temperature[ku][i] = interior.temperature(k, x);
      a.interior_intensity[ku].row(i) = interior.intensity(p, k).transpose();
      if (chi == 0.0) continue;
      const MilneSolution& layer = a.expansion->layers[ku];
      const double eta = x / eps;
      a.layer_temperature[ku][i] = chi * (layer.temperature_at(eta) - layer.temperature_far);
      a.layer_intensity[ku].row(i) =
          chi * (layer.intensity_at(eta).array() - far_intensity(*a.expansion, k)).transpose();
    }
  }
  a.temperature = a.truncated_temperature(N, true);
  a.intensity = a.truncated_intensity(N, true);
  return a;
}

Mesh residual_grid(const CompositeApproximation& a, double h_bulk) {
  const Mesh& layer_mesh = a.expansion->layers[0].mesh;
  std::vector<double> x;
  for (Index i = 0; i < layer_mesh.size(); ++i) {
    const double xi = a.eps * layer_mesh[i];
    if (xi >= 1) break;
    x.push_back(xi);
  }
  const double last = x.back();
  if (last < 1) {
    const double gap = 1 - last;
    const double prev_h = x.size() > 1 ? last - x[x.size() - 2] : gap;
    const double h = std::max(std::min(h_bulk, gap), prev_h);
    const auto cells = static_cast<Index>(std::ceil(gap / h - 1e-9));
    if (cells <= 1 && gap < 0.5 * prev_h && x.size() > 1) {
      x.back() = 1;
    } else {
      for (Index c = 1; c <= cells; ++c) x.push_back(last + gap * double(c) / double(cells));
    }
  }
  x.back() = 1;
  return Mesh(Eigen::Map<ScalarField>(x.data(), static_cast<Index>(x.size())));
}

ResidualReport evaluate_residuals(const CompositeApproximation& a, double h_bulk) {
  ResidualReport rep;
  rep.grid = residual_grid(a, h_bulk);
  const Mesh& g = rep.grid;
  const Index n = g.size();
  const Quadrature& quad = a.quad();
  const Index nd = quad.size();
  ScalarField t(n);
  KineticField psi(n, nd);
  for (Index i = 0; i < n; ++i) {
    t[i] = a.temperature_at(g[i], a.order, true);
    psi.row(i) = a.intensity_at(g[i], a.order, true).transpose();
  }
  const double m0 = quad.moment_weights().sum();
  const double e2 = a.eps * a.eps;
  const SecondDifference<double> d2(g);
  const ScalarField t4 = t.array().square().square().matrix();
  const ScalarField mom = moment(psi, quad);
  rep.r1 = ScalarField::Zero(n);
  rep.r2 = KineticField::Zero(n, nd);
  for (Index i = 1; i + 1 < n; ++i) {
    rep.r1[i] = e2 * (d2.lower[i] * t[i - 1] + d2.diag[i] * t[i] + d2.upper[i] * t[i + 1]) + mom[i] -
                m0 * t4[i];
    const double hl = g.width(i - 1), hr = g.width(i);
    for (Index j = 0; j < nd; ++j) {
      const double d1 = (hl * hl * (psi(i + 1, j) - psi(i, j)) + hr * hr * (psi(i, j) - psi(i - 1, j))) /
                        (hl * hr * (hl + hr));
      rep.r2(i, j) = a.eps * quad.mu(j) * d1 + psi(i, j) - t4[i];
    }
  }
  const ScalarField w = g.trapezoid_weights();
  rep.r1_sup = rep.r1.cwiseAbs().maxCoeff();
  rep.r2_sup = rep.r2.cwiseAbs().maxCoeff();
  rep.r1_l2 = std::sqrt(w.dot(rep.r1.cwiseAbs2()));
  rep.r2_l2 = std::sqrt(w.dot(rep.r2.cwiseAbs2() * quad.moment_weights()));
  return rep;
}

}  // namespace raddiff
