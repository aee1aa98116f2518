#include "hopflab/barriers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "hopflab/error.hpp"

namespace hopflab {

namespace {

constexpr double kDomainTol = 1e-12;

void require_spec(const BarrierSpec& spec) {
  if (!(spec.amplitude >= 0.0)) fail(ErrorCode::DomainError, "barrier amplitude must be nonnegative");
  if (!(spec.radius > 0.0)) fail(ErrorCode::DomainError, "barrier radius must be positive");
  if (spec.center.size() < 1) fail(ErrorCode::DomainError, "barrier center is empty");
  if (spec.kind == BarrierKind::CylinderQuadratic) {
    if (!(spec.gamma > 0.0)) fail(ErrorCode::DomainError, "cylinder aspect gamma must be positive");
    return;
  }
  if (!(spec.s > 0.0)) fail(ErrorCode::DomainError, "barrier exponent s must be positive");
  if (!(spec.outer_radius() > spec.inner_radius())) {
    fail(ErrorCode::DomainError, "annulus outer radius must exceed the inner radius rho0/8");
  }
}

std::string vec_text(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index k = 0; k < v.size(); ++k) out += fmt::format("{}{:.17g}", k ? ", " : "", v[k]);
  return out + "]";
}

std::string mat_text(const Eigen::MatrixXd& m) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) out += (r ? ", " : "") + vec_text(m.row(r).transpose());
  return out + "]";
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::VectorXd v(n);
  do {
    for (int k = 0; k < n; ++k) v[k] = N(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

}  // namespace

BarrierSpec BarrierSpec::cylinder(double k, double rho, double nu, int n) {
  BarrierSpec s;
  s.kind = BarrierKind::CylinderQuadratic;
  s.amplitude = k;
  s.radius = rho;
  s.gamma = aspect_gamma(nu, n);
  s.center = Eigen::VectorXd::Zero(n);
  return s;
}

BarrierSpec BarrierSpec::radial(double k1, double rho0, double s, Eigen::VectorXd z) {
  BarrierSpec b;
  b.kind = BarrierKind::RadialAnnulus;
  b.amplitude = k1;
  b.radius = rho0;
  b.s = s;
  b.center = std::move(z);
  return b;
}

BarrierSpec BarrierSpec::capped(double mu_k, double rho0, double s, Eigen::VectorXd z_tilde) {
  BarrierSpec b;
  b.kind = BarrierKind::CappedRadial;
  b.amplitude = mu_k;
  b.radius = rho0;
  b.s = s;
  b.center = std::move(z_tilde);
  return b;
}

int BarrierSpec::dim() const { return static_cast<int>(center.size()); }

double BarrierSpec::inner_radius() const { return kind == BarrierKind::CylinderQuadratic ? 0.0 : radius / 8.0; }

double BarrierSpec::outer_radius() const {
  switch (kind) {
    case BarrierKind::CylinderQuadratic:
      return radius;
    case BarrierKind::RadialAnnulus:
      return radius;
    case BarrierKind::CappedRadial:
      return center[center.size() - 1];
  }
  return radius;
}

double aspect_gamma(double nu, int n) {
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::DomainError, fmt::format("nu = {} outside (0, 1]", nu));
  if (n < 2) fail(ErrorCode::DomainError, "dimension must be at least 2");
  return nu / std::sqrt(static_cast<double>(n - 1));
}

BarrierValue barrier_eval(const BarrierSpec& spec, const Eigen::VectorXd& x) {
  require_spec(spec);
  const int n = spec.dim();
  if (x.size() != n) fail(ErrorCode::DomainError, "point dimension differs from the barrier");
  Eigen::VectorXd y = x;
  if (spec.frame) {
    if (spec.frame->x_star.size() != n) fail(ErrorCode::FrameMismatch, "frame dimension differs from the barrier");
    y = spec.frame->to_y(x);
  }
  y -= spec.center;

  BarrierValue out;
  const double k = spec.amplitude;
  if (spec.kind == BarrierKind::CylinderQuadratic) {
    const double rho = spec.radius;
    const double gr = spec.gamma * rho;
    const double lateral = y.head(n - 1).norm();
    const double yn = y[n - 1];
    if (lateral > rho * (1.0 + kDomainTol) || yn < -kDomainTol * gr || yn > gr * (1.0 + kDomainTol)) {
      fail(ErrorCode::OutOfDomain, fmt::format("point {} outside the cylinder rho = {}, height = {}", vec_text(y),
                                               rho, gr));
    }
    const double c = 1.0 - yn / gr;
    out.value = k * (c * c - lateral * lateral / (rho * rho));
    out.gradient = -2.0 * k / (rho * rho) * y;
    out.gradient[n - 1] = -2.0 * k * c / gr;
    out.hessian = Eigen::MatrixXd::Identity(n, n) * (-2.0 * k / (rho * rho));
    out.hessian(n - 1, n - 1) = 2.0 * k / (gr * gr);
    return out;
  }

  const double s = spec.s;
  const double rin = spec.inner_radius();
  const double rout = spec.outer_radius();
  const double d = y.norm();
  if (d < rin * (1.0 - kDomainTol) || d > rout * (1.0 + kDomainTol)) {
    fail(ErrorCode::OutOfDomain, fmt::format("|x - z| = {} outside the annulus [{}, {}]", d, rin, rout));
  }
  const double scale = k / (std::pow(rin, -s) - std::pow(rout, -s));
  const double ds = std::pow(d, -s);
  out.value = scale * (ds - std::pow(rout, -s));
  const double g = -s * ds / (d * d);
  out.gradient = scale * g * y;
  const Eigen::VectorXd xh = y / d;
  out.hessian = scale * g * (Eigen::MatrixXd::Identity(n, n) - (s + 2.0) * xh * xh.transpose());
  return out;
}

Eigen::MatrixXd haar_orthogonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) g(r, c) = N(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    if (R(k, k) < 0.0) q.col(k) *= -1.0;
  }
  return q;
}

std::vector<Eigen::MatrixXd> admissible_matrices(double nu, int n, int samples, std::uint64_t seed) {
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::DomainError, fmt::format("nu = {} outside (0, 1]", nu));
  if (n < 2) fail(ErrorCode::DomainError, "dimension must be at least 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(nu, 1.0 / nu);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(std::max(samples, 0)) + 2 * n + 2);
  for (int m = 0; m < samples; ++m) {
    const Eigen::MatrixXd q = haar_orthogonal(n, rng());
    Eigen::VectorXd lam(n);
    for (int k = 0; k < n; ++k) lam[k] = U(rng);
    Eigen::MatrixXd a = q * lam.asDiagonal() * q.transpose();
    out.push_back(0.5 * (a + a.transpose()));
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, 1.0 / nu);
    lo[i] = nu;
    out.push_back(lo.asDiagonal());
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, nu);
    hi[i] = 1.0 / nu;
    out.push_back(hi.asDiagonal());
  }
  out.push_back(Eigen::MatrixXd::Identity(n, n) * nu);
  out.push_back(Eigen::MatrixXd::Identity(n, n) / nu);
  return out;
}

CylinderCertificate cylinder_barrier_certificate(double nu, int n, int samples, std::uint64_t seed,
                                                 double gamma_scale) {
  CylinderCertificate rep;
  rep.nu = nu;
  rep.n = n;
  rep.samples = samples;
  rep.seed = seed;
  rep.gamma_scale = gamma_scale;
  BarrierSpec psi = BarrierSpec::cylinder(1.0, 1.0, nu, n);
  psi.gamma *= gamma_scale;
  rep.gamma = psi.gamma;

  const auto mats = admissible_matrices(nu, n, samples, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto sample_point = [&] {
    Eigen::VectorXd y(n);
    Eigen::VectorXd lat = random_unit(rng, n - 1) * std::pow(U(rng), 1.0 / (n - 1));
    y.head(n - 1) = lat;
    y[n - 1] = U(rng) * psi.gamma;
    return y;
  };

  rep.bracket_max = -std::numeric_limits<double>::infinity();
  for (const auto& a : mats) {
    const Eigen::VectorXd y = sample_point();
    const BarrierValue v = barrier_eval(psi, y);
    // -a : D^2 psi, in units of 2k / rho^2.
    const double bracket = -0.5 * (a.cwiseProduct(v.hessian)).sum();
    if (bracket > rep.bracket_max) {
      rep.bracket_max = bracket;
      rep.worst_matrix = a;
      rep.worst_point = y;
    }
    rep.n1 = std::max(rep.n1, v.gradient.norm());
  }
  for (int i = 0; i < n - 1; ++i) {
    Eigen::VectorXd corner = Eigen::VectorXd::Zero(n);
    corner[i] = 1.0;
    rep.n1 = std::max(rep.n1, barrier_eval(psi, corner).gradient.norm());
  }
  rep.pass = rep.bracket_max <= 1e-12;
  return rep;
}

RadialCertificate radial_exponent_certificate(double s, double nu, int n, int samples, std::uint64_t seed) {
  if (!(s > 0.0)) fail(ErrorCode::DomainError, fmt::format("radial exponent s = {} must be positive", s));
  RadialCertificate rep;
  rep.s = s;
  rep.nu = nu;
  rep.n = n;
  rep.samples = samples;
  rep.seed = seed;
  rep.s_star_bound = n / (nu * nu) - 2.0;
  rep.s_star_exact = (n - 1) / (nu * nu) - 1.0;
  rep.margin_bound = (s + 2.0) * nu - n / nu;
  rep.margin_exact = (s + 1.0) * nu - (n - 1) / nu;

  const auto mats = admissible_matrices(nu, n, samples, seed);
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
  rep.min_form = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Eigen::MatrixXd& a, const Eigen::VectorXd& xh) {
    const double form = (s + 2.0) * xh.dot(a * xh) - a.trace();
    if (form < rep.min_form) {
      rep.min_form = form;
      rep.worst_matrix = a;
      rep.worst_direction = xh;
    }
  };
  for (const auto& a : mats) {
    const Eigen::VectorXd xh = random_unit(rng, n);
    consider(a, xh);
    // Radial eigenvalue nu, transverse 1/nu.
    const Eigen::MatrixXd aligned =
        nu * xh * xh.transpose() + (Eigen::MatrixXd::Identity(n, n) - xh * xh.transpose()) / nu;
    consider(aligned, xh);
  }
  for (int i = 0; i < n; ++i) {
    for (const auto& a : mats) consider(a, Eigen::VectorXd::Unit(n, i));
  }
  rep.pass = rep.min_form >= -1e-12 * (s + 2.0 + n) / nu;
  rep.has_counterexample = !rep.pass;
  return rep;
}

ChainGeometry chain_geometry(double nu, int n, double r, const ExtremalFrame* frame) {
  if (!(r > 0.0)) fail(ErrorCode::DomainError, "chain radius r must be positive");
  ChainGeometry g;
  g.r = r;
  g.gamma = aspect_gamma(nu, n);
  g.rho0 = g.gamma * r / 8.0;
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n);
  y0[0] = 0.5 * r;
  y0[n - 1] = 0.25 * g.gamma * r;
  if (frame) {
    if (frame->x_star.size() != n) fail(ErrorCode::FrameMismatch, "frame dimension differs from n");
    g.z0 = frame->to_x(y0);
  } else {
    g.z0 = y0;
    g.z0[0] += r;
  }
  g.z_tilde = Eigen::VectorXd::Zero(n);
  g.z_tilde[n - 1] = 0.25 * r + g.rho0 / 8.0;
  g.distance = (g.z0 - g.z_tilde).norm();
  g.n_min = static_cast<int>(std::ceil(4.0 * g.distance / (3.0 * g.rho0) - 1e-12));
  g.n_max = static_cast<int>(std::floor(2.0 * g.distance / g.rho0 + 1e-12));
  return g;
}

ChainReport growth_chain(double v_lower, double nu, int n, double r, int links, double drift,
                         const ExtremalFrame* frame) {
  if (!(v_lower >= 0.0)) fail(ErrorCode::DomainError, "chain start value must be nonnegative");
  if (!(drift >= 0.0)) fail(ErrorCode::DomainError, "drift term must be nonnegative");
  ChainReport rep;
  rep.geometry = chain_geometry(nu, n, r, frame);
  const auto& g = rep.geometry;
  if (links < g.n_min || links > g.n_max) {
    fail(ErrorCode::DomainError,
         fmt::format("chain length {} outside the admissible range [{}, {}]", links, g.n_min, g.n_max));
  }
  rep.links = links;
  rep.s = n / (nu * nu);
  rep.drift = drift;
  const auto point = [&](int l) -> Eigen::VectorXd {
    return g.z0 - (static_cast<double>(l) / links) * (g.z0 - g.z_tilde);
  };

  rep.k.push_back(v_lower);
  rep.c1_tilde = 1.0;
  for (int l = 0; l < links; ++l) {
    const Eigen::VectorXd c = point(l);
    const Eigen::VectorXd next = point(l + 1);
    const BarrierSpec w = BarrierSpec::radial(1.0, g.rho0, rep.s, c);
    const Eigen::VectorXd u = (next - c).normalized();
    const double rb = g.rho0 / 8.0;
    double theta = barrier_eval(w, next + rb * u).value;
    for (int i = 0; i < n; ++i) {
      for (double sg : {-1.0, 1.0}) {
        theta = std::min(theta, barrier_eval(w, next + sg * rb * Eigen::VectorXd::Unit(n, i)).value);
      }
    }
    rep.theta.push_back(theta);
    rep.c1_tilde *= 0.5 * theta;
    const double prev = rep.k.back();
    const double nextk = std::max(0.0, prev * 0.5 * theta - drift);
    rep.k.push_back(nextk);
    if (!rep.broken_at && drift > 0.0 && nextk == 0.0) rep.broken_at = l + 1;
  }
  rep.closed_form = rep.c1_tilde * v_lower;
  return rep;
}

double fit_n6(double nu, int n, double r, int samples, std::uint64_t seed) {
  const double gamma = aspect_gamma(nu, n);
  const double rho0 = gamma * r / 8.0;
  Eigen::VectorXd zt = Eigen::VectorXd::Zero(n);
  zt[n - 1] = 0.25 * r + rho0 / 8.0;
  const BarrierSpec W = BarrierSpec::capped(1.0, rho0, n / (nu * nu), zt);
  const double rin = W.inner_radius();
  const double rout = W.outer_radius();

  double best = 0.0;
  const auto probe = [&](const Eigen::VectorXd& x) {
    if (x[n - 1] <= 1e-12 * r) return;
    best = std::max(best, barrier_eval(W, x).value * r / (4.0 * x[n - 1]));
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int m = 0; m < samples; ++m) {
    const Eigen::VectorXd u = random_unit(rng, n);
    probe(zt + (rin + U(rng) * (rout - rin)) * u);
  }
  const Eigen::VectorXd down = -Eigen::VectorXd::Unit(n, n - 1);
  for (int m = 0; m <= 64; ++m) probe(zt + (rin + (rout - rin) * m / 64.0) * down);
  return best;
}

double n6_constant(double nu, int n) {
  static std::mutex mu;
  static std::map<std::pair<double, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(nu, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const double v = fit_n6(nu, n, 1.0, 20000, 0);
  cache.emplace(key, v);
  return v;
}

AleksandrovRun aleksandrov_run(const EllipticOperator& op, const BoundaryProfile& F, const GridSpec& grid,
                               const ScalarField2D& f, std::string label, const SolverOptions& opts) {
  const auto dom = discrete_domain(F, grid);
  const BoundaryData zero = boundary_data("zero", F);
  const auto sol = solve(discretize(op, dom, zero, f), opts);
  const auto& m = dom->mask;
  AleksandrovRun run;
  run.label = std::move(label);
  double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1, lo2 = lo1, hi2 = -lo1;
  double sum = 0.0;
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.columns(); ++i) {
      const std::size_t node = m.node(i, j);
      const double v = sol.nodal[node];
      if (std::isnan(v)) continue;
      lo1 = std::min(lo1, m.x1(i));
      hi1 = std::max(hi1, m.x1(i));
      lo2 = std::min(lo2, m.x2(j));
      hi2 = std::max(hi2, m.x2(j));
      run.sup_u = std::max(run.sup_u, v);
      if (dom->unknown_of_node[node] >= 0 && v > 0.0) {
        const double fp = std::max(0.0, f(m.x1(i), m.x2(j)));
        sum += fp * fp;
      }
    }
  }
  run.diam = std::hypot(hi1 - lo1, hi2 - lo2);
  run.f_norm = std::sqrt(sum) * m.h();
  return run;
}

AleksandrovFit aleksandrov_constant_fit(const std::vector<AleksandrovRun>& runs) {
  if (runs.size() < 5) fail(ErrorCode::DomainError, fmt::format("need at least 5 runs, got {}", runs.size()));
  AleksandrovFit fit;
  bool any = false;
  for (const auto& r : runs) {
    const bool use = r.f_norm > 0.0 && r.diam > 0.0 && std::isfinite(r.sup_u);
    fit.used.push_back(use);
    fit.ratio.push_back(use ? r.sup_u / (r.diam * r.f_norm) : std::numeric_limits<double>::quiet_NaN());
    if (use) {
      fit.n0 = std::max(fit.n0, fit.ratio.back());
      any = true;
    }
  }
  if (!any) fail(ErrorCode::DomainError, "every run has a vanishing right-hand side");
  for (std::size_t k = 0; k < runs.size(); ++k) {
    fit.slack.push_back(fit.used[k] ? fit.n0 - fit.ratio[k] : std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

std::string to_text(const CylinderCertificate& c) {
  std::ostringstream o;
  o << "certificate: cylinder\n";
  o << fmt::format("nu: {}\nn: {}\nsamples: {}\nseed: {}\n", c.nu, c.n, c.samples, c.seed);
  o << fmt::format("gamma: {:.17g}\ngamma_scale: {}\n", c.gamma, c.gamma_scale);
  o << fmt::format("bracket_max: {:.6e}\n", c.bracket_max);
  o << "worst_matrix: " << mat_text(c.worst_matrix) << "\n";
  o << "worst_point: " << vec_text(c.worst_point) << "\n";
  o << fmt::format("n1: {:.12g}\n", c.n1);
  o << "pass: " << (c.pass ? "true" : "false") << "\n";
  return o.str();
}

std::string to_text(const RadialCertificate& c) {
  std::ostringstream o;
  o << "certificate: radial\n";
  o << fmt::format("s: {}\nnu: {}\nn: {}\nsamples: {}\nseed: {}\n", c.s, c.nu, c.n, c.samples, c.seed);
  o << fmt::format("min_form: {:.12g}\n", c.min_form);
  o << fmt::format("s_star_bound: {:.12g}\ns_star_exact: {:.12g}\n", c.s_star_bound, c.s_star_exact);
  o << fmt::format("margin_bound: {:.12g}\nmargin_exact: {:.12g}\n", c.margin_bound, c.margin_exact);
  o << "worst_matrix: " << mat_text(c.worst_matrix) << "\n";
  o << "worst_direction: " << vec_text(c.worst_direction) << "\n";
  o << "counterexample: " << (c.has_counterexample ? "true" : "false") << "\n";
  o << "pass: " << (c.pass ? "true" : "false") << "\n";
  return o.str();
}

std::string to_text(const ChainReport& c) {
  std::ostringstream o;
  o << "chain: growth\n";
  o << fmt::format("r: {}\ngamma: {:.17g}\nrho0: {:.17g}\n", c.geometry.r, c.geometry.gamma, c.geometry.rho0);
  o << fmt::format("links: {}\nadmissible_links: [{}, {}]\n", c.links, c.geometry.n_min, c.geometry.n_max);
  o << fmt::format("s: {}\ndrift: {}\n", c.s, c.drift);
  o << fmt::format("theta: {:.12g}\nc1_tilde: {:.12e}\n", c.theta.empty() ? 0.0 : c.theta.front(), c.c1_tilde);
  o << fmt::format("k_start: {:.12g}\nk_end: {:.12e}\nclosed_form: {:.12e}\n", c.k.front(), c.k.back(),
                   c.closed_form);
  o << "broken_at: " << (c.broken_at ? std::to_string(*c.broken_at) : std::string("none")) << "\n";
  return o.str();
}

}  // namespace hopflab
