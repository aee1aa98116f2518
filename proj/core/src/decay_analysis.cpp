#include "hopflab/decay_analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "hopflab/elliptic_operator.hpp"
#include "hopflab/error.hpp"
#include "hopflab/quadrature.hpp"

namespace hopflab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStableVariation = 0.05;
constexpr double kKappaCap = 0.999;

double snap(double y, double h) { return h * static_cast<double>(std::lround(y / h)); }

void validate(const HopfExperiment& cfg) {
  if (!(cfg.R0 > 0.0) || !std::isfinite(cfg.R0)) fail(ErrorCode::ConfigError, "R0 must be positive");
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) fail(ErrorCode::ConfigError, "h must be positive");
  if (!(cfg.ladder_base > 1.0)) fail(ErrorCode::ConfigError, "ladder base must exceed 1");
  if (cfg.K < 0) fail(ErrorCode::ConfigError, "K must be nonnegative");
  if (cfg.trace_window < 2) fail(ErrorCode::ConfigError, "trace window must hold at least 2 heights");
  const double smallest = cfg.R0 * std::pow(cfg.ladder_base, -cfg.K);
  if (smallest < 8.0 * cfg.h * (1.0 - 1e-12)) {
    fail(ErrorCode::ConfigError,
         fmt::format("smallest cylinder {:.6g} holds fewer than 8 cells of h = {:.6g} (need base^-K R0 >= 8h)",
                     smallest, cfg.h));
  }
  if (cfg.K < 2) fail(ErrorCode::ScaleStarved, fmt::format("K = {} gives fewer than 3 dyadic levels", cfg.K));
}

}  // namespace

std::string_view to_string(HopfVerdict v) {
  switch (v) {
    case HopfVerdict::HopfHolds: return "HopfHolds";
    case HopfVerdict::HopfDegenerates: return "HopfDegenerates";
    case HopfVerdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

std::vector<double> ladder_radii(const HopfExperiment& cfg) {
  validate(cfg);
  std::vector<double> r(static_cast<std::size_t>(cfg.K) + 1);
  for (int k = 0; k <= cfg.K; ++k) r[static_cast<std::size_t>(k)] = cfg.R0 * std::pow(cfg.ladder_base, -k);
  return r;
}

DiniClass profile_dini_class(const BoundaryProfile& F) {
  const auto mod = F.delta_modulus();
  if (!mod) return DiniClass::Dini;
  return dini_classify(*mod, 40).verdict;
}

double fit_kappa(const std::vector<DecayPair>& pairs, int count) {
  double kappa = kKappaCap;
  int used = 0;
  for (const auto& p : pairs) {
    if (!p.usable) continue;
    if (count >= 0 && used >= count) break;
    kappa = std::min(kappa, p.kappa);
    ++used;
  }
  if (used == 0) return 0.0;
  return std::clamp(kappa, 0.0, kKappaCap);
}

std::vector<int> kappa_violations(const std::vector<DecayPair>& pairs, double kappa, int skip) {
  std::vector<int> bad;
  int seen = 0;
  for (const auto& p : pairs) {
    if (!p.usable) continue;
    if (seen++ < skip) continue;
    const double bound = (1.0 - kappa * p.delta) * p.osc_outer;
    if (p.osc_inner > bound * (1.0 + 1e-12) + 1e-15) bad.push_back(p.k);
  }
  return bad;
}

DecayReport run_experiment(const HopfExperiment& cfg) {
  const auto radii = ladder_radii(cfg);
  const auto F = BoundaryProfile::preset(cfg.profile, cfg.R0, 2);
  const auto op = EllipticOperator::preset(cfg.op, 2);
  const auto bc = boundary_data(cfg.bc, F);

  const auto dom = discrete_domain(F, GridSpec{cfg.h, cfg.R0, cfg.R0, 0.0});
  const auto sys = discretize(op, dom, bc);
  const auto sol = solve(sys, cfg.solver);

  DecayReport rep;
  rep.config = cfg;
  rep.unknowns = dom->unknowns();
  rep.iterations = sol.iterations;
  rep.residual = sol.residual_norm;
  rep.method = sol.method;

  const auto K = static_cast<std::size_t>(cfg.K);
  std::vector<double> level_heights;
  for (double r : radii) level_heights.push_back(std::max(snap(r, cfg.h), 2.0 * cfg.h));
  const auto level_trace = hopf_trace(sol, level_heights);

  double product = 1.0;
  for (std::size_t k = 0; k <= K; ++k) {
    DecayLevel lv;
    lv.k = static_cast<int>(k);
    lv.r = radii[k];
    lv.osc = oscillation(sol, lv.r);
    lv.delta = delta(F, lv.r / 2.0);
    lv.trace = level_trace[k];
    rep.levels.push_back(lv);
  }
  for (std::size_t k = 0; k <= K; ++k) {
    auto& lv = rep.levels[k];
    lv.ratio = (k < K && lv.osc > 0.0) ? rep.levels[k + 1].osc / lv.osc : kNaN;
  }

  for (std::size_t k = 1; k <= K; ++k) {
    DecayPair p;
    p.k = static_cast<int>(k);
    p.r = radii[k] / 2.0;
    p.osc_outer = rep.levels[k].osc;
    p.delta = delta(F, p.r);
    const double inner_r = p.r / 4.0;
    if (inner_r >= 4.0 * cfg.h * (1.0 - 1e-12)) {
      p.osc_inner = oscillation(sol, inner_r);
      p.usable = p.osc_outer > 0.0 && p.delta > 0.0;
      if (p.usable) p.kappa = (1.0 - p.osc_inner / p.osc_outer) / p.delta;
    } else {
      p.osc_inner = kNaN;
    }
    rep.pairs.push_back(p);
  }
  rep.kappa = fit_kappa(rep.pairs);
  for (auto& lv : rep.levels) {
    product *= 1.0 - rep.kappa * lv.delta;
    lv.product = product;
  }

  for (int m = 1;; ++m) {
    const double y = snap(cfg.R0 * std::ldexp(1.0, -m), cfg.h);
    if (y < 2.0 * cfg.h * (1.0 - 1e-12)) break;
    if (!rep.trace_heights.empty() && std::abs(y - rep.trace_heights.back()) < 0.5 * cfg.h) continue;
    rep.trace_heights.push_back(y);
  }
  rep.trace = hopf_trace(sol, rep.trace_heights);

  const std::size_t w = std::min(rep.trace.size(), static_cast<std::size_t>(cfg.trace_window));
  if (w < 2) fail(ErrorCode::ScaleStarved, "fewer than 2 trace heights above 2h");
  const std::size_t first = rep.trace.size() - w;
  double lo = kInf, hi = -kInf;
  bool decreasing = true;
  for (std::size_t i = first; i < rep.trace.size(); ++i) {
    lo = std::min(lo, rep.trace[i]);
    hi = std::max(hi, rep.trace[i]);
    if (i > first && !(rep.trace[i] < rep.trace[i - 1])) decreasing = false;
  }
  rep.trace_variation = hi > 0.0 ? (hi - lo) / hi : 0.0;
  rep.trace_drop = rep.trace[first] > 0.0 ? 1.0 - rep.trace.back() / rep.trace[first] : 0.0;
  rep.trace_strictly_decreasing = decreasing;
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    bool positive = true;
    for (std::size_t i = first; i < rep.trace.size(); ++i) {
      if (!(rep.trace[i] > 0.0)) positive = false;
      const double x = std::log(rep.trace_heights[i]);
      const double y = positive ? std::log(rep.trace[i]) : 0.0;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(w);
    rep.trace_exponent = positive ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : kNaN;
  }
  if (rep.trace_variation < kStableVariation) {
    rep.trend = "stable";
  } else if (decreasing) {
    rep.trend = "decreasing";
  } else {
    rep.trend = "mixed";
  }

  rep.dini = profile_dini_class(F);
  if (decreasing && rep.trace_variation > 0.0 && rep.dini == DiniClass::NonDini) {
    rep.verdict = HopfVerdict::HopfDegenerates;
  } else if (rep.trace_variation < kStableVariation && rep.dini == DiniClass::Dini) {
    rep.verdict = HopfVerdict::HopfHolds;
  } else {
    rep.verdict = HopfVerdict::Inconclusive;
  }
  return rep;
}

ProductBound product_bound(const std::function<double(double)>& delta_fn, double kappa, double R0, int K,
                           const std::function<double(double)>& tail) {
  if (!(kappa > 0.0 && kappa < 1.0)) fail(ErrorCode::DomainError, "kappa must lie in (0, 1)");
  if (!(R0 > 0.0)) fail(ErrorCode::DomainError, "R0 must be positive");
  if (K < 0) fail(ErrorCode::DomainError, "K must be nonnegative");

  ProductBound pb;
  pb.kappa = kappa;
  pb.R0 = R0;
  pb.K = K;
  const double ln8 = std::log(8.0);
  double prod = 1.0;
  for (int j = 0; j <= K; ++j) {
    const double r = R0 * std::pow(8.0, -j);
    const double d = delta_fn(r / 2.0);
    if (!(d >= 0.0) || !std::isfinite(d)) fail(ErrorCode::DomainError, fmt::format("delta({}) is not finite", r / 2));
    if (kappa * d >= 1.0) {
      fail(ErrorCode::DomainError, fmt::format("kappa delta({:.6g}) = {:.6g} >= 1", r / 2.0, kappa * d));
    }
    prod *= 1.0 - kappa * d;
    pb.radii.push_back(r);
    pb.delta.push_back(d);
    pb.partial.push_back(prod);
    pb.delta_sum += d;
  }

  const double a = std::log(pb.radii.back() / 2.0);
  const double b = std::log(R0 / 2.0);
  if (b > a) {
    const auto res = quad::adaptive_gk15([&](double y) { return delta_fn(std::exp(y)); }, a, b, 1e-10, 1e-14);
    pb.integral = res.value;
  }
  pb.band_lo = 0.5 / ln8;
  pb.band_hi = 2.0 * ln8;
  if (pb.integral > 0.0) {
    pb.ratio = pb.delta_sum / pb.integral;
    pb.within_band = pb.ratio >= pb.band_lo && pb.ratio <= pb.band_hi;
  } else {
    pb.ratio = kNaN;
    pb.within_band = pb.delta_sum == 0.0 || K == 0;
  }

  if (tail) {
    // For nondecreasing delta, delta(r_j/2) <= (1/ln 8) int_{r_{j+1}/2}^{r_j/2} delta(r)/r dr.
    const double t = tail(pb.radii.back() / 2.0);
    pb.tail_sum_bound = std::isfinite(t) ? t / ln8 : kInf;
    pb.limit_lower = std::isfinite(pb.tail_sum_bound) ? prod * std::max(0.0, 1.0 - kappa * pb.tail_sum_bound) : 0.0;
  } else {
    pb.tail_sum_bound = kNaN;
    pb.limit_lower = kNaN;
  }
  return pb;
}

ProductBound product_bound(const BoundaryProfile& F, double kappa, int K) {
  const double R0 = F.R0();
  const auto mod = F.delta_modulus();
  const auto dfn = [&F](double r) { return delta(F, r); };
  if (!mod) {
    return product_bound(dfn, kappa, R0, K, [](double) { return 0.0; });
  }
  const double scale = delta(F, R0);
  const Modulus sigma = *mod;
  const auto tail = [sigma, scale, R0](double s) {
    if (sigma.analytic_class() == DiniClass::NonDini) return kInf;
    try {
      return scale * dini_integral(sigma, std::min(1.0, s / R0)).value;
    } catch (const Error&) {
      return kInf;
    }
  };
  return product_bound(dfn, kappa, R0, K, tail);
}

namespace {

struct RecursionTerms {
  double A;       // 1 / (1 - vartheta/2)
  double lambda;  // -ln(1 - vartheta/2)
  double half;    // vartheta / 2
};

RecursionTerms terms(double vartheta) {
  if (!(vartheta > 0.0 && vartheta < 1.0)) fail(ErrorCode::DomainError, "vartheta must lie in (0, 1)");
  const double half = vartheta / 2.0;
  return {1.0 / (1.0 - half), -std::log1p(-half), half};
}

// sigma(2^{-k} rho_ratio)
double sigma_dyadic(const Modulus& sigma, int k, double rho_ratio) {
  return sigma.at_log(static_cast<double>(k) * std::log(2.0) - std::log(rho_ratio));
}

double gamma_k(const RecursionTerms& t, const Modulus& sigma, double B, double N2, int k, int k0, double rho_ratio) {
  const double zeta_ratio = static_cast<double>(k + 1 + k0) / static_cast<double>(k + k0);  // zeta_k / zeta_{k+1}
  return t.A * 2.0 * zeta_ratio *
         (std::exp(-t.lambda * static_cast<double>(k + k0) / 2.0) + N2 * B * sigma_dyadic(sigma, k, rho_ratio) / t.half);
}

void check_inputs(double B, double rho_ratio, double N2) {
  if (!(B >= 0.0) || !std::isfinite(B)) fail(ErrorCode::DomainError, "B must be nonnegative");
  if (!(N2 >= 0.0)) fail(ErrorCode::DomainError, "N2 must be nonnegative");
  if (!(rho_ratio > 0.0 && rho_ratio <= 1.0)) fail(ErrorCode::DomainError, "rho_ratio must lie in (0, 1]");
}

}  // namespace

int minimal_k0(const Modulus& sigma, double B, double vartheta, double rho_ratio, double N2) {
  check_inputs(B, rho_ratio, N2);
  const auto t = terms(vartheta);
  const double floor = 2.0 * t.A * N2 * B * sigma_dyadic(sigma, 1, rho_ratio) / t.half;
  if (floor >= 0.5) {
    fail(ErrorCode::AdjustK0,
         fmt::format("no admissible k0: the sigma term alone gives gamma_1 >= {:.6g}; rho_ratio must shrink", floor));
  }
  for (int k0 = 1; k0 < 100000000; ++k0) {
    if (gamma_k(t, sigma, B, N2, 1, k0, rho_ratio) <= 0.5) return k0;
  }
  fail(ErrorCode::AdjustK0, "no admissible k0 below 1e8");
}

GrowthRecursion growth_recursion_bound(const Modulus& sigma, double B, double Fr, double vartheta, int k0,
                                       double rho_ratio, const GrowthOptions& opts) {
  check_inputs(B, rho_ratio, opts.N2);
  if (!(Fr >= 0.0) || !std::isfinite(Fr)) fail(ErrorCode::DomainError, "F must be nonnegative");
  if (opts.kmax < 2) fail(ErrorCode::DomainError, "kmax must be at least 2");
  const auto t = terms(vartheta);
  if (k0 < 0 || gamma_k(t, sigma, B, opts.N2, 1, k0, rho_ratio) > 0.5) {
    const int need = minimal_k0(sigma, B, vartheta, rho_ratio, opts.N2);
    fail(ErrorCode::AdjustK0, fmt::format("gamma_1 > 1/2 at k0 = {}; minimal admissible k0 = {}", k0, need));
  }

  GrowthRecursion g;
  g.k0 = k0;
  g.lambda = t.lambda;
  double pi = 1.0;
  double M = opts.M1;
  double Mmax = M;
  g.M.push_back(M);
  for (int k = 1; k <= opts.kmax; ++k) {
    const double gk = gamma_k(t, sigma, B, opts.N2, k, k0, rho_ratio);
    const double zeta_ratio = static_cast<double>(k + 1 + k0) / static_cast<double>(k + k0);
    const double source = opts.N3 * Fr * sigma_dyadic(sigma, k, rho_ratio) / ((1.0 - t.half) * t.half) * 2.0 * zeta_ratio;
    pi *= 1.0 + gk;
    M = M * (1.0 + gk) + source;
    Mmax = std::max(Mmax, M);
    g.gamma.push_back(gk);
    g.Pi.push_back(pi);
    g.M.push_back(M);
  }
  g.cauchy_gap = std::abs(g.Pi.back() - g.Pi[g.Pi.size() - 2]);
  g.converged = g.cauchy_gap <= opts.cauchy_tol && std::isfinite(pi);
  if (!g.converged && opts.strict) {
    fail(ErrorCode::Divergence,
         fmt::format("Pi fails the Cauchy check at k = {}: |Pi_k - Pi_(k-1)| = {:.3e} > {:.1e} (Pi = {:.6g})",
                     opts.kmax, g.cauchy_gap, opts.cauchy_tol, pi));
  }

  // Direct sum to 2^{-900} rho_ratio, then the integral tail of sigma(2^{-t} x) over t > 900.5.
  constexpr int kDirect = 900;
  double sum = 0.0;
  for (int k = 1; k <= kDirect; ++k) sum += sigma_dyadic(sigma, k, rho_ratio);
  const double s_tail = rho_ratio * std::ldexp(1.0, -kDirect) / std::sqrt(2.0);
  double tail = 0.0;
  try {
    tail = dini_integral(sigma, s_tail).value / std::log(2.0);
  } catch (const Error&) {
    tail = kInf;
  }
  g.series_sum = sum + tail;
  try {
    g.dini_value = dini_integral(sigma, rho_ratio).value;
  } catch (const Error&) {
    g.dini_value = kInf;
  }
  g.series_ratio = std::isfinite(g.dini_value) && g.dini_value > 0.0 ? g.series_sum / g.dini_value : kNaN;
  const double denom = opts.M1 + Fr * g.dini_value;
  g.c4_estimate = denom > 0.0 && std::isfinite(denom) ? Mmax / denom : kNaN;
  return g;
}

ContrastTable contrast_suite(const std::vector<std::string>& profiles, const std::string& op,
                             const HopfExperiment& shared, double shared_kappa, int shared_K) {
  std::vector<DiniClass> classes;
  bool any_dini = false, any_nondini = false;
  for (const auto& id : profiles) {
    const auto F = BoundaryProfile::preset(id, shared.R0, 2);
    classes.push_back(profile_dini_class(F));
    any_dini = any_dini || classes.back() == DiniClass::Dini;
    any_nondini = any_nondini || classes.back() == DiniClass::NonDini;
  }
  if (!any_nondini) fail(ErrorCode::MissingNonDini, "contrast suite needs at least one non-Dini profile");
  if (!any_dini) fail(ErrorCode::MissingNonDini, "contrast suite needs at least one Dini profile");

  ContrastTable t;
  t.shared_kappa = shared_kappa;
  t.shared_K = shared_K;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    HopfExperiment cfg = shared;
    cfg.profile = profiles[i];
    cfg.op = op;
    ContrastRow row;
    row.profile = profiles[i];
    row.report = run_experiment(cfg);
    row.dini = row.report.dini;
    row.trend = row.report.trend;
    row.kappa = row.report.kappa;
    row.verdict = row.report.verdict;
    const auto F = BoundaryProfile::preset(profiles[i], shared.R0, 2);
    row.product_K = product_bound(F, shared_kappa, shared_K).partial.back();
    t.rows.push_back(std::move(row));
  }
  t.consistent = true;
  for (const auto& a : t.rows) {
    if (a.dini != DiniClass::NonDini) continue;
    for (const auto& b : t.rows) {
      if (b.dini == DiniClass::Dini && !(a.product_K < b.product_K)) t.consistent = false;
    }
  }
  return t;
}

void write_decay_csv(std::ostream& out, const DecayReport& r) {
  out << "k,r_k,osc_k,ratio_k,delta_k,product_k,h_k\n";
  for (const auto& lv : r.levels) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", lv.k, lv.r, lv.osc, lv.ratio, lv.delta,
                       lv.product, lv.trace);
  }
}

std::string decay_summary(const DecayReport& r) {
  std::ostringstream s;
  const auto& c = r.config;
  s << "verdict: " << to_string(r.verdict) << '\n';
  s << "dini: " << to_string(r.dini) << '\n';
  s << "trend: " << r.trend << '\n';
  s << fmt::format("kappa: {:.17g}\n", r.kappa);
  s << fmt::format("trace_variation: {:.17g}\n", r.trace_variation);
  s << fmt::format("trace_drop: {:.17g}\n", r.trace_drop);
  s << fmt::format("trace_exponent: {:.17g}\n", r.trace_exponent);
  s << "trace_strictly_decreasing: " << (r.trace_strictly_decreasing ? "true" : "false") << '\n';
  s << "trace_heights:";
  for (double y : r.trace_heights) s << fmt::format(" {:.17g}", y);
  s << "\ntrace:";
  for (double v : r.trace) s << fmt::format(" {:.17g}", v);
  s << '\n';
  s << "profile: " << c.profile << '\n';
  s << "op: " << c.op << '\n';
  s << "bc: " << c.bc << '\n';
  s << fmt::format("R0: {:.17g}\n", c.R0);
  s << "K: " << c.K << '\n';
  s << fmt::format("h: {:.17g}\n", c.h);
  s << fmt::format("ladder_base: {:.17g}\n", c.ladder_base);
  s << "trace_window: " << c.trace_window << '\n';
  s << "seed: " << c.seed << '\n';
  s << fmt::format("solver_tol: {:.17g}\n", c.solver.tol);
  s << "solver_max_iter: " << c.solver.max_iter << '\n';
  s << "solver_direct_below: " << c.solver.direct_below << '\n';
  s << "unknowns: " << r.unknowns << '\n';
  s << "method: " << r.method << '\n';
  s << "iterations: " << r.iterations << '\n';
  s << fmt::format("residual: {:.3e}\n", r.residual);
  return s.str();
}

void write_contrast_csv(std::ostream& out, const ContrastTable& t) {
  out << "profile,dini,trend,kappa,product_K,verdict\n";
  for (const auto& row : t.rows) {
    out << fmt::format("{},{},{},{:.17g},{:.17g},{}\n", row.profile, to_string(row.dini), row.trend, row.kappa,
                       row.product_K, to_string(row.verdict));
  }
}

}  // namespace hopflab
