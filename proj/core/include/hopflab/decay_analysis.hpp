#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hopflab/convex_geometry.hpp"
#include "hopflab/fd_solver.hpp"
#include "hopflab/modulus.hpp"

namespace hopflab {

struct HopfExperiment {
  std::string profile = "log1";
  std::string op = "laplace";
  double R0 = 1.0;
  int K = 4;
  double h = 1.0 / 512;
  std::string bc = "linear";
  double ladder_base = 2.0;  // r_k = base^{-k} R0
  int trace_window = 4;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

enum class HopfVerdict { HopfHolds, HopfDegenerates, Inconclusive };

std::string_view to_string(HopfVerdict v);

struct DecayLevel {
  int k = 0;
  double r = 0.0;
  double osc = 0.0;
  double ratio = 0.0;  // osc_{k+1} / osc_k, NaN on the last level or when osc_k = 0
  double delta = 0.0;  // delta(r_k / 2)
  double product = 1.0;
  double trace = 0.0;  // u(0, r_k) / r_k at the grid line nearest r_k
};

/// One decay pair: r = r_k / 2, outer cylinder P_{2r} = P_{r_k}, inner P_{r/4}.
struct DecayPair {
  int k = 0;
  double r = 0.0;
  double osc_outer = 0.0;
  double osc_inner = 0.0;
  double delta = 0.0;  // delta(r)
  bool usable = false;
  double kappa = 0.0;  // (1 - osc_inner / osc_outer) / delta(r)
};

struct DecayReport {
  HopfExperiment config;
  std::vector<DecayLevel> levels;
  std::vector<DecayPair> pairs;
  double kappa = 0.0;

  // Base-2 trace ladder R0 2^{-m}, m >= 1, snapped to grid lines, down to 2h.
  std::vector<double> trace_heights;
  std::vector<double> trace;
  double trace_variation = 0.0;  // (max - min) / max over the window
  double trace_drop = 0.0;       // 1 - last / first over the window
  double trace_exponent = 0.0;   // slope of log trace against log height over the window
  bool trace_strictly_decreasing = false;
  std::string trend;  // "stable", "decreasing" or "mixed"

  DiniClass dini = DiniClass::Inconclusive;
  HopfVerdict verdict = HopfVerdict::Inconclusive;

  std::size_t unknowns = 0;
  int iterations = 0;
  double residual = 0.0;
  std::string method;
};

/// Ladder radii after validating the experiment (base^{-K} R0 >= 8h).
std::vector<double> ladder_radii(const HopfExperiment& cfg);

/// Dini class of the boundary modulus of F; the flat profile is Dini.
DiniClass profile_dini_class(const BoundaryProfile& F);

DecayReport run_experiment(const HopfExperiment& cfg);

/// Largest kappa in [0, 0.999] satisfying the decay inequality on the first
/// `count` usable pairs (all usable pairs when count < 0); 0 without pairs.
double fit_kappa(const std::vector<DecayPair>& pairs, int count = -1);

/// Usable pairs violating osc_inner <= (1 - kappa delta) osc_outer, skipping
/// the first `skip` usable pairs.
std::vector<int> kappa_violations(const std::vector<DecayPair>& pairs, double kappa, int skip = 0);

struct ProductBound {
  double kappa = 0.0;
  double R0 = 0.0;
  int K = 0;
  std::vector<double> radii;    // r_j = 8^{-j} R0
  std::vector<double> delta;    // delta(r_j / 2)
  std::vector<double> partial;  // prod_{i <= j} (1 - kappa delta_i)
  double delta_sum = 0.0;
  double integral = 0.0;  // int_{r_K/2}^{r_0/2} delta(r)/r dr
  double ratio = 0.0;     // delta_sum / integral
  double band_lo = 0.0;
  double band_hi = 0.0;
  bool within_band = false;
  double tail_sum_bound = 0.0;  // bound on sum_{j > K} delta(r_j / 2)
  double limit_lower = 0.0;     // partial_K (1 - kappa tail_sum_bound)_+
};

/// tail(s) returns int_0^s delta(r)/r dr (possibly infinite); without it the
/// tail fields are NaN.
ProductBound product_bound(const std::function<double(double)>& delta_fn, double kappa, double R0, int K,
                           const std::function<double(double)>& tail = {});

ProductBound product_bound(const BoundaryProfile& F, double kappa, int K);

struct GrowthOptions {
  double N2 = 1.0;
  double N3 = 1.0;
  double M1 = 1.0;
  int kmax = 200;
  double cauchy_tol = 1e-9;
  bool strict = true;  // raise Divergence when the Cauchy check fails
};

struct GrowthRecursion {
  int k0 = 0;
  double lambda = 0.0;
  std::vector<double> gamma;  // gamma_1 .. gamma_kmax
  std::vector<double> Pi;     // Pi_k = prod_{j <= k} (1 + gamma_j)
  std::vector<double> M;      // M_1 .. M_{kmax+1}
  double cauchy_gap = 0.0;    // |Pi_kmax - Pi_{kmax-1}|
  bool converged = false;
  double series_sum = 0.0;    // sum_{k >= 1} sigma(2^{-k} rho_ratio)
  double dini_value = 0.0;    // J_sigma(rho_ratio)
  double series_ratio = 0.0;
  double c4_estimate = 0.0;   // max_k M_k / (M_1 + F J_sigma)
};

/// Smallest k0 >= 1 with gamma_1 <= 1/2; AdjustK0 when none exists.
int minimal_k0(const Modulus& sigma, double B, double vartheta, double rho_ratio, double N2 = 1.0);

GrowthRecursion growth_recursion_bound(const Modulus& sigma, double B, double Fr, double vartheta, int k0,
                                       double rho_ratio, const GrowthOptions& opts = {});

struct ContrastRow {
  std::string profile;
  DiniClass dini = DiniClass::Inconclusive;
  std::string trend;
  double kappa = 0.0;
  double product_K = 1.0;
  HopfVerdict verdict = HopfVerdict::Inconclusive;
  DecayReport report;
};

struct ContrastTable {
  std::vector<ContrastRow> rows;
  double shared_kappa = 0.1;
  int shared_K = 40;
  bool consistent = false;  // every NonDini product_K below every Dini product_K
};

ContrastTable contrast_suite(const std::vector<std::string>& profiles, const std::string& op,
                             const HopfExperiment& shared, double shared_kappa = 0.1, int shared_K = 40);

void write_decay_csv(std::ostream& out, const DecayReport& r);
std::string decay_summary(const DecayReport& r);
void write_contrast_csv(std::ostream& out, const ContrastTable& t);

}  // namespace hopflab
