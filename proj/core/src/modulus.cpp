#include "hopflab/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hopflab/error.hpp"
#include "hopflab/quadrature.hpp"
#include "text_util.hpp"

namespace hopflab {

std::string_view to_string(DiniClass c) {
  switch (c) {
    case DiniClass::Dini: return "Dini";
    case DiniClass::NonDini: return "NonDini";
    case DiniClass::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

struct Modulus::Table {
  std::vector<double> t;
  std::vector<double> sigma;
  std::vector<double> log_t;
  std::vector<double> log_sigma;
  double head_slope = 1.0;

  double eval(double x) const {
    if (!(x > 0.0)) return 0.0;
    if (x >= t.back()) return sigma.back();
    if (x < t.front()) return extrapolate(std::log(x));
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    if (t[i] == x) return sigma[i];
    return interpolate(i, std::log(x), x);
  }

  double eval_log(double y) const {
    const double lx = -y;
    if (lx < log_t.front()) return extrapolate(lx);
    return eval(std::exp(lx));
  }

  double extrapolate(double lx) const {
    if (sigma.front() <= 0.0) return 0.0;
    return std::exp(log_sigma.front() + head_slope * (lx - log_t.front()));
  }

  double interpolate(std::size_t i, double lx, double x) const {
    if (sigma[i] > 0.0 && sigma[i + 1] > 0.0) {
      const double w = (lx - log_t[i]) / (log_t[i + 1] - log_t[i]);
      return std::exp(log_sigma[i] + w * (log_sigma[i + 1] - log_sigma[i]));
    }
    const double w = (x - t[i]) / (t[i + 1] - t[i]);
    return sigma[i] + w * (sigma[i + 1] - sigma[i]);
  }
};

namespace {

Modulus::Kind kClosed = Modulus::Kind::ClosedForm;

}  // namespace

Modulus Modulus::preset(std::string_view id) {
  const auto [name, params] = text::split_preset(id);
  Modulus m;
  m.kind_ = kClosed;
  if (name == "linear" && params.empty()) {
    m.id_ = "linear";
    m.eval_ = [](double t) { return t <= 0.0 ? 0.0 : std::min(t, 1.0); };
    m.eval_log_ = [](double y) { return std::exp(-y); };
    m.closed_j_ = [](double s) { return s; };
    m.analytic_ = DiniClass::Dini;
  } else if (name == "power") {
    const auto alpha = text::parse_double(params);
    if (!alpha || !(*alpha > 0.0) || *alpha > 1.0) {
      fail(ErrorCode::DomainError, "power modulus exponent must lie in (0, 1]: '" + std::string(id) + "'");
    }
    const double a = *alpha;
    m.id_ = "power:" + std::string(params);
    m.eval_ = [a](double t) { return t <= 0.0 ? 0.0 : std::pow(std::min(t, 1.0), a); };
    m.eval_log_ = [a](double y) { return std::exp(-a * y); };
    m.closed_j_ = [a](double s) { return std::pow(s, a) / a; };
    m.analytic_ = DiniClass::Dini;
  } else if (name == "log1" && params.empty()) {
    m.id_ = "log1";
    m.eval_ = [](double t) { return t <= 0.0 ? 0.0 : 1.0 / (1.0 - std::log(std::min(t, 1.0))); };
    m.eval_log_ = [](double y) { return 1.0 / (1.0 + y); };
    m.analytic_ = DiniClass::NonDini;
  } else if (name == "log2" && params.empty()) {
    m.id_ = "log2";
    m.eval_ = [](double t) {
      if (t <= 0.0) return 0.0;
      const double l = 1.0 - std::log(std::min(t, 1.0));
      return 1.0 / (l * l);
    };
    m.eval_log_ = [](double y) { return 1.0 / ((1.0 + y) * (1.0 + y)); };
    m.closed_j_ = [](double s) { return 1.0 / (1.0 - std::log(s)); };
    m.analytic_ = DiniClass::Dini;
  } else if (name == "const" && params.empty()) {
    m.id_ = "const";
    m.eval_ = [](double t) { return t <= 0.0 ? 0.0 : 1.0; };
    m.eval_log_ = [](double) { return 1.0; };
    m.analytic_ = DiniClass::NonDini;
  } else {
    fail(ErrorCode::ConfigError, "unknown modulus preset '" + std::string(id) + "'");
  }
  return m;
}

Modulus Modulus::tabulated(std::vector<double> t, std::vector<double> sigma, std::string id) {
  if (t.size() != sigma.size() || t.size() < 2) {
    fail(ErrorCode::DomainError, "tabulated modulus needs at least two (t, sigma) samples");
  }
  if (!(t.front() > 0.0)) fail(ErrorCode::DomainError, "tabulated modulus samples must have t > 0");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) fail(ErrorCode::DomainError, "tabulated modulus t column must be strictly increasing");
  }
  if (std::abs(t.back() - 1.0) > 1e-12) fail(ErrorCode::NotNormalized, "last sample must be at t = 1");
  t.back() = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i])) fail(ErrorCode::DomainError, "sigma samples must be finite and nonnegative");
    if (i > 0 && sigma[i] < sigma[i - 1]) {
      fail(ErrorCode::NotMonotone, "sigma decreases between t = " + std::to_string(t[i - 1]) + " and t = " + std::to_string(t[i]));
    }
  }
  if (!(sigma.back() > 0.0)) fail(ErrorCode::NotNormalized, "sigma(1) must be positive");
  const double scale = sigma.back();
  if (scale != 1.0) {
    for (double& v : sigma) v /= scale;
    sigma.back() = 1.0;
  }

  // Enforce the nonincreasing ratio on the samples themselves.
  double suffix = sigma.back() / t.back();
  for (std::size_t i = sigma.size() - 1; i-- > 0;) {
    const double ratio = sigma[i] / t[i];
    if (ratio < suffix) {
      sigma[i] = t[i] * suffix;
    } else {
      suffix = ratio;
    }
  }

  auto table = std::make_shared<Table>();
  table->t = std::move(t);
  table->sigma = std::move(sigma);
  table->log_t.resize(table->t.size());
  table->log_sigma.resize(table->t.size());
  for (std::size_t i = 0; i < table->t.size(); ++i) {
    table->log_t[i] = std::log(table->t[i]);
    table->log_sigma[i] = table->sigma[i] > 0.0 ? std::log(table->sigma[i]) : -std::numeric_limits<double>::infinity();
  }
  if (table->sigma[0] > 0.0) {
    table->head_slope = (table->log_sigma[1] - table->log_sigma[0]) / (table->log_t[1] - table->log_t[0]);
  }

  Modulus m;
  m.id_ = std::move(id);
  m.kind_ = Kind::Tabulated;
  m.table_ = table;
  m.eval_ = [table](double x) { return table->eval(x); };
  m.eval_log_ = [table](double y) { return table->eval_log(y); };
  return m;
}

Modulus Modulus::from_csv(std::istream& in, std::string id) {
  const auto rows = text::read_numeric_rows(in);
  if (!rows) fail(ErrorCode::ConfigError, "modulus CSV contains a malformed row");
  std::vector<double> t;
  std::vector<double> sigma;
  for (const auto& row : *rows) {
    if (row.size() != 2) fail(ErrorCode::ConfigError, "modulus CSV rows must have two columns (t, sigma)");
    if (row[0] == 0.0) {
      if (row[1] != 0.0) fail(ErrorCode::NotNormalized, "sigma(0) must be 0");
      continue;
    }
    if (!sigma.empty() && row[1] < sigma.back()) {
      fail(ErrorCode::NotMonotone, "sigma decreases at t = " + std::to_string(row[0]));
    }
    t.push_back(row[0]);
    sigma.push_back(row[1]);
  }
  return tabulated(std::move(t), std::move(sigma), std::move(id));
}

double Modulus::operator()(double t) const { return eval_(t); }

double Modulus::at_log(double y) const { return eval_log_(y); }

std::optional<double> Modulus::closed_form_integral(double s) const {
  if (!closed_j_) return std::nullopt;
  return closed_j_(s);
}

const std::vector<double>& Modulus::sample_t() const {
  static const std::vector<double> empty;
  return table_ ? table_->t : empty;
}

const std::vector<double>& Modulus::sample_sigma() const {
  static const std::vector<double> empty;
  return table_ ? table_->sigma : empty;
}

std::vector<double> log_grid(std::size_t n, double t_min) {
  if (n < 2) fail(ErrorCode::DomainError, "log grid needs at least two points");
  std::vector<double> grid(n);
  const double lmin = std::log(t_min);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
    grid[i] = std::exp(w * lmin);
  }
  grid.back() = 1.0;
  return grid;
}

ModulusCheck check_invariants(const Modulus& sigma, std::size_t grid_size) {
  ModulusCheck check;
  check.endpoints_ok = std::abs(sigma(0.0)) <= 1e-12 && std::abs(sigma(1.0) - 1.0) <= 1e-12;
  const auto grid = log_grid(grid_size);
  double prev = sigma(grid[0]);
  double prev_ratio = prev / grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = sigma(grid[i]);
    const double ratio = v / grid[i];
    const double mono_defect = prev - v;
    if (mono_defect > 1e-14 * std::abs(prev)) {
      check.monotone = false;
      check.worst_monotone_defect = std::max(check.worst_monotone_defect, mono_defect);
    }
    const double ratio_defect = ratio - prev_ratio;
    if (ratio_defect > 1e-12 * std::abs(prev_ratio)) {
      check.ratio_nonincreasing = false;
      check.worst_ratio_defect = std::max(check.worst_ratio_defect, ratio_defect);
    }
    prev = v;
    prev_ratio = ratio;
  }
  return check;
}

Modulus regularize(const std::function<double(double)>& sigma_raw, std::size_t grid_size, std::string id) {
  if (std::abs(sigma_raw(0.0)) > 1e-12 || std::abs(sigma_raw(1.0) - 1.0) > 1e-12) {
    fail(ErrorCode::NotNormalized, "regularize requires sigma(0) = 0 and sigma(1) = 1");
  }
  const auto grid = log_grid(grid_size);
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = sigma_raw(grid[i]);
    if (i > 0 && values[i] < values[i - 1] - 1e-15 * std::abs(values[i - 1])) {
      fail(ErrorCode::NotMonotone, "sigma decreases near t = " + std::to_string(grid[i]));
    }
    values[i] = std::max(values[i], i > 0 ? values[i - 1] : 0.0);
  }
  values.back() = 1.0;
  double suffix = 1.0;
  for (std::size_t i = grid.size() - 1; i-- > 0;) {
    const double ratio = values[i] / grid[i];
    if (ratio < suffix) {
      values[i] = grid[i] * suffix;
    } else {
      suffix = ratio;
    }
  }
  return Modulus::tabulated(grid, std::move(values), std::move(id));
}

namespace {

double level_integral(const Modulus& sigma, double a, double b, double rel_tol) {
  const auto f = [&sigma](double y) { return sigma.at_log(y); };
  return quad::adaptive_gk15(f, a, b, rel_tol, 0.0, 12).value;
}

// Integral of at_log over [y0, infinity) by the map y = y0 + L u / (1 - u).
double mapped_tail(const Modulus& sigma, double y0, int points) {
  const auto& rule = quad::gauss_legendre(points);
  const double scale = 1.0 + y0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = 0.5 * (rule.nodes[i] + 1.0);
    const double om = 1.0 - u;
    const double y = y0 + scale * u / om;
    sum += 0.5 * rule.weights[i] * sigma.at_log(y) * scale / (om * om);
  }
  return sum;
}

}  // namespace

DiniIntegral dini_integral(const Modulus& sigma, double s, const DiniIntegralOptions& opts) {
  if (!(s > 0.0) || s > 1.0) fail(ErrorCode::DomainError, "dini_integral requires s in (0, 1]");
  const double step = std::numbers::ln2;
  const double y0 = -std::log(s);
  const double level_tol = std::max(opts.rel_tol * 1e-2, 1e-14);

  DiniIntegral result;
  result.closed_form = sigma.closed_form_integral(s);

  double sum = 0.0;
  double prev = 0.0;
  int stagnant = 0;
  bool done = false;
  for (std::size_t m = 0; m < opts.max_intervals && !done; ++m) {
    const double a = y0 + static_cast<double>(m) * step;
    const double b = a + step;
    const double c = level_integral(sigma, a, b, level_tol);
    sum += c;
    result.intervals = m + 1;
    if (c <= std::numeric_limits<double>::min() * 4) {
      done = true;
      break;
    }
    if (m > 0) {
      const double q = c / prev;
      stagnant = q >= 1.0 - 1e-3 ? stagnant + 1 : 0;
      if (stagnant >= 20) {
        fail(ErrorCode::Divergent, "dyadic contributions of sigma(t)/t do not decay for " + std::to_string(stagnant) +
                                       " consecutive intervals (ratio " + std::to_string(q) + ")");
      }
      if (q < 0.9) {
        const double tail = c * q / (1.0 - q);
        if (tail <= opts.rel_tol * sum) {
          sum += tail;
          done = true;
          break;
        }
      }
      if (static_cast<int>(m + 1) >= opts.algebraic_switch && q >= 0.9) {
        const double t32 = mapped_tail(sigma, b, 32);
        const double t64 = mapped_tail(sigma, b, 64);
        if (std::abs(t64 - t32) <= opts.rel_tol * (sum + t64)) {
          sum += t64;
          done = true;
          break;
        }
      }
    }
    prev = c;
  }
  if (!done) {
    fail(ErrorCode::Tolerance, "dini_integral did not reach rel_tol within " + std::to_string(opts.max_intervals) + " intervals");
  }
  result.quadrature = sum;
  result.value = result.closed_form ? *result.closed_form : sum;
  return result;
}

DiniVerdict dini_classify(const Modulus& sigma, int depth) {
  if (depth < 12) fail(ErrorCode::DomainError, "dini_classify needs depth >= 12");
  DiniVerdict verdict;
  const double step = std::numbers::ln2;
  double running = 0.0;
  for (int m = 1; m <= depth; ++m) {
    const double inc = level_integral(sigma, (m - 1) * step, m * step, 1e-13);
    verdict.increments.push_back(inc);
    running += inc;
    verdict.partial_integrals.push_back({std::ldexp(1.0, -m), running});
  }

  const int window = 10;
  const auto& inc = verdict.increments;
  double max_q = 0.0;
  double min_q = std::numeric_limits<double>::infinity();
  bool all_zero = true;
  for (int m = depth - window; m < depth; ++m) {
    if (inc[m] > 0.0) all_zero = false;
    const double q = inc[m - 1] > 0.0 ? inc[m] / inc[m - 1] : 0.0;
    max_q = std::max(max_q, q);
    min_q = std::min(min_q, q);
  }
  verdict.max_recent_ratio = max_q;
  verdict.min_recent_ratio = min_q;

  // Least-squares slope of ln I_m against ln m over the last window levels.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (int m = depth - window + 1; m <= depth; ++m) {
    if (!(inc[m - 1] > 0.0)) continue;
    const double x = std::log(static_cast<double>(m));
    const double y = std::log(inc[m - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count >= 2) {
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    verdict.growth_exponent_estimate = -slope;
  } else {
    verdict.growth_exponent_estimate = std::numeric_limits<double>::infinity();
  }

  DiniClass numeric = DiniClass::Inconclusive;
  if (all_zero || max_q < 0.9) {
    numeric = DiniClass::Dini;
  } else if (min_q > 0.99) {
    numeric = DiniClass::NonDini;
  } else if (verdict.growth_exponent_estimate < 1.2) {
    numeric = DiniClass::NonDini;
  } else if (verdict.growth_exponent_estimate > 1.5) {
    numeric = DiniClass::Dini;
  }
  verdict.numeric_verdict = numeric;
  verdict.verdict = numeric;
  if (const auto analytic = sigma.analytic_class()) {
    verdict.verdict = *analytic;
    verdict.analytic_override = *analytic != numeric;
  }
  return verdict;
}

RelationReport verify_relations(const Modulus& sigma, double t, double t0, double tol) {
  if (!(t > 0.0) || t0 > 1.0) fail(ErrorCode::DomainError, "verify_relations requires 0 < t <= t0 <= 1");
  if (t > t0) fail(ErrorCode::DomainError, "verify_relations requires t <= t0");
  const auto integral = [&sigma](double s) {
    try {
      return dini_integral(sigma, s).value;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Divergent) return std::numeric_limits<double>::infinity();
      throw;
    }
  };
  const double inf = std::numeric_limits<double>::infinity();
  RelationReport report;
  report.sigma_t = sigma(t);
  report.j_t = integral(t);
  report.slack_1 = report.j_t - report.sigma_t;
  report.relation_1 = report.slack_1 >= -tol * std::max(1.0, report.sigma_t);

  const double ratio = t / t0;
  report.slack_sigma = sigma(t) / t0 - sigma(ratio);
  report.relation_sigma = report.slack_sigma >= -tol * std::max(1.0, sigma(ratio));

  const double j_ratio = integral(ratio);
  if (std::isinf(report.j_t)) {
    report.slack_j = inf;
    report.relation_j = true;
  } else {
    report.slack_j = report.j_t / t0 - j_ratio;
    report.relation_j = report.slack_j >= -tol * std::max(1.0, j_ratio);
  }
  return report;
}

}  // namespace hopflab
