#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hopflab {

enum class DiniClass { Dini, NonDini, Inconclusive };

std::string_view to_string(DiniClass c);

/// A modulus of continuity sigma on [0, 1] normalized by sigma(1) = 1.
///
/// Besides sigma(t) the object exposes sigma(exp(-y)) for y >= 0, which is
/// the natural variable for integrals of sigma(t)/t near t = 0.
class Modulus {
 public:
  enum class Kind { ClosedForm, Tabulated };

  /// "linear", "power:<alpha>" (0 < alpha <= 1), "log1", "log2", "const".
  static Modulus preset(std::string_view id);

  /// Samples with strictly increasing t in (0, 1], last t equal to 1.
  /// sigma is rescaled so that the last sample equals 1.
  static Modulus tabulated(std::vector<double> t, std::vector<double> sigma, std::string id = "tabulated");

  /// Two-column CSV (t, sigma), optional header. A row with t = 0 is allowed
  /// and must carry sigma = 0.
  static Modulus from_csv(std::istream& in, std::string id = "csv");

  double operator()(double t) const;
  double at_log(double y) const;

  Kind kind() const { return kind_; }
  const std::string& id() const { return id_; }

  /// Closed-form Dini integral J(s), when the preset has one.
  std::optional<double> closed_form_integral(double s) const;
  bool has_closed_form_integral() const { return static_cast<bool>(closed_j_); }

  /// Analytic Dini class stored for presets.
  std::optional<DiniClass> analytic_class() const { return analytic_; }

  const std::vector<double>& sample_t() const;
  const std::vector<double>& sample_sigma() const;

 private:
  struct Table;
  Modulus() = default;

  std::string id_;
  Kind kind_ = Kind::ClosedForm;
  std::function<double(double)> eval_;
  std::function<double(double)> eval_log_;
  std::function<double(double)> closed_j_;
  std::optional<DiniClass> analytic_;
  std::shared_ptr<const Table> table_;
};

struct ModulusCheck {
  bool endpoints_ok = true;
  bool monotone = true;
  bool ratio_nonincreasing = true;
  double worst_monotone_defect = 0.0;
  double worst_ratio_defect = 0.0;
  bool ok() const { return endpoints_ok && monotone && ratio_nonincreasing; }
};

/// Checks the class invariants on a log-spaced grid of grid_size points.
ModulusCheck check_invariants(const Modulus& sigma, std::size_t grid_size = 400);

/// Log-spaced grid t_i = t_min^{(N-1-i)/(N-1)}, i = 0..N-1, ending at 1.
std::vector<double> log_grid(std::size_t n, double t_min = std::ldexp(1.0, -40));

/// sigma~(t) = t * sup_{tau in [t,1]} sigma(tau)/tau on log_grid(grid_size).
Modulus regularize(const std::function<double(double)>& sigma_raw, std::size_t grid_size,
                   std::string id = "regularized");

struct DiniIntegralOptions {
  double rel_tol = 1e-10;
  std::size_t max_intervals = 4096;
  int algebraic_switch = 32;
};

struct DiniIntegral {
  double value = 0.0;
  double quadrature = 0.0;
  std::optional<double> closed_form;
  std::size_t intervals = 0;
};

/// J(s) = integral_0^s sigma(tau)/tau dtau.
DiniIntegral dini_integral(const Modulus& sigma, double s, const DiniIntegralOptions& opts = {});

struct DiniVerdict {
  DiniClass verdict = DiniClass::Inconclusive;
  DiniClass numeric_verdict = DiniClass::Inconclusive;
  bool analytic_override = false;
  struct Partial {
    double lower;
    double value;
  };
  std::vector<Partial> partial_integrals;
  std::vector<double> increments;
  double growth_exponent_estimate = 0.0;
  double max_recent_ratio = 0.0;
  double min_recent_ratio = 0.0;
};

DiniVerdict dini_classify(const Modulus& sigma, int depth = 40);

struct RelationReport {
  double sigma_t = 0.0;
  double j_t = 0.0;
  bool relation_1 = false;
  double slack_1 = 0.0;
  bool relation_sigma = false;
  double slack_sigma = 0.0;
  bool relation_j = false;
  double slack_j = 0.0;
  bool all() const { return relation_1 && relation_sigma && relation_j; }
};

RelationReport verify_relations(const Modulus& sigma, double t, double t0, double tol = 1e-9);

}  // namespace hopflab
