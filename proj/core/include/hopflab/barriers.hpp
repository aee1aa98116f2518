#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hopflab/convex_geometry.hpp"
#include "hopflab/elliptic_operator.hpp"
#include "hopflab/fd_solver.hpp"

namespace hopflab {

enum class BarrierKind { CylinderQuadratic, RadialAnnulus, CappedRadial };

/// Parameters of the three explicit barriers.
///
/// CylinderQuadratic: psi(y) = k [(1 - y_n/(gamma rho))^2 - |y'|^2/rho^2] on
/// the cylinder |y'| <= rho, 0 <= y_n <= gamma rho.
///
/// RadialAnnulus: w = k1 (|x-z|^{-s} - rho0^{-s}) / ((rho0/8)^{-s} - rho0^{-s})
/// on rho0/8 <= |x-z| <= rho0.
///
/// CappedRadial: the same profile with outer radius z_n (the last coordinate
/// of the center) in place of rho0.
struct BarrierSpec {
  BarrierKind kind = BarrierKind::CylinderQuadratic;
  double amplitude = 1.0;
  double radius = 1.0;
  double gamma = 1.0;
  double s = 2.0;
  Eigen::VectorXd center;
  std::optional<ExtremalFrame> frame;

  static BarrierSpec cylinder(double k, double rho, double nu, int n);
  static BarrierSpec radial(double k1, double rho0, double s, Eigen::VectorXd z);
  static BarrierSpec capped(double mu_k, double rho0, double s, Eigen::VectorXd z_tilde);

  int dim() const;
  double inner_radius() const;
  double outer_radius() const;
};

struct BarrierValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

BarrierValue barrier_eval(const BarrierSpec& spec, const Eigen::VectorXd& x);

/// gamma = nu / sqrt(n - 1).
double aspect_gamma(double nu, int n);

/// Admissible symmetric matrices with spectrum in [nu, 1/nu]: Haar-random
/// rotations of uniform spectra followed by the axis-aligned extremes.
std::vector<Eigen::MatrixXd> admissible_matrices(double nu, int n, int samples, std::uint64_t seed);

Eigen::MatrixXd haar_orthogonal(int n, std::uint64_t seed);

struct CylinderCertificate {
  double nu = 1.0;
  int n = 2;
  int samples = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double gamma_scale = 1.0;
  double bracket_max = 0.0;  // max of sum_{i<n} a_ii - a_nn / gamma^2
  Eigen::MatrixXd worst_matrix;
  Eigen::VectorXd worst_point;
  double n1 = 0.0;  // sup |D psi| rho / k over the cylinder
  bool pass = false;
};

CylinderCertificate cylinder_barrier_certificate(double nu, int n, int samples, std::uint64_t seed,
                                                 double gamma_scale = 1.0);

struct RadialCertificate {
  double s = 0.0;
  double nu = 1.0;
  int n = 2;
  int samples = 0;
  std::uint64_t seed = 0;
  double min_form = 0.0;  // min of (s+2) a xh.xh - tr a
  Eigen::MatrixXd worst_matrix;
  Eigen::VectorXd worst_direction;
  double s_star_bound = 0.0;  // n/nu^2 - 2
  double s_star_exact = 0.0;  // (n-1)/nu^2 - 1
  double margin_bound = 0.0;  // (s+2) nu - n/nu
  double margin_exact = 0.0;  // (s+1) nu - (n-1)/nu
  bool pass = false;
  bool has_counterexample = false;
};

RadialCertificate radial_exponent_certificate(double s, double nu, int n, int samples, std::uint64_t seed);

/// Chain geometry of the growth step: z0 at (r/2, 0, ..., gamma r/4) in the
/// extremal frame, z_tilde = (0', r/4 + rho0/8), rho0 = gamma r / 8.
struct ChainGeometry {
  double r = 0.0;
  double gamma = 0.0;
  double rho0 = 0.0;
  Eigen::VectorXd z0;
  Eigen::VectorXd z_tilde;
  double distance = 0.0;
  int n_min = 0;  // ceil(4 |z0 - z_tilde| / (3 rho0))
  int n_max = 0;  // floor(2 |z0 - z_tilde| / rho0)
};

/// Without a frame the flat frame at x* = (r, 0, ..., 0) is used.
ChainGeometry chain_geometry(double nu, int n, double r, const ExtremalFrame* frame = nullptr);

struct ChainReport {
  ChainGeometry geometry;
  int links = 0;
  double s = 0.0;
  double drift = 0.0;
  std::vector<double> k;      // k_0 .. k_N
  std::vector<double> theta;  // per link
  double c1_tilde = 0.0;      // product of theta_l / 2
  double closed_form = 0.0;   // c1_tilde * k_0
  std::optional<int> broken_at;
};

ChainReport growth_chain(double v_lower, double nu, int n, double r, int links, double drift = 0.0,
                         const ExtremalFrame* frame = nullptr);

/// sup of W(x) r / (4 mu k_tilde x_n) over sampled points of the closed
/// annulus, i.e. the constant with W <= mu N6 C1 omega delta(r) x_n when
/// k_tilde = C1 omega r delta(r) / 4.
double fit_n6(double nu, int n, double r, int samples, std::uint64_t seed);

/// Cached fit_n6 at r = 1 with 20000 samples and seed 0.
double n6_constant(double nu, int n);

struct AleksandrovRun {
  std::string label;
  double sup_u = 0.0;
  double diam = 0.0;
  double f_norm = 0.0;  // discrete L2 norm of f_+ over {u > 0}
};

AleksandrovRun aleksandrov_run(const EllipticOperator& op, const BoundaryProfile& F, const GridSpec& grid,
                               const ScalarField2D& f, std::string label, const SolverOptions& opts = {});

struct AleksandrovFit {
  double n0 = 0.0;
  std::vector<double> ratio;  // NaN for excluded runs
  std::vector<double> slack;
  std::vector<bool> used;
};

AleksandrovFit aleksandrov_constant_fit(const std::vector<AleksandrovRun>& runs);

std::string to_text(const CylinderCertificate& c);
std::string to_text(const RadialCertificate& c);
std::string to_text(const ChainReport& c);

}  // namespace hopflab
