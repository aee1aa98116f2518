#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hopflab {

// Coefficient fields write into caller storage: a is n*n row-major, b has n entries.
using MatrixField = std::function<void(const double* x, double* a)>;
using VectorField = std::function<void(const double* x, double* b)>;

// L u = -a^{ij} D_i D_j u + b^i D_i u with nu I <= a <= I / nu.
class EllipticOperator {
 public:
  EllipticOperator(std::string id, int dim, double nu, MatrixField a, VectorField b = {}, double drift_bound = 0.0);

  // "laplace", "aniso:<l1>,<l2>", "checker:<eps0>", "drift:<scale>".
  static EllipticOperator preset(std::string_view id, int dim = 2);

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  double nu() const { return nu_; }
  bool has_drift() const { return static_cast<bool>(b_); }

  // Sup of |b| known for the preset; 0 without drift.
  double drift_bound() const { return drift_bound_; }

  void a_at(const double* x, double* out) const;
  void b_at(const double* x, double* out) const;
  Eigen::MatrixXd a(const Eigen::VectorXd& x) const;
  Eigen::VectorXd b(const Eigen::VectorXd& x) const;

  const MatrixField& a_field() const { return a_; }
  const VectorField& b_field() const { return b_; }

  EllipticOperator with_coefficients(std::string id, MatrixField a, VectorField b) const;

 private:
  std::string id_;
  int dim_ = 2;
  double nu_ = 1.0;
  double drift_bound_ = 0.0;
  MatrixField a_;
  VectorField b_;
};

struct EllipticityReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double max_asymmetry = 0.0;
  std::size_t points = 0;
  bool ok = false;
};

EllipticityReport ellipticity_check(const EllipticOperator& op, const std::vector<Eigen::VectorXd>& points,
                                    double tol = 1e-12);

// Uniform sample points of a box for the checks above.
std::vector<Eigen::VectorXd> sample_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int count,
                                        std::uint64_t seed);

Eigen::VectorXd truncate_drift(const Eigen::VectorXd& b, double epsilon);
VectorField truncate_drift(VectorField b, int dim, double epsilon);

// Sequential inner product used by correct_drift and its checks.
double ordered_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

Eigen::VectorXd correct_drift(const Eigen::VectorXd& b_tilde, const Eigen::VectorXd& b, const Eigen::VectorXd& grad_u);

struct MollifyOptions {
  int points_per_axis = 6;
  int panels = 1;  // composite rule: [-1, 1] split into equal panels per axis
};

// Convolution of a (extended by the identity outside [lo, hi]) with a
// normalized C-infinity bump of radius epsilon.
MatrixField mollify_a(MatrixField a, int dim, double epsilon, Eigen::VectorXd lo, Eigen::VectorXd hi,
                      MollifyOptions opts = {});

using GradientField = std::function<void(const double* x, double* grad)>;

struct ApproximantPair {
  double epsilon = 0.0;
  EllipticOperator op_eps;
};

ApproximantPair approximate(const EllipticOperator& op, double epsilon, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi, GradientField grad_u, MollifyOptions opts = {});

// Nodal scalar field on a uniform 2-D grid; nodes outside the domain carry
// valid = false.
struct GridField2D {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 1.0;
  std::vector<double> values;
  std::vector<bool> valid;

  double x1(int i) const { return x0 + i * h; }
  double x2(int j) const { return y0 + j * h; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  bool is_valid(std::size_t k) const { return valid.empty() || valid[k]; }

  static GridField2D cell_centered(int n, double lo, double hi, const std::function<double(double, double)>& f);
};

using Region2D = std::function<bool(double x1, double x2)>;

double local_norm(const GridField2D& f, const Region2D& region, double p = 2.0);

std::vector<double> norm_modulus(const GridField2D& f, const std::vector<double>& rho_list, double p = 2.0);

struct SmoothProbe {
  std::function<void(const double* x, double* grad)> gradient;
  std::function<void(const double* x, double* hess)> hessian;  // 2x2 row-major
};

// Discrete L_p norm of (L - L_eps) u on the cell centers of [lo, hi]^2.
double operator_difference_norm(const EllipticOperator& L, const EllipticOperator& L_eps, const SmoothProbe& u,
                                int cells, double lo = 0.0, double hi = 1.0, double p = 2.0);

}  // namespace hopflab
