#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hopflab/modulus.hpp"

namespace hopflab {

struct AffinePiece {
  Eigen::VectorXd slope;
  double offset = 0.0;
};

/// Convex nonnegative graph x_n = F(x') with F(0) = 0 on |x'| <= R0.
class BoundaryProfile {
 public:
  enum class Form { Radial, MaxAffine };

  /// f must be convex and nondecreasing on [0, R0] with f(0) = 0; df returns
  /// the left derivative f'(rho-) (the right derivative at rho = 0).
  static BoundaryProfile radial(std::string id, std::function<double(double)> f, std::function<double(double)> df,
                                int dim, double R0, std::optional<std::string> modulus_id = std::nullopt);

  static BoundaryProfile max_affine(std::vector<AffinePiece> pieces, double R0, std::string id = "maxaffine");

  /// "flat", "cone:<c>", "power:<alpha>", "log1", "log2", "wedge:<theta>".
  /// theta accepts plain radians or multiples of pi such as "2pi/3".
  static BoundaryProfile preset(std::string_view id, double R0, int dim = 2);

  /// Rows (p_1, ..., p_{n-1}, c).
  static BoundaryProfile max_affine_csv(std::istream& in, double R0, std::string id = "maxaffine");

  Form form() const { return form_; }
  int dim() const { return dim_; }
  double R0() const { return R0_; }
  const std::string& id() const { return id_; }

  double operator()(const Eigen::VectorXd& xp) const;
  /// F restricted to n = 2, argument x_1.
  double eval_1d(double x1) const;

  double radial_value(double rho) const { return f_(rho); }
  double radial_left_derivative(double rho) const { return df_(rho); }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }

  /// Subgradient of maximal norm at x'.
  Eigen::VectorXd max_subgradient(const Eigen::VectorXd& xp) const;

  /// Opening angle of the 2-D wedge preset.
  std::optional<double> wedge_angle() const { return wedge_angle_; }

  /// Normalized boundary modulus t -> delta(R0 t) / delta(R0); empty when
  /// delta vanishes identically.
  std::optional<Modulus> delta_modulus() const;

 private:
  BoundaryProfile() = default;

  Form form_ = Form::Radial;
  int dim_ = 2;
  double R0_ = 1.0;
  std::string id_;
  std::function<double(double)> f_;
  std::function<double(double)> df_;
  std::vector<AffinePiece> pieces_;
  std::optional<std::string> modulus_id_;
  std::optional<double> wedge_angle_;
  bool identically_zero_ = false;
};

double parse_angle(std::string_view text);

struct ProfileCheck {
  bool origin_ok = true;
  bool nonnegative = true;
  bool midpoint_convex = true;
  bool radial_convex = true;
  double worst_midpoint_defect = 0.0;
  bool ok() const { return origin_ok && nonnegative && midpoint_convex && radial_convex; }
};

ProfileCheck check_invariants(const BoundaryProfile& F, int samples = 2000, std::uint64_t seed = 0);

/// Random convex MaxAffine profile: the zero piece plus `pieces` affine
/// pieces with nonpositive offsets.
BoundaryProfile random_max_affine(int dim, int pieces, double R0, std::uint64_t seed);

double delta(const BoundaryProfile& F, double r);
double delta1(const BoundaryProfile& F, double r);

struct SandwichReport {
  double delta_r = 0.0;
  double delta1_r = 0.0;
  double delta_2r = 0.0;
  bool lower_holds = false;  // delta(r) <= delta1(r)
  bool upper_holds = false;  // delta1(r) <= 2 delta(2r)
  double lower_slack = 0.0;
  double upper_slack = 0.0;
  bool holds() const { return lower_holds && upper_holds; }
};

SandwichReport sandwich_check(const BoundaryProfile& F, double r, double tol = 1e-10);

struct ExtremalFrame {
  Eigen::VectorXd x_star;
  double phi = 0.0;
  /// Rows are the y-axes in x-coordinates: y = rotation * (x - x_star).
  Eigen::MatrixXd rotation;
  double r = 0.0;
  double realizing_radius = 0.0;
  bool degenerate = false;

  Eigen::VectorXd to_x(const Eigen::VectorXd& y) const;
  Eigen::VectorXd to_y(const Eigen::VectorXd& x) const;
};

/// Throws DegenerateProfile when delta(r) = 0 and strict is set; otherwise a
/// degenerate frame (identity rotation, phi = 0) is returned.
ExtremalFrame extremal_frame(const BoundaryProfile& F, double r, bool strict = false);

struct BallInclusion {
  bool inside = false;
  double margin = 0.0;
  bool smallness_violated = false;
  double gamma = 0.0;
  double rho0 = 0.0;
  Eigen::VectorXd z0;
  bool claim_inequality_excludes_failure = false;  // 16 delta(2r) < gamma (2 cos phi - 1)
};

BallInclusion ball_inclusion_check(const BoundaryProfile& F, const ExtremalFrame& frame, double nu, int samples);

/// Grid on [-R0, R0] x [0, H] with the x_1 = 0 column on a grid line.
struct GridSpec {
  double h = 1.0 / 64;
  double R0 = 0.5;
  double H = 0.0;    // 0 means H = R0
  double cap = 0.0;  // > 0 intersects the box with the disc |x| < cap
};

enum class NodeKind : std::uint8_t { Interior, Exterior, Boundary, BoxEdge };

/// Lattice directions: 0:+x1 1:-x1 2:+x2 3:-x2 4:(+,+) 5:(-,-) 6:(+,-) 7:(-,+).
inline constexpr std::array<std::array<int, 2>, 8> kLatticeDirs = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};

class DomainMask {
 public:
  int columns() const { return columns_; }
  int rows() const { return rows_; }
  int half_width() const { return half_; }
  double h() const { return h_; }
  double R0() const { return R0_; }
  double H() const { return H_; }
  double x1(int i) const { return (i - half_) * h_; }
  double x2(int j) const { return j * h_; }
  std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * columns_ + i; }
  NodeKind kind(int i, int j) const { return kinds_[node(i, j)]; }
  NodeKind kind(std::size_t node) const { return kinds_[node]; }

  /// Fraction of the lattice arm from `node` in direction `dir` that lies in
  /// the domain; 1 unless the arm crosses the curve.
  double arm(std::size_t node, int dir) const;
  const std::unordered_map<std::size_t, std::array<double, 8>>& cut_table() const { return cuts_; }
  /// True when the shortened arm ends on the graph, false when it ends on the
  /// outer disc of GridSpec::cap.
  bool arm_hits_graph(std::size_t node, int dir) const;

  std::size_t interior_count() const { return interior_count_; }
  int interior_on_axis() const { return interior_on_axis_; }

 private:
  friend DomainMask domain_mask(const BoundaryProfile& F, const GridSpec& grid);
  int columns_ = 0;
  int rows_ = 0;
  int half_ = 0;
  double h_ = 0.0;
  double R0_ = 0.0;
  double H_ = 0.0;
  std::vector<NodeKind> kinds_;
  std::unordered_map<std::size_t, std::array<double, 8>> cuts_;
  std::unordered_map<std::size_t, std::uint8_t> outer_bits_;
  std::size_t interior_count_ = 0;
  int interior_on_axis_ = 0;
};

DomainMask domain_mask(const BoundaryProfile& F, const GridSpec& grid);

}  // namespace hopflab
