#include "hopflab/convex_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hopflab/error.hpp"
#include "text_util.hpp"

namespace hopflab {

namespace {

void require_radius(const BoundaryProfile& F, double r) {
  if (!(r > 0.0) || r > F.R0() * (1.0 + 1e-12)) {
    fail(ErrorCode::DomainError, "radius " + std::to_string(r) + " outside (0, R0 = " + std::to_string(F.R0()) + "]");
  }
}

double piece_value(const AffinePiece& p, const Eigen::VectorXd& x) { return p.slope.dot(x) + p.offset; }

// Projects x onto the half-space {a.x <= b}.
Eigen::VectorXd project_halfspace(const Eigen::VectorXd& x, const Eigen::VectorXd& a, double b) {
  const double excess = a.dot(x) - b;
  const double norm2 = a.squaredNorm();
  if (excess <= 0.0 || norm2 == 0.0) return x;
  return x - (excess / norm2) * a;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& x, double r) {
  const double n = x.norm();
  return n <= r ? x : Eigen::VectorXd(x * (r / n));
}

// Whether piece i attains the maximum somewhere in the closed ball |x| <= r.
bool piece_active_in_ball(const std::vector<AffinePiece>& pieces, std::size_t i, double r) {
  const auto& pi = pieces[i];
  const int d = static_cast<int>(pi.slope.size());
  const double scale = 1e-12 * (1.0 + std::abs(pi.offset) + r * pi.slope.norm());
  if (d == 1) {
    double lo = -r;
    double hi = r;
    for (std::size_t j = 0; j < pieces.size(); ++j) {
      if (j == i) continue;
      const double a = pieces[j].slope[0] - pi.slope[0];
      const double b = pi.offset - pieces[j].offset;
      if (a == 0.0) {
        if (b < -scale) return false;
      } else if (a > 0.0) {
        hi = std::min(hi, b / a);
      } else {
        lo = std::max(lo, b / a);
      }
    }
    return lo <= hi + scale;
  }
  // Dykstra alternating projections onto the ball and the half-spaces
  // {(p_j - p_i).x <= c_i - c_j}.
  const std::size_t m = pieces.size();
  std::vector<Eigen::VectorXd> corr(m + 1, Eigen::VectorXd::Zero(d));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int sweep = 0; sweep < 2000; ++sweep) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (j == i) continue;
      const Eigen::VectorXd y = x + corr[j];
      Eigen::VectorXd p;
      if (j == m) {
        p = project_ball(y, r);
      } else {
        p = project_halfspace(y, pieces[j].slope - pi.slope, pi.offset - pieces[j].offset);
      }
      corr[j] = y - p;
      x = p;
    }
  }
  double violation = std::max(0.0, x.norm() - r);
  for (std::size_t j = 0; j < m; ++j) {
    violation = std::max(violation, piece_value(pieces[j], x) - piece_value(pi, x));
  }
  return violation <= 1e-9 * (1.0 + std::abs(pi.offset) + r * pi.slope.norm());
}

}  // namespace

double parse_angle(std::string_view text) {
  std::string s(text::trim(text));
  std::string compact;
  for (char c : s) {
    if (c != ' ' && c != '*') compact.push_back(c);
  }
  const auto pos = compact.find("pi");
  if (pos == std::string::npos) {
    const auto v = text::parse_double(compact);
    if (!v) fail(ErrorCode::ConfigError, "cannot parse angle '" + s + "'");
    return *v;
  }
  double coef = 1.0;
  if (pos > 0) {
    const auto c = text::parse_double(std::string_view(compact).substr(0, pos));
    if (!c) fail(ErrorCode::ConfigError, "cannot parse angle '" + s + "'");
    coef = *c;
  }
  double den = 1.0;
  const std::string rest = compact.substr(pos + 2);
  if (!rest.empty()) {
    if (rest.front() != '/') fail(ErrorCode::ConfigError, "cannot parse angle '" + s + "'");
    const auto d = text::parse_double(std::string_view(rest).substr(1));
    if (!d || *d == 0.0) fail(ErrorCode::ConfigError, "cannot parse angle '" + s + "'");
    den = *d;
  }
  return coef * std::numbers::pi / den;
}

BoundaryProfile BoundaryProfile::radial(std::string id, std::function<double(double)> f, std::function<double(double)> df,
                                        int dim, double R0, std::optional<std::string> modulus_id) {
  if (dim < 2) fail(ErrorCode::DomainError, "ambient dimension must be at least 2");
  if (!(R0 > 0.0) || R0 > 1.0) fail(ErrorCode::DomainError, "R0 must lie in (0, 1]");
  BoundaryProfile p;
  p.form_ = Form::Radial;
  p.dim_ = dim;
  p.R0_ = R0;
  p.id_ = std::move(id);
  p.f_ = std::move(f);
  p.df_ = std::move(df);
  p.modulus_id_ = std::move(modulus_id);
  if (std::abs(p.f_(0.0)) > 1e-12) fail(ErrorCode::DomainError, "radial profile must satisfy f(0) = 0");
  p.identically_zero_ = p.f_(R0) == 0.0;
  return p;
}

BoundaryProfile BoundaryProfile::max_affine(std::vector<AffinePiece> pieces, double R0, std::string id) {
  if (pieces.empty()) fail(ErrorCode::DomainError, "MaxAffine profile needs at least one piece");
  if (!(R0 > 0.0) || R0 > 1.0) fail(ErrorCode::DomainError, "R0 must lie in (0, 1]");
  const auto d = pieces.front().slope.size();
  if (d < 1) fail(ErrorCode::DomainError, "MaxAffine slopes must have dimension n - 1 >= 1");
  double top = -std::numeric_limits<double>::infinity();
  bool zero = true;
  for (const auto& piece : pieces) {
    if (piece.slope.size() != d) fail(ErrorCode::DomainError, "MaxAffine slopes must share one dimension");
    top = std::max(top, piece.offset);
    if (piece.slope.norm() > 0.0) zero = false;
  }
  if (std::abs(top) > 1e-12) fail(ErrorCode::DomainError, "MaxAffine profile must satisfy F(0) = max c_i = 0");
  BoundaryProfile p;
  p.form_ = Form::MaxAffine;
  p.dim_ = static_cast<int>(d) + 1;
  p.R0_ = R0;
  p.id_ = std::move(id);
  p.pieces_ = std::move(pieces);
  p.identically_zero_ = zero;
  return p;
}

BoundaryProfile BoundaryProfile::preset(std::string_view id, double R0, int dim) {
  const auto [name, params] = text::split_preset(id);
  const std::string full(text::trim(id));
  if (name == "flat" && params.empty()) {
    return radial(full, [](double) { return 0.0; }, [](double) { return 0.0; }, dim, R0);
  }
  if (name == "cone") {
    const auto c = text::parse_double(params);
    if (!c || *c < 0.0) fail(ErrorCode::ConfigError, "cone slope must be a nonnegative number: '" + full + "'");
    const double slope = *c;
    return radial(full, [slope](double rho) { return slope * rho; }, [slope](double) { return slope; }, dim, R0,
                  slope > 0.0 ? std::optional<std::string>("const") : std::nullopt);
  }
  if (name == "power") {
    const auto a = text::parse_double(params);
    if (!a || !(*a > 0.0)) fail(ErrorCode::ConfigError, "power profile exponent must be positive: '" + full + "'");
    const double alpha = *a;
    const std::string mod = alpha <= 1.0 ? "power:" + std::string(params) : std::string("linear");
    return radial(
        full, [alpha](double rho) { return std::pow(rho, 1.0 + alpha); },
        [alpha](double rho) { return (1.0 + alpha) * std::pow(rho, alpha); }, dim, R0, mod);
  }
  if (name == "log1" && params.empty()) {
    return radial(
        full,
        [R0](double rho) { return rho <= 0.0 ? 0.0 : rho / (1.0 + std::log(R0 / rho)); },
        [R0](double rho) {
          if (rho <= 0.0) return 0.0;
          const double l = 1.0 + std::log(R0 / rho);
          return 1.0 / l + 1.0 / (l * l);
        },
        dim, R0, std::string("log1"));
  }
  if (name == "log2" && params.empty()) {
    return radial(
        full,
        [R0](double rho) {
          if (rho <= 0.0) return 0.0;
          const double l = 1.0 + std::log(R0 / rho);
          return rho / (l * l);
        },
        [R0](double rho) {
          if (rho <= 0.0) return 0.0;
          const double l = 1.0 + std::log(R0 / rho);
          return 1.0 / (l * l) + 2.0 / (l * l * l);
        },
        dim, R0, std::string("log2"));
  }
  if (name == "wedge") {
    if (dim != 2) fail(ErrorCode::ConfigError, "wedge profile is two-dimensional");
    const double theta = parse_angle(params);
    if (!(theta > 0.0) || theta >= std::numbers::pi) fail(ErrorCode::ConfigError, "wedge angle must lie in (0, pi)");
    const double slope = 1.0 / std::tan(0.5 * theta);
    auto p = radial(full, [slope](double rho) { return slope * rho; }, [slope](double) { return slope; }, dim, R0,
                    std::string("const"));
    p.wedge_angle_ = theta;
    return p;
  }
  fail(ErrorCode::ConfigError, "unknown profile preset '" + full + "'");
}

BoundaryProfile BoundaryProfile::max_affine_csv(std::istream& in, double R0, std::string id) {
  const auto rows = text::read_numeric_rows(in);
  if (!rows || rows->empty()) fail(ErrorCode::ConfigError, "MaxAffine CSV is empty or malformed");
  std::vector<AffinePiece> pieces;
  for (const auto& row : *rows) {
    if (row.size() < 2) fail(ErrorCode::ConfigError, "MaxAffine CSV rows need p_1..p_{n-1}, c");
    AffinePiece piece;
    piece.slope = Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size() - 1));
    piece.offset = row.back();
    pieces.push_back(std::move(piece));
  }
  return max_affine(std::move(pieces), R0, std::move(id));
}

double BoundaryProfile::operator()(const Eigen::VectorXd& xp) const {
  if (form_ == Form::Radial) return f_(xp.norm());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) best = std::max(best, piece_value(p, xp));
  return best;
}

double BoundaryProfile::eval_1d(double x1) const {
  if (form_ == Form::Radial) return f_(std::abs(x1));
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) best = std::max(best, p.slope[0] * x1 + p.offset);
  return best;
}

Eigen::VectorXd BoundaryProfile::max_subgradient(const Eigen::VectorXd& xp) const {
  if (form_ == Form::Radial) {
    const double rho = xp.norm();
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(xp.size());
    if (rho > 0.0) {
      dir = xp / rho;
    } else {
      dir[0] = 1.0;
    }
    return df_(rho) * dir;
  }
  const double value = (*this)(xp);
  const double tol = 1e-12 * (1.0 + std::abs(value));
  Eigen::VectorXd best = Eigen::VectorXd::Zero(xp.size());
  for (const auto& p : pieces_) {
    if (piece_value(p, xp) >= value - tol && p.slope.norm() > best.norm()) best = p.slope;
  }
  return best;
}

std::optional<Modulus> BoundaryProfile::delta_modulus() const {
  if (identically_zero_) return std::nullopt;
  if (modulus_id_) return Modulus::preset(*modulus_id_);
  const double top = delta(*this, R0_);
  if (!(top > 0.0)) return std::nullopt;
  const BoundaryProfile self = *this;
  return regularize(
      [self, top](double t) { return t <= 0.0 ? 0.0 : delta(self, std::min(t, 1.0) * self.R0()) / top; }, 400,
      "delta:" + id_);
}

ProfileCheck check_invariants(const BoundaryProfile& F, int samples, std::uint64_t seed) {
  ProfileCheck check;
  const int d = F.dim() - 1;
  check.origin_ok = std::abs(F(Eigen::VectorXd::Zero(d))) <= 1e-12;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const auto sample_point = [&]() {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = normal(rng);
    const double n = x.norm();
    if (n > 0.0) x *= F.R0() * std::pow(unit(rng), 1.0 / d) / n;
    return x;
  };
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = sample_point();
    const Eigen::VectorXd z = sample_point();
    const double fx = F(x);
    const double fz = F(z);
    if (fx < -1e-14) check.nonnegative = false;
    const double defect = F(Eigen::VectorXd(0.5 * (x + z))) - 0.5 * (fx + fz);
    if (defect > 1e-12) {
      check.midpoint_convex = false;
      check.worst_midpoint_defect = std::max(check.worst_midpoint_defect, defect);
    }
  }
  if (F.form() == BoundaryProfile::Form::Radial) {
    const int n = 512;
    double prev_quotient = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double a = F.R0() * k / n;
      const double b = F.R0() * (k + 1) / n;
      const double q = (F.radial_value(b) - F.radial_value(a)) / (b - a);
      if (q < prev_quotient - 1e-10 * (1.0 + std::abs(prev_quotient))) check.radial_convex = false;
      if (q < -1e-14) check.radial_convex = false;
      prev_quotient = q;
    }
  }
  return check;
}

BoundaryProfile random_max_affine(int dim, int pieces, double R0, std::uint64_t seed) {
  if (dim < 2 || pieces < 1) fail(ErrorCode::DomainError, "random_max_affine needs dim >= 2 and pieces >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> slope(-2.0, 2.0);
  std::uniform_real_distribution<double> shift(0.0, 1.0);
  std::vector<AffinePiece> out;
  out.push_back({Eigen::VectorXd::Zero(dim - 1), 0.0});
  for (int k = 0; k < pieces; ++k) {
    AffinePiece p;
    p.slope.resize(dim - 1);
    for (int i = 0; i < dim - 1; ++i) p.slope[i] = slope(rng);
    // Offsets are nonpositive so that F(0) = 0; the kink lies within R0.
    p.offset = -shift(rng) * R0 * p.slope.norm() * 0.5;
    out.push_back(std::move(p));
  }
  return BoundaryProfile::max_affine(std::move(out), R0, "random:" + std::to_string(seed));
}

double delta(const BoundaryProfile& F, double r) {
  require_radius(F, r);
  if (F.form() == BoundaryProfile::Form::Radial) return F.radial_value(r) / r;
  // F(rho e)/rho is nondecreasing in rho, so the maximum sits on |x'| = r,
  // and max_{|e|=1} max_i (r p_i.e + c_i) = max_i (r|p_i| + c_i).
  double best = 0.0;
  for (const auto& p : F.pieces()) best = std::max(best, (r * p.slope.norm() + p.offset) / r);
  return best;
}

double delta1(const BoundaryProfile& F, double r) {
  require_radius(F, r);
  if (F.form() == BoundaryProfile::Form::Radial) return F.radial_left_derivative(r);
  const auto& pieces = F.pieces();
  double best = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const double norm = pieces[i].slope.norm();
    if (norm <= best) continue;
    // Cheap sufficient test first: the piece is maximal at r p_i/|p_i|.
    bool active = false;
    if (norm > 0.0) {
      const Eigen::VectorXd x = pieces[i].slope * (r / norm);
      active = piece_value(pieces[i], x) >= F(x) - 1e-12 * (1.0 + std::abs(F(x)));
    }
    if (!active) active = piece_active_in_ball(pieces, i, r);
    if (active) best = norm;
  }
  return best;
}

SandwichReport sandwich_check(const BoundaryProfile& F, double r, double tol) {
  if (!(r > 0.0) || 2.0 * r > F.R0() * (1.0 + 1e-12)) {
    fail(ErrorCode::DomainError, "sandwich_check requires 0 < 2r <= R0");
  }
  SandwichReport rep;
  rep.delta_r = delta(F, r);
  rep.delta1_r = delta1(F, r);
  rep.delta_2r = delta(F, std::min(2.0 * r, F.R0()));
  rep.lower_slack = rep.delta1_r - rep.delta_r;
  rep.upper_slack = 2.0 * rep.delta_2r - rep.delta1_r;
  rep.lower_holds = rep.lower_slack >= -tol;
  rep.upper_holds = rep.upper_slack >= -tol;
  return rep;
}

Eigen::VectorXd ExtremalFrame::to_x(const Eigen::VectorXd& y) const { return x_star + rotation.transpose() * y; }

Eigen::VectorXd ExtremalFrame::to_y(const Eigen::VectorXd& x) const { return rotation * (x - x_star); }

ExtremalFrame extremal_frame(const BoundaryProfile& F, double r, bool strict) {
  if (!(r > 0.0) || r > 0.5 * F.R0() * (1.0 + 1e-12)) fail(ErrorCode::DomainError, "extremal_frame requires 0 < r <= R0/2");
  const int n = F.dim();
  const int d = n - 1;
  ExtremalFrame frame;
  frame.r = r;
  frame.realizing_radius = r;
  const double dr = delta(F, r);
  if (!(dr > 0.0)) {
    if (strict) fail(ErrorCode::DegenerateProfile, "delta(r) = 0: the boundary is flat near the origin");
    frame.degenerate = true;
    frame.rotation = Eigen::MatrixXd::Identity(n, n);
    frame.x_star = Eigen::VectorXd::Zero(n);
    frame.x_star[0] = r;
    frame.phi = 0.0;
    return frame;
  }

  Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
  if (F.form() == BoundaryProfile::Form::Radial) {
    e[0] = 1.0;
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : F.pieces()) {
      const double norm = p.slope.norm();
      if (norm == 0.0) continue;
      const double v = r * norm + p.offset;
      if (v > best) {
        best = v;
        e = p.slope / norm;
      }
    }
  }
  const Eigen::VectorXd xp = r * e;
  frame.x_star.resize(n);
  frame.x_star.head(d) = xp;
  frame.x_star[d] = F(xp);

  const Eigen::VectorXd g = F.max_subgradient(xp);
  Eigen::VectorXd normal(n);
  normal.head(d) = -g;
  normal[d] = 1.0;
  normal /= normal.norm();

  Eigen::VectorXd radial = Eigen::VectorXd::Zero(n);
  radial.head(d) = xp;
  Eigen::VectorXd y1 = radial - radial.dot(normal) * normal;
  y1 /= y1.norm();

  std::vector<Eigen::VectorXd> axes{y1};
  for (int k = 0; k < n && static_cast<int>(axes.size()) < d; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, k);
    for (const auto& a : axes) v -= v.dot(a) * a;
    v -= v.dot(normal) * normal;
    if (v.norm() > 1e-8) axes.push_back(v / v.norm());
  }
  axes.push_back(normal);
  frame.rotation.resize(n, n);
  for (int k = 0; k < n; ++k) frame.rotation.row(k) = axes[k].transpose();
  frame.phi = std::atan(g.norm());
  return frame;
}

BallInclusion ball_inclusion_check(const BoundaryProfile& F, const ExtremalFrame& frame, double nu, int samples) {
  if (!(nu > 0.0) || nu > 1.0) fail(ErrorCode::DomainError, "nu must lie in (0, 1]");
  const int n = F.dim();
  const int d = n - 1;
  const double r = frame.r;
  if (frame.x_star.size() != n || frame.rotation.rows() != n) fail(ErrorCode::FrameMismatch, "frame dimension differs from the profile");
  const double expected = r * delta(F, r);
  if (!frame.degenerate && std::abs(frame.x_star[d] - expected) > 1e-9 * std::max(1.0, expected)) {
    fail(ErrorCode::FrameMismatch, "frame point does not satisfy x*_n = r delta(r) for frame.r");
  }
  BallInclusion out;
  out.smallness_violated = delta1(F, F.R0()) > 0.75;
  out.gamma = nu / std::sqrt(static_cast<double>(n - 1));
  out.rho0 = out.gamma * r / 8.0;
  Eigen::VectorXd yz = Eigen::VectorXd::Zero(n);
  yz[0] = r / 2.0;
  yz[d] = out.gamma * r / 4.0;
  out.z0 = frame.to_x(yz);
  if (2.0 * r <= F.R0() * (1.0 + 1e-12)) {
    out.claim_inequality_excludes_failure =
        16.0 * delta(F, std::min(2.0 * r, F.R0())) < out.gamma * (2.0 * std::cos(frame.phi) - 1.0);
  }

  const auto gap = [&](const Eigen::VectorXd& x) { return x[d] - F(Eigen::VectorXd(x.head(d))); };
  double margin = gap(out.z0);
  std::mt19937_64 rng(0);
  std::normal_distribution<double> normal;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd u(n);
    if (n == 2) {
      const double a = 2.0 * std::numbers::pi * s / samples;
      u << std::cos(a), std::sin(a);
    } else {
      for (int k = 0; k < n; ++k) u[k] = normal(rng);
      u /= u.norm();
    }
    margin = std::min(margin, gap(out.z0 + out.rho0 * u));
  }
  for (int k = 0; k < n; ++k) {
    for (double sgn : {-1.0, 1.0}) margin = std::min(margin, gap(out.z0 + sgn * out.rho0 * Eigen::VectorXd::Unit(n, k)));
  }
  out.margin = margin;
  out.inside = margin > 0.0;
  return out;
}

bool DomainMask::arm_hits_graph(std::size_t node, int dir) const {
  const auto it = outer_bits_.find(node);
  return it == outer_bits_.end() || ((it->second >> dir) & 1u) == 0;
}

double DomainMask::arm(std::size_t node, int dir) const {
  const auto it = cuts_.find(node);
  return it == cuts_.end() ? 1.0 : it->second[dir];
}

DomainMask domain_mask(const BoundaryProfile& F, const GridSpec& grid) {
  if (F.dim() != 2) fail(ErrorCode::DomainError, "domain_mask is two-dimensional");
  if (!(grid.h > 0.0)) fail(ErrorCode::DomainError, "grid spacing must be positive");
  const double H = grid.H > 0.0 ? grid.H : grid.R0;
  const double nr = grid.R0 / grid.h;
  const double nh = H / grid.h;
  if (std::abs(nr - std::round(nr)) > 1e-9 * nr || std::abs(nh - std::round(nh)) > 1e-9 * nh) {
    fail(ErrorCode::ResolutionError, "R0 and H must be integer multiples of h");
  }
  if (grid.R0 > F.R0() * (1.0 + 1e-12)) fail(ErrorCode::DomainError, "grid R0 exceeds the profile patch radius");

  DomainMask mask;
  mask.h_ = grid.h;
  mask.R0_ = grid.R0;
  mask.H_ = H;
  mask.half_ = static_cast<int>(std::lround(nr));
  mask.columns_ = 2 * mask.half_ + 1;
  mask.rows_ = static_cast<int>(std::lround(nh)) + 1;
  mask.kinds_.assign(static_cast<std::size_t>(mask.columns_) * mask.rows_, NodeKind::Exterior);

  const double tol = 1e-12 * grid.h;
  std::vector<double> curve(mask.columns_);
  for (int i = 0; i < mask.columns_; ++i) curve[i] = F.eval_1d(mask.x1(i));

  const double cap = grid.cap;
  const auto cap_gap = [cap](double x1, double x2) {
    return cap > 0.0 ? cap - std::hypot(x1, x2) : std::numeric_limits<double>::infinity();
  };

  for (int j = 0; j < mask.rows_; ++j) {
    for (int i = 0; i < mask.columns_; ++i) {
      const double gap = mask.x2(j) - curve[i];
      const double outer = cap_gap(mask.x1(i), mask.x2(j));
      NodeKind kind;
      if (std::abs(gap) <= tol) {
        kind = outer < -tol ? NodeKind::Exterior : NodeKind::Boundary;
      } else if (gap < 0.0 || outer < -tol) {
        kind = NodeKind::Exterior;
      } else if (outer <= tol || i == 0 || i == mask.columns_ - 1 || j == mask.rows_ - 1 || j == 0) {
        kind = NodeKind::BoxEdge;
      } else {
        kind = NodeKind::Interior;
      }
      mask.kinds_[mask.node(i, j)] = kind;
    }
  }

  for (int j = 1; j < mask.rows_ - 1; ++j) {
    for (int i = 1; i < mask.columns_ - 1; ++i) {
      const std::size_t id = mask.node(i, j);
      if (mask.kinds_[id] != NodeKind::Interior) continue;
      ++mask.interior_count_;
      if (i == mask.half_) ++mask.interior_on_axis_;
      std::array<double, 8> arms;
      arms.fill(1.0);
      std::uint8_t outer_bits = 0;
      bool cut = false;
      for (int dir = 0; dir < 8; ++dir) {
        const int di = kLatticeDirs[dir][0];
        const int dj = kLatticeDirs[dir][1];
        if (mask.kinds_[mask.node(i + di, j + dj)] != NodeKind::Exterior) continue;
        const double x0 = mask.x1(i);
        const double y0 = mask.x2(j);
        const auto graph_gap = [&](double t) {
          return (y0 + t * dj * grid.h) - F.eval_1d(x0 + t * di * grid.h);
        };
        const auto g = [&](double t) {
          return std::min(graph_gap(t), cap_gap(x0 + t * di * grid.h, y0 + t * dj * grid.h));
        };
        double lo = 0.0;
        double hi = 1.0;
        const double len = grid.h * std::sqrt(static_cast<double>(di * di + dj * dj));
        while ((hi - lo) * len > 1e-12 * grid.h) {
          const double mid = 0.5 * (lo + hi);
          if (g(mid) > 0.0) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        const double t = 0.5 * (lo + hi);
        arms[dir] = t;
        if (cap_gap(x0 + t * di * grid.h, y0 + t * dj * grid.h) < graph_gap(t)) {
          outer_bits = static_cast<std::uint8_t>(outer_bits | (1u << dir));
        }
        cut = true;
      }
      if (cut) mask.cuts_.emplace(id, arms);
      if (outer_bits != 0) mask.outer_bits_.emplace(id, outer_bits);
    }
  }
  if (mask.interior_on_axis_ < 4) {
    fail(ErrorCode::ResolutionError, "fewer than 4 interior nodes on the x1 = 0 column; refine h");
  }
  return mask;
}

}  // namespace hopflab
