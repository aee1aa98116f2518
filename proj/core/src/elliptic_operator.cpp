#include "hopflab/elliptic_operator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "hopflab/error.hpp"
#include "hopflab/quadrature.hpp"
#include "text_util.hpp"

namespace hopflab {

EllipticOperator::EllipticOperator(std::string id, int dim, double nu, MatrixField a, VectorField b, double drift_bound)
    : id_(std::move(id)), dim_(dim), nu_(nu), drift_bound_(drift_bound), a_(std::move(a)), b_(std::move(b)) {
  if (dim < 1) fail(ErrorCode::DomainError, "operator dimension must be positive");
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::DomainError, fmt::format("nu = {} outside (0, 1]", nu));
  if (!a_) fail(ErrorCode::DomainError, "operator needs a matrix field");
}

namespace {

double preset_number(std::string_view text, std::string_view id) {
  const auto v = text::parse_double(text);
  if (!v) fail(ErrorCode::ConfigError, fmt::format("bad numeric parameter in operator preset '{}'", id));
  return *v;
}

constexpr int kMaxMollifyDim = 8;

MatrixField diagonal_field(std::vector<double> diag) {
  return [diag = std::move(diag)](const double*, double* a) {
    const std::size_t n = diag.size();
    std::fill(a, a + n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = diag[i];
  };
}

}  // namespace

EllipticOperator EllipticOperator::preset(std::string_view id, int dim) {
  const auto [name, params] = text::split_preset(id);
  const std::string sid(id);
  if (name == "laplace" && params.empty()) {
    return EllipticOperator(sid, dim, 1.0, diagonal_field(std::vector<double>(dim, 1.0)));
  }
  if (name == "aniso") {
    const auto parts = text::split(params, ',');
    if (parts.size() != 2) fail(ErrorCode::ConfigError, "aniso expects two eigenvalues: aniso:<l1>,<l2>");
    const double l1 = preset_number(parts[0], id);
    const double l2 = preset_number(parts[1], id);
    if (!(l1 > 0.0 && l2 > 0.0)) fail(ErrorCode::DomainError, "aniso eigenvalues must be positive");
    const double nu = std::min({l1, l2, 1.0 / l1, 1.0 / l2, 1.0});
    std::vector<double> diag(dim, 1.0);
    diag[0] = l1;
    if (dim > 1) diag[1] = l2;
    return EllipticOperator(sid, dim, nu, diagonal_field(std::move(diag)));
  }
  if (name == "checker") {
    const double e = preset_number(params, id);
    if (!(e >= 0.0 && e < 1.0)) fail(ErrorCode::DomainError, "checker contrast must lie in [0, 1)");
    if (dim < 2) fail(ErrorCode::DomainError, "checker needs dim >= 2");
    constexpr double cell = 0.125;
    MatrixField a = [e, dim](const double* x, double* out) {
      const long k = static_cast<long>(std::floor(x[0] / cell)) + static_cast<long>(std::floor(x[1] / cell));
      const double s = (k % 2 == 0) ? 1.0 : -1.0;
      const auto n = static_cast<std::size_t>(dim);
      std::fill(out, out + n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) out[i * n + i] = 1.0;
      out[0] = 1.0 + e * s;
      out[n + 1] = 1.0 - e * s;
    };
    return EllipticOperator(sid, dim, 1.0 - e, std::move(a));
  }
  if (name == "drift") {
    const double scale = preset_number(params, id);
    if (!(scale >= 0.0)) fail(ErrorCode::DomainError, "drift scale must be nonnegative");
    if (dim < 2) fail(ErrorCode::DomainError, "drift needs dim >= 2");
    VectorField b = [scale, dim](const double* x, double* out) {
      std::fill(out, out + dim, 0.0);
      out[0] = scale * std::cos(std::numbers::pi * x[1]);
      out[1] = scale * std::sin(std::numbers::pi * x[0]);
    };
    return EllipticOperator(sid, dim, 1.0, diagonal_field(std::vector<double>(dim, 1.0)), std::move(b),
                            scale * std::numbers::sqrt2);
  }
  fail(ErrorCode::ConfigError, fmt::format("unknown operator preset '{}'", id));
}

void EllipticOperator::a_at(const double* x, double* out) const { a_(x, out); }

void EllipticOperator::b_at(const double* x, double* out) const {
  if (b_) {
    b_(x, out);
  } else {
    std::fill(out, out + dim_, 0.0);
  }
}

Eigen::MatrixXd EllipticOperator::a(const Eigen::VectorXd& x) const {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(dim_, dim_);
  a_(x.data(), m.data());
  return m;
}

Eigen::VectorXd EllipticOperator::b(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(dim_);
  b_at(x.data(), v.data());
  return v;
}

EllipticOperator EllipticOperator::with_coefficients(std::string id, MatrixField a, VectorField b) const {
  return EllipticOperator(std::move(id), dim_, nu_, std::move(a), std::move(b), drift_bound_);
}

EllipticityReport ellipticity_check(const EllipticOperator& op, const std::vector<Eigen::VectorXd>& points,
                                    double tol) {
  EllipticityReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const Eigen::MatrixXd a = op.a(x);
    rep.max_asymmetry = std::max(rep.max_asymmetry, (a - a.transpose()).norm());
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
    rep.max_eigenvalue = std::max(rep.max_eigenvalue, es.eigenvalues().maxCoeff());
    ++rep.points;
  }
  rep.ok = rep.points > 0 && rep.max_asymmetry <= tol && rep.min_eigenvalue >= op.nu() - tol &&
           rep.max_eigenvalue <= 1.0 / op.nu() + tol;
  return rep;
}

std::vector<Eigen::VectorXd> sample_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int count,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
    pts.push_back(std::move(x));
  }
  return pts;
}

Eigen::VectorXd truncate_drift(const Eigen::VectorXd& b, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorCode::DomainError, "truncate_drift needs epsilon > 0");
  const double cap = 1.0 / epsilon;
  Eigen::VectorXd out(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) out[i] = std::copysign(std::min(std::abs(b[i]), cap), b[i]);
  return out;
}

VectorField truncate_drift(VectorField b, int dim, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorCode::DomainError, "truncate_drift needs epsilon > 0");
  if (!b) return {};
  const double cap = 1.0 / epsilon;
  return [b = std::move(b), dim, cap](const double* x, double* out) {
    b(x, out);
    for (int i = 0; i < dim; ++i) out[i] = std::copysign(std::min(std::abs(out[i]), cap), out[i]);
  };
}

double ordered_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

Eigen::VectorXd correct_drift(const Eigen::VectorXd& b_tilde, const Eigen::VectorXd& b, const Eigen::VectorXd& grad_u) {
  if (b_tilde.size() != b.size() || b.size() != grad_u.size()) {
    fail(ErrorCode::DomainError, "correct_drift: dimension mismatch");
  }
  const double target = ordered_dot(b, grad_u);
  const double current = ordered_dot(b_tilde, grad_u);
  if (std::abs(current) <= std::abs(target)) return b_tilde;

  // Opposite signs: work with -b_tilde, which has the sign of the target.
  const Eigen::VectorXd c = (current * target < 0.0) ? Eigen::VectorXd(-b_tilde) : b_tilde;
  const double sum = ordered_dot(c, grad_u);
  const double sgn = sum > 0.0 ? 1.0 : -1.0;

  double positive = 0.0;
  double rest = 0.0;
  std::vector<bool> scaled(static_cast<std::size_t>(c.size()), false);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double term = c[i] * grad_u[i];
    if (sgn * term > 0.0) {
      positive += term;
      scaled[static_cast<std::size_t>(i)] = true;
    } else {
      rest += term;
    }
  }
  double lambda = std::clamp((target - rest) / positive, 0.0, 1.0);

  auto apply = [&](double lam) {
    Eigen::VectorXd out = c;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (scaled[static_cast<std::size_t>(i)]) out[i] = lam * c[i];
    }
    return out;
  };

  Eigen::VectorXd out = apply(lambda);
  double step = std::max(lambda, 1e-300) * std::numeric_limits<double>::epsilon();
  for (int it = 0; it < 2000 && std::abs(ordered_dot(out, grad_u)) > std::abs(target); ++it) {
    lambda = std::max(0.0, lambda - step);
    step *= 2.0;
    out = apply(lambda);
  }
  return out;
}

MatrixField mollify_a(MatrixField a, int dim, double epsilon, Eigen::VectorXd lo, Eigen::VectorXd hi,
                      MollifyOptions opts) {
  if (!(epsilon > 0.0)) fail(ErrorCode::DomainError, "mollify_a needs epsilon > 0");
  if (lo.size() != dim || hi.size() != dim) fail(ErrorCode::DomainError, "mollify_a: box dimension mismatch");
  if (dim > kMaxMollifyDim) fail(ErrorCode::DomainError, "mollify_a supports dim <= 8");
  if (opts.points_per_axis < 1 || opts.panels < 1) fail(ErrorCode::DomainError, "mollify_a: bad rule size");
  const quad::Rule base = quad::gauss_legendre(opts.points_per_axis);
  std::vector<double> nodes;
  std::vector<double> node_w;
  const double width = 2.0 / opts.panels;
  for (int p = 0; p < opts.panels; ++p) {
    const double mid = -1.0 + (p + 0.5) * width;
    for (std::size_t k = 0; k < base.nodes.size(); ++k) {
      nodes.push_back(mid + 0.5 * width * base.nodes[k]);
      node_w.push_back(0.5 * width * base.weights[k]);
    }
  }
  const int m = static_cast<int>(nodes.size());

  // Tensor nodes inside the unit ball and their kernel weights.
  std::vector<double> offsets;
  std::vector<double> weights;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    double r2 = 0.0;
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      const double t = nodes[static_cast<std::size_t>(idx[d])];
      r2 += t * t;
      w *= node_w[static_cast<std::size_t>(idx[d])];
    }
    if (r2 < 1.0) {
      for (int d = 0; d < dim; ++d) offsets.push_back(epsilon * nodes[static_cast<std::size_t>(idx[d])]);
      weights.push_back(w * std::exp(-1.0 / (1.0 - r2)));
    }
    int d = 0;
    while (d < dim && ++idx[d] == m) idx[d++] = 0;
    if (d == dim) break;
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;

  return [a = std::move(a), dim, lo = std::move(lo), hi = std::move(hi), offsets = std::move(offsets),
          weights = std::move(weights)](const double* x, double* out) {
    const auto n = static_cast<std::size_t>(dim);
    std::array<double, kMaxMollifyDim> y{};
    std::array<double, kMaxMollifyDim * kMaxMollifyDim> val{};
    std::fill(out, out + n * n, 0.0);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      bool inside = true;
      for (std::size_t d = 0; d < n; ++d) {
        y[d] = x[d] + offsets[k * n + d];
        inside = inside && y[d] >= lo[static_cast<Eigen::Index>(d)] && y[d] <= hi[static_cast<Eigen::Index>(d)];
      }
      if (inside) {
        a(y.data(), val.data());
        for (std::size_t e = 0; e < n * n; ++e) out[e] += weights[k] * val[e];
      } else {
        for (std::size_t d = 0; d < n; ++d) out[d * n + d] += weights[k];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double s = 0.5 * (out[i * n + j] + out[j * n + i]);
        out[i * n + j] = out[j * n + i] = s;
      }
    }
  };
}

ApproximantPair approximate(const EllipticOperator& op, double epsilon, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi, GradientField grad_u, MollifyOptions opts) {
  MatrixField a_eps = mollify_a(op.a_field(), op.dim(), epsilon, lo, hi, opts);
  VectorField b_eps;
  if (op.has_drift()) {
    if (!grad_u) fail(ErrorCode::DomainError, "approximate: drift correction needs grad u");
    b_eps = [b = op.b_field(), grad_u = std::move(grad_u), dim = op.dim(), epsilon](const double* x, double* out) {
      Eigen::VectorXd bx(dim), g(dim);
      b(x, bx.data());
      grad_u(x, g.data());
      const Eigen::VectorXd res = correct_drift(truncate_drift(bx, epsilon), bx, g);
      std::copy(res.data(), res.data() + dim, out);
    };
  }
  return {epsilon, op.with_coefficients(fmt::format("{}@eps={}", op.id(), epsilon), std::move(a_eps), std::move(b_eps))};
}

GridField2D GridField2D::cell_centered(int n, double lo, double hi, const std::function<double(double, double)>& f) {
  GridField2D g;
  g.nx = g.ny = n;
  g.h = (hi - lo) / n;
  g.x0 = g.y0 = lo + 0.5 * g.h;
  g.values.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g.values[g.index(i, j)] = f(g.x1(i), g.x2(j));
  }
  return g;
}

double local_norm(const GridField2D& f, const Region2D& region, double p) {
  if (!(p >= 1.0)) fail(ErrorCode::DomainError, "local_norm needs p >= 1");
  double sum = 0.0;
  std::size_t count = 0;
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) {
      const std::size_t k = f.index(i, j);
      if (!f.is_valid(k) || !region(f.x1(i), f.x2(j))) continue;
      sum += std::pow(std::abs(f.values[k]), p);
      ++count;
    }
  }
  if (count == 0) fail(ErrorCode::EmptyRegion, "region contains no grid node");
  return std::pow(sum * f.h * f.h, 1.0 / p);
}

std::vector<double> norm_modulus(const GridField2D& f, const std::vector<double>& rho_list, double p) {
  if (!(p >= 1.0)) fail(ErrorCode::DomainError, "norm_modulus needs p >= 1");
  for (std::size_t k = 0; k < rho_list.size(); ++k) {
    if (!(rho_list[k] > 0.0) || (k > 0 && rho_list[k] > rho_list[k - 1])) {
      fail(ErrorCode::DomainError, "norm_modulus needs positive, decreasing radii");
    }
  }
  // Row prefix sums of |f|^p over valid nodes.
  const auto nx = static_cast<std::size_t>(f.nx);
  std::vector<double> prefix(static_cast<std::size_t>(f.ny) * (nx + 1), 0.0);
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) {
      const std::size_t k = f.index(i, j);
      const double v = f.is_valid(k) ? std::pow(std::abs(f.values[k]), p) : 0.0;
      prefix[j * (nx + 1) + i + 1] = prefix[j * (nx + 1) + i] + v;
    }
  }
  std::vector<double> out;
  out.reserve(rho_list.size());
  for (double rho : rho_list) {
    const double rr = rho / f.h;
    const int reach = static_cast<int>(std::floor(rr + 1e-12));
    std::vector<int> half_width(static_cast<std::size_t>(reach) + 1);
    for (int dj = 0; dj <= reach; ++dj) {
      half_width[static_cast<std::size_t>(dj)] =
          static_cast<int>(std::floor(std::sqrt(std::max(0.0, rr * rr - double(dj) * dj)) + 1e-12));
    }
    double best = 0.0;
    for (int j = 0; j < f.ny; ++j) {
      for (int i = 0; i < f.nx; ++i) {
        if (!f.is_valid(f.index(i, j))) continue;
        double s = 0.0;
        for (int dj = -reach; dj <= reach; ++dj) {
          const int jj = j + dj;
          if (jj < 0 || jj >= f.ny) continue;
          const int w = half_width[static_cast<std::size_t>(std::abs(dj))];
          const int a = std::max(0, i - w);
          const int b = std::min(f.nx - 1, i + w);
          s += prefix[jj * (nx + 1) + b + 1] - prefix[jj * (nx + 1) + a];
        }
        best = std::max(best, s);
      }
    }
    out.push_back(std::pow(best * f.h * f.h, 1.0 / p));
  }
  return out;
}

double operator_difference_norm(const EllipticOperator& L, const EllipticOperator& L_eps, const SmoothProbe& u,
                                int cells, double lo, double hi, double p) {
  if (L.dim() != 2 || L_eps.dim() != 2) fail(ErrorCode::DomainError, "operator_difference_norm is 2-D");
  if (cells < 1) fail(ErrorCode::DomainError, "operator_difference_norm needs cells >= 1");
  const double h = (hi - lo) / cells;
  double sum = 0.0;
  double x[2], a[4], ae[4], b[2], be[2], g[2], H[4];
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      x[0] = lo + (i + 0.5) * h;
      x[1] = lo + (j + 0.5) * h;
      L.a_at(x, a);
      L_eps.a_at(x, ae);
      L.b_at(x, b);
      L_eps.b_at(x, be);
      u.gradient(x, g);
      u.hessian(x, H);
      double d = 0.0;
      for (int k = 0; k < 4; ++k) d -= (a[k] - ae[k]) * H[k];
      d += (b[0] - be[0]) * g[0] + (b[1] - be[1]) * g[1];
      sum += std::pow(std::abs(d), p);
    }
  }
  return std::pow(sum * h * h, 1.0 / p);
}

}  // namespace hopflab
