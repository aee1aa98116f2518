#include "hopflab/fd_solver.hpp"

#include <fmt/format.h>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "hopflab/error.hpp"

namespace hopflab {

double sector_harmonic(double theta, double x1, double x2) {
  const double psi = std::atan2(x2, x1);
  const double phase = psi - (0.5 * std::numbers::pi - 0.5 * theta);
  if (phase <= 0.0 || phase >= theta) return 0.0;
  const double rho = std::hypot(x1, x2);
  return std::pow(rho, std::numbers::pi / theta) * std::sin(std::numbers::pi * phase / theta);
}

BoundaryData boundary_data(std::string_view kind, const BoundaryProfile& F) {
  if (kind == "linear") return {"linear", [](double, double x2) { return x2; }};
  if (kind == "zero") return {"zero", [](double, double) { return 0.0; }};
  if (kind == "sector") {
    const auto theta = F.wedge_angle();
    if (!theta) fail(ErrorCode::ConfigError, "bc 'sector' needs a wedge profile");
    return {"sector", [t = *theta](double x1, double x2) { return sector_harmonic(t, x1, x2); }, true};
  }
  fail(ErrorCode::ConfigError, fmt::format("unknown boundary data kind '{}'", kind));
}

std::shared_ptr<const DiscreteDomain> discrete_domain(const BoundaryProfile& F, const GridSpec& grid) {
  auto dom = std::make_shared<DiscreteDomain>(DiscreteDomain{domain_mask(F, grid), {}, {}});
  const auto& m = dom->mask;
  dom->unknown_of_node.assign(static_cast<std::size_t>(m.columns()) * m.rows(), -1);
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.columns(); ++i) {
      const std::size_t n = m.node(i, j);
      if (m.kind(n) != NodeKind::Interior) continue;
      dom->unknown_of_node[n] = static_cast<long>(dom->node_of_unknown.size());
      dom->node_of_unknown.push_back(n);
    }
  }
  return dom;
}

namespace {

struct RowBuilder {
  std::vector<Eigen::Triplet<double>>& triplets;
  long row;
  double diag = 0.0;
  double rhs = 0.0;
};

}  // namespace

LinearSystem discretize(const EllipticOperator& op, std::shared_ptr<const DiscreteDomain> dom, const BoundaryData& bc,
                        const ScalarField2D& source) {
  if (op.dim() != 2) fail(ErrorCode::DomainError, "the solver is two-dimensional");
  if (!bc.value) fail(ErrorCode::ConfigError, "boundary data has no value function");
  const DomainMask& m = dom->mask;
  const double h = m.h();
  const double nu = op.nu();
  const std::size_t N = dom->unknowns();
  if (N == 0) fail(ErrorCode::ResolutionError, "no interior nodes");

  LinearSystem sys;
  sys.domain = dom;
  sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  sys.guess = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  sys.boundary_values.assign(static_cast<std::size_t>(m.columns()) * m.rows(),
                             std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.columns(); ++i) {
      const std::size_t n = m.node(i, j);
      const NodeKind k = m.kind(n);
      if (k == NodeKind::BoxEdge) sys.boundary_values[n] = bc.value(m.x1(i), m.x2(j));
      if (k == NodeKind::Boundary) sys.boundary_values[n] = bc.on_graph ? bc.value(m.x1(i), m.x2(j)) : 0.0;
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(N * 9);

  for (std::size_t u = 0; u < N; ++u) {
    const std::size_t n = dom->node_of_unknown[u];
    const int i = static_cast<int>(n % static_cast<std::size_t>(m.columns()));
    const int j = static_cast<int>(n / static_cast<std::size_t>(m.columns()));
    const double x[2] = {m.x1(i), m.x2(j)};
    double a[4];
    double b[2];
    op.a_at(x, a);
    op.b_at(x, b);

    if (std::abs(a[1] - a[2]) > 1e-12) {
      fail(ErrorCode::EllipticityViolated, fmt::format("a is not symmetric at ({}, {})", x[0], x[1]));
    }
    const double tr = 0.5 * (a[0] + a[3]);
    const double disc = std::sqrt(0.25 * (a[0] - a[3]) * (a[0] - a[3]) + a[1] * a[1]);
    if (tr - disc < nu - 1e-12 || tr + disc > 1.0 / nu + 1e-12) {
      fail(ErrorCode::EllipticityViolated,
           fmt::format("eigenvalues [{}, {}] outside [{}, {}] at ({}, {})", tr - disc, tr + disc, nu, 1.0 / nu, x[0],
                       x[1]));
    }
    const double a12 = std::abs(a[1]);
    if (a12 > std::min(a[0], a[3]) + 1e-14) {
      fail(ErrorCode::StencilMonotonicityViolated,
           fmt::format("|a12| = {} exceeds min(a11, a22) = {} at ({}, {})", a12, std::min(a[0], a[3]), x[0], x[1]));
    }

    RowBuilder row{triplets, static_cast<long>(u)};
    if (source) row.rhs += source(x[0], x[1]);

    // Value of the neighbor reached along `dir` after fraction t of the arm.
    const auto couple = [&](int dir, double coef) {
      const int di = kLatticeDirs[dir][0];
      const int dj = kLatticeDirs[dir][1];
      const double t = m.arm(n, dir);
      if (t >= 1.0) {
        const std::size_t nb = m.node(i + di, j + dj);
        const long col = dom->unknown_of_node[nb];
        if (col >= 0) {
          triplets.emplace_back(row.row, col, coef);
          return;
        }
        double v = sys.boundary_values[nb];
        if (std::isnan(v)) v = bc.on_graph ? bc.value(m.x1(i + di), m.x2(j + dj)) : 0.0;
        row.rhs -= coef * v;
        return;
      }
      const double px = x[0] + t * di * h;
      const double py = x[1] + t * dj * h;
      const double v = (!m.arm_hits_graph(n, dir) || bc.on_graph) ? bc.value(px, py) : 0.0;
      row.rhs -= coef * v;
    };

    const auto arm_length = [&](int dir) {
      const int di = kLatticeDirs[dir][0];
      const int dj = kLatticeDirs[dir][1];
      return m.arm(n, dir) * h * std::sqrt(static_cast<double>(di * di + dj * dj));
    };

    // -w u_ee along the pair (plus, minus) of opposite lattice directions.
    const auto second = [&](int plus, int minus, double w) {
      if (w <= 0.0) return;
      const double hp = arm_length(plus);
      const double hm = arm_length(minus);
      couple(plus, -2.0 * w / (hp * (hp + hm)));
      couple(minus, -2.0 * w / (hm * (hp + hm)));
      row.diag += 2.0 * w / (hp * hm);
    };

    second(0, 1, a[0] - a12);
    second(2, 3, a[3] - a12);
    if (a12 > 0.0) {
      if (a[1] > 0.0) {
        second(4, 5, 2.0 * a12);
      } else {
        second(6, 7, 2.0 * a12);
      }
    }

    // Upwind first differences.
    const auto first = [&](double bi, int plus, int minus) {
      if (bi > 0.0) {
        const double hm = arm_length(minus);
        row.diag += bi / hm;
        couple(minus, -bi / hm);
      } else if (bi < 0.0) {
        const double hp = arm_length(plus);
        row.diag += -bi / hp;
        couple(plus, bi / hp);
      }
    };
    first(b[0], 0, 1);
    first(b[1], 2, 3);

    triplets.emplace_back(row.row, row.row, row.diag);
    sys.rhs[static_cast<Eigen::Index>(u)] = row.rhs;
    sys.guess[static_cast<Eigen::Index>(u)] = bc.value(x[0], x[1]);
  }

  sys.A.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  sys.A.setFromTriplets(triplets.begin(), triplets.end());
  sys.A.makeCompressed();
  return sys;
}

MMatrixReport mmatrix_check(const SparseMatrixR& A, double tol) {
  MMatrixReport rep;
  for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
    double diag = 0.0;
    double off = 0.0;
    double scale = 0.0;
    for (SparseMatrixR::InnerIterator it(A, r); it; ++it) {
      scale = std::max(scale, std::abs(it.value()));
      if (it.col() == r) {
        diag += it.value();
      } else {
        off += it.value();
        if (it.value() > 0.0) {
          rep.offdiag_nonpositive = false;
          rep.worst_offdiag = std::max(rep.worst_offdiag, it.value());
        }
      }
    }
    const double slack = diag + off;  // off is nonpositive for an M-matrix
    if (slack < -tol * scale) rep.diagonally_dominant = false;
    if (slack > tol * scale) rep.strict_somewhere = true;
    rep.worst_row_slack = (r == 0) ? slack / std::max(scale, 1e-300)
                                   : std::min(rep.worst_row_slack, slack / std::max(scale, 1e-300));
  }
  return rep;
}

DiscreteSolution solve(const LinearSystem& sys, const SolverOptions& opts) {
  DiscreteSolution sol;
  sol.domain = sys.domain;
  const double bnorm = sys.rhs.norm();
  const auto relres = [&](const Eigen::VectorXd& x) {
    const double r = (sys.rhs - sys.A * x).norm();
    return bnorm > 0.0 ? r / bnorm : r;
  };

  if (static_cast<std::size_t>(sys.A.rows()) < opts.direct_below) {
    Eigen::SparseMatrix<double> Ac(sys.A);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(Ac);
    if (lu.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "sparse LU factorization failed");
    sol.values = lu.solve(sys.rhs);
    sol.method = "sparse-lu";
    sol.iterations = 1;
  } else {
    Eigen::BiCGSTAB<SparseMatrixR, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(opts.tol);
    it.setMaxIterations(opts.max_iter);
    it.compute(sys.A);
    Eigen::VectorXd x = sys.guess;
    int total = 0;
    // BiCGSTAB may stop early on a breakdown; restart from the current iterate.
    for (int restart = 0; restart < 5; ++restart) {
      x = it.solveWithGuess(sys.rhs, x);
      total += static_cast<int>(it.iterations());
      if (relres(x) <= opts.tol || total >= opts.max_iter) break;
    }
    sol.values = x;
    sol.method = "bicgstab+diag";
    sol.iterations = total;
  }
  sol.residual_norm = relres(sol.values);
  if (!(sol.residual_norm <= opts.tol) || !sol.values.allFinite()) {
    fail(ErrorCode::NoConvergence, fmt::format("{} stopped after {} iterations with relative residual {:.3e}",
                                               sol.method, sol.iterations, sol.residual_norm));
  }

  sol.nodal = sys.boundary_values;
  for (std::size_t u = 0; u < sys.domain->unknowns(); ++u) {
    sol.nodal[sys.domain->node_of_unknown[u]] = sol.values[static_cast<Eigen::Index>(u)];
  }
  return sol;
}

std::vector<double> hopf_trace(const DiscreteSolution& sol, const std::vector<double>& heights) {
  const auto& m = sol.domain->mask;
  std::vector<double> out;
  out.reserve(heights.size());
  for (double y : heights) {
    if (!(y > 0.0)) fail(ErrorCode::DomainError, "hopf_trace needs positive heights");
    const double k = y / m.h();
    const long j = std::lround(k);
    if (std::abs(k - static_cast<double>(j)) > 1e-9 * std::max(1.0, k) || j >= m.rows()) {
      fail(ErrorCode::Misaligned, fmt::format("height {} is not a grid line (h = {})", y, m.h()));
    }
    const double v = sol.at(m.half_width(), static_cast<int>(j));
    if (std::isnan(v)) fail(ErrorCode::Misaligned, fmt::format("height {} lies outside the domain", y));
    out.push_back(v / y);
  }
  return out;
}

double oscillation(const DiscreteSolution& sol, double r) {
  const auto& m = sol.domain->mask;
  if (!(r > 0.0) || r > m.R0() * (1.0 + 1e-12)) fail(ErrorCode::DomainError, "oscillation radius outside (0, R0]");
  const double slack = 1e-9 * m.h();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t n : sol.domain->node_of_unknown) {
    const int i = static_cast<int>(n % static_cast<std::size_t>(m.columns()));
    const int j = static_cast<int>(n / static_cast<std::size_t>(m.columns()));
    const double x1 = m.x1(i);
    const double x2 = m.x2(j);
    if (std::abs(x1) > r + slack || x2 > r + slack || x2 < 2.0 * m.h() - slack) continue;
    const double q = sol.nodal[n] / x2;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (!(hi >= lo)) fail(ErrorCode::EmptyRegion, fmt::format("no interior node in the cylinder of radius {}", r));
  return hi - lo;
}

ConvergenceStudy convergence_study(const EllipticOperator& op, const BoundaryProfile& F, const ScalarField2D& exact,
                                   const std::vector<double>& h_list, double R0, double H, const SolverOptions& opts) {
  if (h_list.size() < 3) fail(ErrorCode::DomainError, "convergence_study needs at least 3 grid spacings");
  for (std::size_t k = 1; k < h_list.size(); ++k) {
    if (!(h_list[k] < h_list[k - 1])) fail(ErrorCode::DomainError, "h_list must be strictly decreasing");
  }
  ConvergenceStudy st;
  const BoundaryData bc{"exact", exact, true};
  double scale = 0.0;
  for (double h : h_list) {
    const auto dom = discrete_domain(F, GridSpec{h, R0, H});
    const auto sol = solve(discretize(op, dom, bc), opts);
    double err = 0.0;
    const auto& m = dom->mask;
    for (std::size_t n : dom->node_of_unknown) {
      const int i = static_cast<int>(n % static_cast<std::size_t>(m.columns()));
      const int j = static_cast<int>(n / static_cast<std::size_t>(m.columns()));
      const double ue = exact(m.x1(i), m.x2(j));
      scale = std::max(scale, std::abs(ue));
      err = std::max(err, std::abs(sol.nodal[n] - ue));
    }
    st.h.push_back(h);
    st.max_error.push_back(err);
  }
  const double worst = *std::max_element(st.max_error.begin(), st.max_error.end());
  if (worst <= 1e-9 * std::max(1.0, scale)) {
    st.exact = true;
    st.order = std::numeric_limits<double>::quiet_NaN();
    return st;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(st.h.size());
  for (std::size_t k = 0; k < st.h.size(); ++k) {
    const double lx = std::log(st.h[k]);
    const double ly = std::log(std::max(st.max_error[k], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  st.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return st;
}

void write_coo(std::ostream& out, const SparseMatrixR& A) {
  for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
    for (SparseMatrixR::InnerIterator it(A, r); it; ++it) {
      out << fmt::format("{} {} {:.17g}\n", it.row(), it.col(), it.value());
    }
  }
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) out << fmt::format("{:.17g}\n", v[k]);
}

void write_solution_csv(std::ostream& out, const DiscreteSolution& sol) {
  const auto& m = sol.domain->mask;
  out << "x1,x2,u\n";
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.columns(); ++i) {
      const double v = sol.at(i, j);
      if (std::isnan(v)) continue;
      out << fmt::format("{:.10g},{:.10g},{:.17g}\n", m.x1(i), m.x2(j), v);
    }
  }
}

}  // namespace hopflab
