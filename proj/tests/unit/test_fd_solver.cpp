#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hopflab/error.hpp"
#include "hopflab/fd_solver.hpp"

using namespace hopflab;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no hopflab::Error thrown";
  return ErrorCode::ConfigError;
}

double max_abs_diff_from(const DiscreteSolution& sol, const ScalarField2D& exact) {
  const auto& m = sol.domain->mask;
  double err = 0.0;
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.columns(); ++i) {
      const double v = sol.at(i, j);
      if (std::isnan(v)) continue;
      err = std::max(err, std::abs(v - exact(m.x1(i), m.x2(j))));
    }
  }
  return err;
}

}  // namespace

TEST(Discretize, HalfSpaceGivesFivePointRows) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 16, 0.5});
  EXPECT_TRUE(dom->mask.cut_table().empty());
  const auto sys = discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F));
  const double h2 = 1.0 / (1.0 / 256);
  for (Eigen::Index r = 0; r < sys.A.outerSize(); ++r) {
    int off = 0;
    for (SparseMatrixR::InnerIterator it(sys.A, r); it; ++it) {
      if (it.col() == r) {
        EXPECT_NEAR(it.value(), 4.0 * h2, 1e-9 * h2);
      } else {
        EXPECT_NEAR(it.value(), -h2, 1e-9 * h2);
        ++off;
      }
    }
    EXPECT_LE(off, 4);
  }
  EXPECT_TRUE(mmatrix_check(sys.A).ok());
}

TEST(Discretize, CurvedBoundaryArmsAndMMatrix) {
  const auto F = BoundaryProfile::preset("power:2", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 64, 0.5});
  const auto& cuts = dom->mask.cut_table();
  ASSERT_FALSE(cuts.empty());
  for (const auto& [node, arms] : cuts) {
    for (double t : arms) {
      EXPECT_GT(t, 0.0);
      EXPECT_LE(t, 1.0);
    }
  }
  const auto sys = discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F));
  const auto rep = mmatrix_check(sys.A);
  EXPECT_TRUE(rep.offdiag_nonpositive);
  EXPECT_TRUE(rep.diagonally_dominant);
  EXPECT_TRUE(rep.strict_somewhere);
}

TEST(Discretize, ShortleyWellerRowMatchesHandAssembly) {
  const auto F = BoundaryProfile::preset("power:2", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 64, 0.5});
  const auto sys = discretize(EllipticOperator::preset("laplace"), dom, boundary_data("zero", F));
  const auto& m = dom->mask;
  const double h = m.h();
  int checked = 0;
  for (const auto& [node, arms] : m.cut_table()) {
    const long row = dom->unknown_of_node[node];
    if (row < 0) continue;
    const double hp = arms[0] * h, hm = arms[1] * h, kp = arms[2] * h, km = arms[3] * h;
    const double diag = 2.0 / (hp * hm) + 2.0 / (kp * km);
    EXPECT_NEAR(sys.A.coeff(row, row), diag, 1e-9 * diag);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Discretize, AnisotropicDiagonalIsMMatrix) {
  const auto F = BoundaryProfile::preset("power:2", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 32, 0.5});
  const auto sys = discretize(EllipticOperator::preset("aniso:0.5,2"), dom, boundary_data("linear", F));
  EXPECT_TRUE(mmatrix_check(sys.A).ok());
}

TEST(Discretize, MixedTermWithinConditionIsMMatrix) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  for (double c : {0.3, -0.3}) {
    EllipticOperator op("mixed", 2, 0.5, [c](const double*, double* a) {
      a[0] = 1.0;
      a[1] = c;
      a[2] = c;
      a[3] = 1.0;
    });
    const auto dom = discrete_domain(F, GridSpec{1.0 / 32, 0.5});
    EXPECT_TRUE(mmatrix_check(discretize(op, dom, boundary_data("linear", F)).A).ok());
  }
}

TEST(Discretize, Errors) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 16, 0.5});
  EllipticOperator steep("steep", 2, 0.2, [](const double*, double* a) {
    a[0] = 4.0;
    a[1] = 1.5;
    a[2] = 1.5;
    a[3] = 1.0;
  });
  EXPECT_EQ(code_of([&] { discretize(steep, dom, boundary_data("linear", F)); }),
            ErrorCode::StencilMonotonicityViolated);
  EllipticOperator bad("bad", 2, 0.5, [](const double*, double* a) {
    a[0] = 4.0;
    a[1] = 0.0;
    a[2] = 0.0;
    a[3] = 1.0;
  });
  EXPECT_EQ(code_of([&] { discretize(bad, dom, boundary_data("linear", F)); }), ErrorCode::EllipticityViolated);
  EXPECT_EQ(code_of([&] { boundary_data("sector", F); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { boundary_data("quadratic", F); }), ErrorCode::ConfigError);
}

TEST(Solve, HalfSpaceRecoversLinearFunction) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  for (std::size_t direct : {std::size_t{1} << 20, std::size_t{0}}) {
    const auto dom = discrete_domain(F, GridSpec{1.0 / 32, 0.5});
    const auto sol = solve(discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F)),
                           SolverOptions{1e-12, 50000, direct});
    EXPECT_LT(max_abs_diff_from(sol, [](double, double x2) { return x2; }), 1e-9);
    for (double v : hopf_trace(sol, {0.5, 0.25, 1.0 / 32})) EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(Solve, LinearFunctionIsExactOnCurvedDomains) {
  // Shortley-Weller rows are exact on affine functions.
  const auto F = BoundaryProfile::preset("log1", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 64, 0.5});
  const BoundaryData bc{"affine", [](double x1, double x2) { return 1.0 + 0.3 * x1 - 2.0 * x2; }, true};
  const auto sol = solve(discretize(EllipticOperator::preset("aniso:0.5,2"), dom, bc));
  EXPECT_LT(max_abs_diff_from(sol, bc.value), 1e-9);
}

TEST(Solve, RandomDiagonallyDominantMMatrix) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = 6000;
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < n; ++r) {
    double off = 0.0;
    for (int c : {r - 1, r + 1, r - 77, r + 77}) {
      if (c < 0 || c >= n) continue;
      const double v = -U(rng);
      off += -v;
      trip.emplace_back(r, c, v);
    }
    trip.emplace_back(r, r, off + 0.01 + U(rng));
  }
  LinearSystem sys;
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.rhs = Eigen::VectorXd::NullaryExpr(n, [&] { return U(rng); });
  sys.guess = Eigen::VectorXd::Zero(n);
  auto dom = std::make_shared<DiscreteDomain>();
  dom->node_of_unknown.resize(n);
  for (int k = 0; k < n; ++k) dom->node_of_unknown[k] = static_cast<std::size_t>(k);
  sys.domain = dom;
  sys.boundary_values.assign(n, 0.0);
  ASSERT_TRUE(mmatrix_check(sys.A).ok());
  const auto sol = solve(sys);
  EXPECT_EQ(sol.method, "bicgstab+diag");
  EXPECT_LE((sys.rhs - sys.A * sol.values).norm() / sys.rhs.norm(), 1e-10);
}

TEST(Solve, EmptyInteriorFailsInDiscretize) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  EXPECT_THROW(
      {
        const auto dom = discrete_domain(F, GridSpec{0.5, 0.5});
        discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F));
      },
      Error);
}

TEST(Solve, IterationBudgetExhaustedIsNoConvergence) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 128, 0.5});
  const auto sys = discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F));
  EXPECT_EQ(code_of([&] { solve(sys, SolverOptions{1e-14, 3, 0}); }), ErrorCode::NoConvergence);
}

TEST(Solve, DiscreteMaximumPrincipleOnPresets) {
  for (const char* prof : {"flat", "cone:0.5", "power:0.5", "power:2", "log1", "log2", "wedge:2pi/3"}) {
    const auto F = BoundaryProfile::preset(prof, 0.5);
    for (const char* opid : {"laplace", "aniso:0.5,2", "checker:0.5", "drift:1"}) {
      const auto dom = discrete_domain(F, GridSpec{1.0 / 64, 0.5});
      const auto sol = solve(discretize(EllipticOperator::preset(opid), dom, boundary_data("linear", F)));
      double top = 0.0;
      for (std::size_t n = 0; n < sol.nodal.size(); ++n) {
        const auto k = dom->mask.kind(n);
        if (k == NodeKind::BoxEdge || k == NodeKind::Boundary) top = std::max(top, sol.nodal[n]);
      }
      for (std::size_t n : dom->node_of_unknown) {
        EXPECT_GE(sol.nodal[n], -1e-12) << prof << " " << opid;
        EXPECT_LE(sol.nodal[n], top + 1e-12) << prof << " " << opid;
      }
    }
  }
}

TEST(Solve, ComparisonPrinciple) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 64, 0.5});
  const auto op = EllipticOperator::preset("checker:0.5");
  const BoundaryData low{"low", [](double x1, double x2) { return x2 * (1.0 + 0.5 * std::sin(7 * x1)); }, false};
  const BoundaryData high{"high", [](double x1, double x2) { return x2 * (1.6 + 0.5 * std::sin(7 * x1)); }, false};
  const auto v = solve(discretize(op, dom, low));
  const auto w = solve(discretize(op, dom, high));
  for (std::size_t n : dom->node_of_unknown) EXPECT_LE(v.nodal[n], w.nodal[n] + 1e-12);
}

TEST(HopfTrace, WedgeTraceFollowsSectorExponent) {
  const double theta = 2.0 * std::numbers::pi / 3.0;
  const auto F = BoundaryProfile::preset("wedge:2pi/3", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 256, 0.5});
  const auto sol = solve(discretize(EllipticOperator::preset("laplace"), dom, boundary_data("sector", F)));
  const std::vector<double> ys = {0.25, 0.125, 0.0625, 0.03125};
  const auto tr = hopf_trace(sol, ys);
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double exact = sector_harmonic(theta, 0.0, ys[k]) / ys[k];
    EXPECT_NEAR(tr[k], exact, 2e-3 * exact);
    EXPECT_NEAR(exact, std::sqrt(ys[k]), 1e-12);
  }
  for (std::size_t k = 1; k < ys.size(); ++k) EXPECT_NEAR(tr[k] / tr[k - 1], std::sqrt(0.5), 5e-3);
}

TEST(HopfTrace, Errors) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 16, 0.5});
  const auto sol = solve(discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F)));
  EXPECT_EQ(code_of([&] { hopf_trace(sol, {0.1}); }), ErrorCode::Misaligned);
  EXPECT_EQ(code_of([&] { hopf_trace(sol, {2.0}); }), ErrorCode::Misaligned);
  EXPECT_EQ(code_of([&] { hopf_trace(sol, {0.0}); }), ErrorCode::DomainError);
}

TEST(Oscillation, ClosedFormQuotient) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 64, 0.5});
  const BoundaryData lin{"lin", [](double, double x2) { return x2; }, true};
  const BoundaryData bilin{"bilin", [](double x1, double x2) { return x2 + 0.1 * x1 * x2; }, true};
  const auto op = EllipticOperator::preset("laplace");
  const auto u0 = solve(discretize(op, dom, lin));
  const auto u1 = solve(discretize(op, dom, bilin));
  double prev = 0.0;
  for (double r : {1.0 / 16, 0.125, 0.25, 0.375}) {
    EXPECT_NEAR(oscillation(u0, r), 0.0, 1e-12);
    const double o = oscillation(u1, r);
    EXPECT_NEAR(o, 0.2 * r, 1e-9);
    EXPECT_GE(o, prev);
    prev = o;
  }
}

TEST(Oscillation, MonotoneInRadiusOnCurvedDomain) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 128, 0.5});
  const auto sol = solve(discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F)));
  double prev = 0.0;
  for (double r = 1.0 / 32; r <= 0.5; r *= 2.0) {
    const double o = oscillation(sol, r);
    EXPECT_GE(o, prev);
    prev = o;
  }
  EXPECT_EQ(code_of([&] { oscillation(sol, 1e-4); }), ErrorCode::EmptyRegion);
  EXPECT_EQ(code_of([&] { oscillation(sol, 0.75); }), ErrorCode::DomainError);
}

TEST(Convergence, ExactForLinearData) {
  const auto F = BoundaryProfile::preset("flat", 1.0);
  const auto st = convergence_study(EllipticOperator::preset("laplace"), F, [](double, double x2) { return x2; },
                                    {1.0 / 8, 1.0 / 16, 1.0 / 32}, 1.0);
  EXPECT_TRUE(st.exact);
  EXPECT_TRUE(std::isnan(st.order));
}

TEST(Convergence, ManufacturedHarmonicIsSecondOrder) {
  const auto F = BoundaryProfile::preset("flat", 1.0);
  const auto exact = [](double x1, double x2) {
    return std::sin(std::numbers::pi * x1) * std::sinh(std::numbers::pi * x2) / std::sinh(std::numbers::pi);
  };
  const auto st = convergence_study(EllipticOperator::preset("laplace"), F, exact,
                                    {1.0 / 32, 1.0 / 64, 1.0 / 128}, 1.0, 1.0);
  EXPECT_FALSE(st.exact);
  EXPECT_NEAR(st.order, 2.0, 0.15);
}

TEST(Convergence, CurvedBoundaryStaysSecondOrder) {
  const auto F = BoundaryProfile::preset("power:2", 1.0);
  const auto exact = [](double x1, double x2) { return std::exp(x1) * std::cos(x2); };
  const auto st = convergence_study(EllipticOperator::preset("laplace"), F, exact,
                                    {1.0 / 16, 1.0 / 32, 1.0 / 64}, 1.0);
  EXPECT_GE(st.order, 1.5);
}

TEST(Convergence, WedgeOrderAtLeastOne) {
  const double theta = 2.0 * std::numbers::pi / 3.0;
  const auto F = BoundaryProfile::preset("wedge:2pi/3", 1.0);
  const auto st =
      convergence_study(EllipticOperator::preset("laplace"), F,
                        [theta](double x1, double x2) { return sector_harmonic(theta, x1, x2); },
                        {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}, 1.0);
  EXPECT_GE(st.order, 1.0);
}

TEST(Convergence, InputErrors) {
  const auto F = BoundaryProfile::preset("flat", 1.0);
  const auto op = EllipticOperator::preset("laplace");
  const auto u = [](double, double x2) { return x2; };
  EXPECT_EQ(code_of([&] { convergence_study(op, F, u, {0.25, 0.125}, 1.0); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { convergence_study(op, F, u, {0.25, 0.25, 0.125}, 1.0); }), ErrorCode::DomainError);
}

TEST(Domain, HalfDiscCap) {
  const auto F = BoundaryProfile::preset("flat", 1.0);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 32, 1.0, 1.0, 1.0});
  const auto& m = dom->mask;
  for (std::size_t n : dom->node_of_unknown) {
    const int i = static_cast<int>(n % static_cast<std::size_t>(m.columns()));
    const int j = static_cast<int>(n / static_cast<std::size_t>(m.columns()));
    EXPECT_LT(std::hypot(m.x1(i), m.x2(j)), 1.0);
  }
  // An arm cut by the disc ends on the circle, and its data is the bc value.
  int outer = 0;
  for (const auto& [node, arms] : m.cut_table()) {
    const int i = static_cast<int>(node % static_cast<std::size_t>(m.columns()));
    const int j = static_cast<int>(node / static_cast<std::size_t>(m.columns()));
    for (int d = 0; d < 8; ++d) {
      if (arms[d] >= 1.0 || m.arm_hits_graph(node, d)) continue;
      const double px = m.x1(i) + arms[d] * kLatticeDirs[d][0] * m.h();
      const double py = m.x2(j) + arms[d] * kLatticeDirs[d][1] * m.h();
      EXPECT_NEAR(std::hypot(px, py), 1.0, 1e-10);
      ++outer;
    }
  }
  EXPECT_GT(outer, 0);
  // u = x2 is discrete-harmonic and exact on the half disc.
  const auto sol = solve(discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F)));
  EXPECT_LT(max_abs_diff_from(sol, [](double, double x2) { return x2; }), 1e-9);
}

TEST(Dump, FormatsRoundTrip) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const auto dom = discrete_domain(F, GridSpec{1.0 / 16, 0.5});
  const auto sys = discretize(EllipticOperator::preset("laplace"), dom, boundary_data("linear", F));
  std::ostringstream coo;
  write_coo(coo, sys.A);
  std::istringstream in(coo.str());
  long r = 0, c = 0;
  double v = 0.0;
  Eigen::Index count = 0;
  while (in >> r >> c >> v) {
    EXPECT_DOUBLE_EQ(sys.A.coeff(r, c), v);
    ++count;
  }
  EXPECT_EQ(count, sys.A.nonZeros());

  std::ostringstream vec;
  write_vector(vec, sys.rhs);
  std::istringstream vin(vec.str());
  for (Eigen::Index k = 0; k < sys.rhs.size(); ++k) {
    ASSERT_TRUE(vin >> v);
    EXPECT_DOUBLE_EQ(v, sys.rhs[k]);
  }

  const auto sol = solve(sys);
  std::ostringstream csv;
  write_solution_csv(csv, sol);
  std::istringstream cin(csv.str());
  std::string line;
  std::getline(cin, line);
  EXPECT_EQ(line, "x1,x2,u");
  int rows = 0;
  while (std::getline(cin, line)) {
    double x1 = 0, x2 = 0, u = 0;
    char comma = 0;
    std::istringstream ls(line);
    ls >> x1 >> comma >> x2 >> comma >> u;
    EXPECT_NEAR(u, x2, 1e-12);
    ++rows;
  }
  EXPECT_GT(rows, 0);
}
