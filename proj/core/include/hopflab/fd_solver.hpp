#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hopflab/convex_geometry.hpp"
#include "hopflab/elliptic_operator.hpp"

namespace hopflab {

using ScalarField2D = std::function<double(double x1, double x2)>;

struct BoundaryData {
  std::string kind;
  ScalarField2D value;
  // Also impose `value` on the graph instead of u = 0.
  bool on_graph = false;
};

// "linear" (u = x2), "zero", "sector" (exact harmonic data of a wedge profile).
BoundaryData boundary_data(std::string_view kind, const BoundaryProfile& F);

// Exact solution vanishing on the sides of the wedge with opening theta whose
// axis is the x2 axis: rho^{pi/theta} sin(pi (psi - pi/2 + theta/2) / theta).
double sector_harmonic(double theta, double x1, double x2);

struct DiscreteDomain {
  DomainMask mask;
  std::vector<long> unknown_of_node;     // -1 for non-interior nodes
  std::vector<std::size_t> node_of_unknown;

  std::size_t unknowns() const { return node_of_unknown.size(); }
};

std::shared_ptr<const DiscreteDomain> discrete_domain(const BoundaryProfile& F, const GridSpec& grid);

using SparseMatrixR = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearSystem {
  SparseMatrixR A;
  Eigen::VectorXd rhs;
  Eigen::VectorXd guess;
  std::shared_ptr<const DiscreteDomain> domain;
  std::vector<double> boundary_values;  // per node; NaN where not prescribed
};

LinearSystem discretize(const EllipticOperator& op, std::shared_ptr<const DiscreteDomain> dom, const BoundaryData& bc,
                        const ScalarField2D& source = {});

struct MMatrixReport {
  bool offdiag_nonpositive = true;
  bool diagonally_dominant = true;
  bool strict_somewhere = false;
  double worst_offdiag = 0.0;
  double worst_row_slack = 0.0;
  bool ok() const { return offdiag_nonpositive && diagonally_dominant && strict_somewhere; }
};

MMatrixReport mmatrix_check(const SparseMatrixR& A, double tol = 1e-12);

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 50000;
  std::size_t direct_below = 4096;
};

struct DiscreteSolution {
  Eigen::VectorXd values;            // interior unknowns
  std::vector<double> nodal;         // all nodes; NaN outside the closed domain
  double residual_norm = 0.0;        // relative, ||b - A x|| / ||b||
  int iterations = 0;
  std::string method;
  std::shared_ptr<const DiscreteDomain> domain;

  double at(int i, int j) const { return nodal[domain->mask.node(i, j)]; }
};

DiscreteSolution solve(const LinearSystem& sys, const SolverOptions& opts = {});

std::vector<double> hopf_trace(const DiscreteSolution& sol, const std::vector<double>& heights);

// max - min of u / x2 over interior nodes with |x1| <= r, 2h <= x2 <= r.
double oscillation(const DiscreteSolution& sol, double r);

struct ConvergenceStudy {
  std::vector<double> h;
  std::vector<double> max_error;
  double order = 0.0;
  bool exact = false;
};

ConvergenceStudy convergence_study(const EllipticOperator& op, const BoundaryProfile& F, const ScalarField2D& exact,
                                   const std::vector<double>& h_list, double R0, double H = 0.0,
                                   const SolverOptions& opts = {});

void write_coo(std::ostream& out, const SparseMatrixR& A);
void write_vector(std::ostream& out, const Eigen::VectorXd& v);
void write_solution_csv(std::ostream& out, const DiscreteSolution& sol);

}  // namespace hopflab
