#pragma once

#include <functional>
#include <span>
#include <vector>

namespace hopflab::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule with n points, cached per n.
const Rule& gauss_legendre(int n);

struct KronrodResult {
  double value;
  double error;
};

// Gauss-Kronrod 7/15 on [a, b].
KronrodResult gk15(const std::function<double(double)>& f, double a, double b);

// Adaptive bisection of gk15 until the local error estimate drops below
// max(abs_tol, rel_tol * |value|) or max_depth is reached.
KronrodResult adaptive_gk15(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, double abs_tol, int max_depth = 30);

}  // namespace hopflab::quad
