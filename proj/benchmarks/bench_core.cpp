#include <benchmark/benchmark.h>

#include "hopflab/barriers.hpp"
#include "hopflab/convex_geometry.hpp"
#include "hopflab/elliptic_operator.hpp"
#include "hopflab/fd_solver.hpp"
#include "hopflab/modulus.hpp"

using namespace hopflab;

static void BM_DiniIntegralLog2(benchmark::State& state) {
  const auto sigma = Modulus::preset("log2");
  for (auto _ : state) benchmark::DoNotOptimize(dini_integral(sigma, 1e-6).quadrature);
}
BENCHMARK(BM_DiniIntegralLog2);

static void BM_DiniClassify(benchmark::State& state) {
  const auto sigma = Modulus::preset("log1");
  for (auto _ : state) benchmark::DoNotOptimize(dini_classify(sigma, 40).verdict);
}
BENCHMARK(BM_DiniClassify);

static void BM_DeltaMaxAffine(benchmark::State& state) {
  const auto F = random_max_affine(3, static_cast<int>(state.range(0)), 1.0, 7);
  for (auto _ : state) benchmark::DoNotOptimize(delta(F, 0.25));
}
BENCHMARK(BM_DeltaMaxAffine)->Arg(4)->Arg(16)->Arg(64);

static void BM_CylinderCertificate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cylinder_barrier_certificate(0.5, 3, 1000, 0).bracket_max);
}
BENCHMARK(BM_CylinderCertificate);

static void BM_SolveLog1(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto F = BoundaryProfile::preset("log1", 0.5, 2);
  const auto op = EllipticOperator::preset("laplace", 2);
  const auto dom = discrete_domain(F, GridSpec{h, 0.5, 0.0, 0.0});
  const auto sys = discretize(op, dom, boundary_data("linear", F));
  for (auto _ : state) benchmark::DoNotOptimize(solve(sys).residual_norm);
  state.counters["unknowns"] = static_cast<double>(dom->unknowns());
}
BENCHMARK(BM_SolveLog1)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
