#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hopflab/convex_geometry.hpp"
#include "hopflab/error.hpp"

using hopflab::AffinePiece;
using hopflab::BoundaryProfile;
using hopflab::ErrorCode;
using hopflab::NodeKind;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const hopflab::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected hopflab::Error";
  return ErrorCode::ConfigError;
}

Eigen::VectorXd v1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

BoundaryProfile two_piece() {
  return BoundaryProfile::max_affine({{v1(0.0), 0.0}, {v1(2.0), -0.1}}, 0.5);
}

// max F(x')/|x'| over a dense grid of 0 < |x_1| <= r (n = 2).
double brute_delta_1d(const BoundaryProfile& F, double r, int n = 200000) {
  double best = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double x = r * k / n;
    best = std::max({best, F.eval_1d(x) / x, F.eval_1d(-x) / x});
  }
  return best;
}

// Largest |p_i| among pieces that attain the max at some sampled point of
// the ball |x'| <= r; a lower bound of delta1.
double brute_delta1(const BoundaryProfile& F, double r, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const int d = F.dim() - 1;
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = normal(rng);
    x *= r * std::pow(unit(rng), 1.0 / d) / x.norm();
    const double fx = F(x);
    for (const auto& p : F.pieces()) {
      if (p.slope.dot(x) + p.offset >= fx - 1e-15) best = std::max(best, p.slope.norm());
    }
  }
  return best;
}

}  // namespace

TEST(Profiles, PresetsPassInvariants) {
  for (const char* id : {"flat", "cone:0.7", "power:0.5", "power:1", "log1", "log2", "wedge:2pi/3"}) {
    const auto F = BoundaryProfile::preset(id, 0.5);
    EXPECT_TRUE(hopflab::check_invariants(F).ok()) << id;
    EXPECT_DOUBLE_EQ(F.eval_1d(0.0), 0.0) << id;
  }
  EXPECT_TRUE(hopflab::check_invariants(BoundaryProfile::preset("log1", 0.5, 3)).ok());
}

TEST(Profiles, RandomMaxAffineAreConvexAndAnchored) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (int dim : {2, 3}) {
      const auto F = hopflab::random_max_affine(dim, 5, 0.5, seed);
      EXPECT_TRUE(hopflab::check_invariants(F, 500, seed).ok());
    }
  }
}

TEST(Profiles, ParseAngle) {
  EXPECT_NEAR(hopflab::parse_angle("2pi/3"), 2 * std::numbers::pi / 3, 1e-15);
  EXPECT_NEAR(hopflab::parse_angle("pi/2"), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(hopflab::parse_angle("0.5*pi"), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(hopflab::parse_angle("1.2"), 1.2, 1e-15);
  EXPECT_EQ(code_of([] { hopflab::parse_angle("two pi"); }), ErrorCode::ConfigError);
}

TEST(Profiles, RejectsBadInput) {
  EXPECT_EQ(code_of([] { BoundaryProfile::preset("blob", 0.5); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { BoundaryProfile::preset("wedge:4", 0.5); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { BoundaryProfile::max_affine({{v1(1.0), 0.2}}, 0.5); }), ErrorCode::DomainError);
}

TEST(Profiles, MaxAffineCsv) {
  std::istringstream in("p1,c\n0,0\n2,-0.1\n");
  const auto F = BoundaryProfile::max_affine_csv(in, 0.5);
  EXPECT_EQ(F.dim(), 2);
  EXPECT_DOUBLE_EQ(F.eval_1d(0.1), 0.1);
  EXPECT_DOUBLE_EQ(F.eval_1d(-0.3), 0.0);
}

TEST(Profiles, DeltaModuli) {
  EXPECT_FALSE(BoundaryProfile::preset("flat", 0.5).delta_modulus().has_value());
  EXPECT_EQ(BoundaryProfile::preset("log1", 0.5).delta_modulus()->id(), "log1");
  EXPECT_EQ(BoundaryProfile::preset("power:0.5", 0.5).delta_modulus()->id(), "power:0.5");
  EXPECT_EQ(BoundaryProfile::preset("power:2", 0.5).delta_modulus()->id(), "linear");
  EXPECT_EQ(BoundaryProfile::preset("cone:0.3", 0.5).delta_modulus()->id(), "const");
  // The profile modulus is delta(R0 t)/delta(R0).
  const auto F = BoundaryProfile::preset("log2", 0.5);
  const auto m = *F.delta_modulus();
  for (double t : {0.01, 0.1, 0.3}) EXPECT_NEAR(m(t), hopflab::delta(F, 0.5 * t) / hopflab::delta(F, 0.5), 1e-14);
  const auto tab = *two_piece().delta_modulus();
  EXPECT_TRUE(hopflab::check_invariants(tab).ok());
}

TEST(Delta, Examples) {
  EXPECT_DOUBLE_EQ(hopflab::delta(BoundaryProfile::preset("cone:0.7", 0.5), 0.1), 0.7);
  const auto sq = BoundaryProfile::preset("power:1", 0.5);
  EXPECT_NEAR(hopflab::delta(sq, 0.25), 0.25, 1e-15);
  EXPECT_NEAR(brute_delta_1d(sq, 0.25), 0.25, 1e-12);
  EXPECT_NEAR(hopflab::delta(two_piece(), 0.1), 1.0, 1e-15);
  EXPECT_NEAR(brute_delta_1d(two_piece(), 0.1), 1.0, 1e-12);
}

TEST(Delta, RadialMatchesBruteForce) {
  for (const char* id : {"cone:0.4", "power:0.5", "power:2", "log1", "log2", "wedge:pi/2"}) {
    const auto F = BoundaryProfile::preset(id, 0.5);
    for (double r : {0.5, 0.2, 0.05, 0.01}) {
      EXPECT_NEAR(hopflab::delta(F, r), brute_delta_1d(F, r), 1e-10) << id << " r=" << r;
    }
  }
}

TEST(Delta, MaxAffineMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto F = hopflab::random_max_affine(2, 4, 0.5, seed);
    for (double r : {0.5, 0.125, 0.03}) EXPECT_NEAR(hopflab::delta(F, r), brute_delta_1d(F, r, 100000), 1e-9);
  }
}

TEST(Delta, DomainErrors) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  EXPECT_EQ(code_of([&] { hopflab::delta(F, 0.0); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { hopflab::delta(F, 0.6); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { hopflab::delta1(F, -1.0); }), ErrorCode::DomainError);
}

TEST(Delta1, Examples) {
  EXPECT_DOUBLE_EQ(hopflab::delta1(BoundaryProfile::preset("cone:0.7", 0.5), 0.1), 0.7);
  const auto sq = BoundaryProfile::preset("power:1", 0.5);
  const double eta = 1e-7;
  const double fd = (sq.eval_1d(0.25) - sq.eval_1d(0.25 - eta)) / eta;
  EXPECT_NEAR(hopflab::delta1(sq, 0.25), 0.5, 1e-15);
  EXPECT_NEAR(fd, 0.5, 1e-6);
  EXPECT_DOUBLE_EQ(hopflab::delta1(two_piece(), 0.1), 2.0);
  EXPECT_DOUBLE_EQ(brute_delta1(two_piece(), 0.1, 10000, 1), 2.0);
  // Below the kink at x_1 = 0.05 only the zero piece is active.
  EXPECT_DOUBLE_EQ(hopflab::delta1(two_piece(), 0.04), 0.0);
}

TEST(Delta1, RandomProfilesBracketedByOracle) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    for (int dim : {2, 3}) {
      const auto F = hopflab::random_max_affine(dim, 5, 0.5, seed);
      for (double r : {0.125, 0.0625}) {
        const double d1 = hopflab::delta1(F, r);
        EXPECT_GE(d1, brute_delta1(F, r, 4000, seed) - 1e-12);
        EXPECT_LE(d1, 2.0 * hopflab::delta(F, 2 * r) + 1e-10);
      }
    }
  }
}

TEST(DeltaMonotone, NondecreasingInR) {
  std::vector<BoundaryProfile> profiles;
  for (const char* id : {"cone:0.4", "power:0.5", "log1", "log2"}) profiles.push_back(BoundaryProfile::preset(id, 0.5));
  for (std::uint64_t s = 0; s < 10; ++s) profiles.push_back(hopflab::random_max_affine(2 + s % 2, 4, 0.5, s));
  for (const auto& F : profiles) {
    double pd = 0.0, pd1 = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double r = 0.5 * k / 100.0;
      const double d = hopflab::delta(F, r);
      const double d1 = hopflab::delta1(F, r);
      EXPECT_GE(d, pd - 1e-12) << F.id();
      EXPECT_GE(d1, pd1 - 1e-12) << F.id();
      pd = d;
      pd1 = d1;
    }
  }
}

TEST(Sandwich, ClosedForms) {
  const auto sq = hopflab::sandwich_check(BoundaryProfile::preset("power:1", 0.5), 0.1);
  EXPECT_NEAR(sq.delta_r, 0.1, 1e-15);
  EXPECT_NEAR(sq.delta1_r, 0.2, 1e-15);
  EXPECT_NEAR(2 * sq.delta_2r, 0.4, 1e-15);
  EXPECT_TRUE(sq.holds());
  const auto cone = hopflab::sandwich_check(BoundaryProfile::preset("cone:0.3", 0.5), 0.1);
  EXPECT_DOUBLE_EQ(cone.lower_slack, 0.0);
  EXPECT_DOUBLE_EQ(cone.upper_slack, 0.3);
  EXPECT_EQ(code_of([] { hopflab::sandwich_check(BoundaryProfile::preset("log1", 0.5), 0.3); }), ErrorCode::DomainError);
}

TEST(Sandwich, SeededRandomProfiles) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto F = hopflab::random_max_affine(2 + seed % 2, 6, 0.5, seed);
    for (double r : {0.125, 0.0625}) EXPECT_TRUE(hopflab::sandwich_check(F, r).holds()) << seed;
  }
}

TEST(ExtremalFrame, FlatIsIdentity) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const auto fr = hopflab::extremal_frame(F, 0.1);
  EXPECT_TRUE(fr.degenerate);
  EXPECT_DOUBLE_EQ(fr.phi, 0.0);
  EXPECT_TRUE(fr.rotation.isApprox(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_EQ(code_of([&] { hopflab::extremal_frame(F, 0.1, true); }), ErrorCode::DegenerateProfile);
}

TEST(ExtremalFrame, Parabola) {
  const auto fr = hopflab::extremal_frame(BoundaryProfile::preset("power:1", 0.5), 0.1);
  EXPECT_NEAR(fr.x_star[0], 0.1, 1e-15);
  EXPECT_NEAR(fr.x_star[1], 0.01, 1e-15);
  EXPECT_NEAR(std::tan(fr.phi), 0.2, 1e-14);
  // y_1 runs outward along the tangent; y_2 is the inward normal.
  EXPECT_GT(fr.rotation(0, 0), 0.0);
  EXPECT_GT(fr.rotation(1, 1), 0.0);
}

TEST(ExtremalFrame, Log1TangentMatchesFiniteDifference) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  const auto fr = hopflab::extremal_frame(F, 0.1);
  const double eta = 1e-7;
  const double fd = (F.eval_1d(0.1) - F.eval_1d(0.1 - eta)) / eta;
  EXPECT_NEAR(std::tan(fr.phi), fd, 1e-6);
  EXPECT_LE(std::tan(fr.phi), hopflab::delta1(F, 0.1) + 1e-12);
  EXPECT_NEAR(fr.x_star[1], 0.1 * hopflab::delta(F, 0.1), 1e-15);
}

TEST(ExtremalFrame, OrthogonalAndSupporting) {
  std::vector<BoundaryProfile> profiles;
  for (const char* id : {"cone:0.4", "power:0.5", "log1", "log2"}) {
    profiles.push_back(BoundaryProfile::preset(id, 0.5));
    profiles.push_back(BoundaryProfile::preset(id, 0.5, 3));
  }
  for (std::uint64_t s = 0; s < 10; ++s) profiles.push_back(hopflab::random_max_affine(2 + s % 2, 4, 0.5, s));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (const auto& F : profiles) {
    for (double r : {0.25, 0.1, 0.02}) {
      const auto fr = hopflab::extremal_frame(F, r);
      const int n = F.dim();
      EXPECT_LE((fr.rotation.transpose() * fr.rotation - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-10);
      EXPECT_LE(std::tan(fr.phi), hopflab::delta1(F, r) + 1e-12) << F.id();
      EXPECT_NEAR(fr.x_star[n - 1], r * hopflab::delta(F, r), 1e-12);
      for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n - 1; ++i) y[i] = u(rng);
        const Eigen::VectorXd x = fr.to_x(y);
        EXPECT_GE(F(Eigen::VectorXd(x.head(n - 1))), x[n - 1] - 1e-12) << F.id();
      }
    }
  }
}

TEST(BallInclusion, HalfSpace) {
  const auto F = BoundaryProfile::preset("flat", 0.5);
  const double r = 0.1;
  const auto res = hopflab::ball_inclusion_check(F, hopflab::extremal_frame(F, r), 0.5, 400);
  EXPECT_TRUE(res.inside);
  EXPECT_NEAR(res.margin, 0.5 * r / 8, 1e-15);
}

TEST(BallInclusion, SmallParabolaScale) {
  const auto F = BoundaryProfile::preset("power:1", 0.5);
  const double r = 0.01;
  const auto fr = hopflab::extremal_frame(F, r);
  const auto res = hopflab::ball_inclusion_check(F, fr, 0.5, 400);
  EXPECT_TRUE(res.claim_inequality_excludes_failure);
  EXPECT_TRUE(res.inside);
  EXPECT_GT(res.margin, 0.0);
}

TEST(BallInclusion, KinkJustBeyondExtremalPoint) {
  const auto F = BoundaryProfile::max_affine({{v1(0.0), 0.0}, {v1(0.1), 0.0}, {v1(10.0), -1.188}}, 0.5);
  const double r = 0.1;
  const auto fr = hopflab::extremal_frame(F, r);
  const auto res = hopflab::ball_inclusion_check(F, fr, 0.5, 400);
  EXPECT_FALSE(res.claim_inequality_excludes_failure);
  EXPECT_FALSE(res.inside);
  // Independent oracle: dense sampling of the closed ball around z0.
  double oracle = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 720; ++a) {
    for (int k = 0; k <= 20; ++k) {
      const double t = 2 * std::numbers::pi * a / 720;
      const double rad = res.rho0 * k / 20;
      const double x1 = res.z0[0] + rad * std::cos(t);
      const double x2 = res.z0[1] + rad * std::sin(t);
      oracle = std::min(oracle, x2 - F.eval_1d(x1));
    }
  }
  EXPECT_LT(oracle, 0.0);
}

TEST(BallInclusion, ClaimInequalityImpliesInside) {
  std::vector<BoundaryProfile> profiles;
  for (const char* id : {"cone:0.05", "power:0.5", "power:1", "log2", "log1"}) profiles.push_back(BoundaryProfile::preset(id, 0.5));
  for (std::uint64_t s = 0; s < 20; ++s) profiles.push_back(hopflab::random_max_affine(2, 4, 0.5, s));
  int implied = 0;
  for (const auto& F : profiles) {
    for (double r : {0.2, 0.05, 0.01, 1e-3, 1e-4}) {
      for (double nu : {0.25, 0.5, 1.0}) {
        const auto res = hopflab::ball_inclusion_check(F, hopflab::extremal_frame(F, r), nu, 256);
        if (res.claim_inequality_excludes_failure) {
          ++implied;
          EXPECT_TRUE(res.inside) << F.id() << " r=" << r << " nu=" << nu;
        }
      }
    }
  }
  EXPECT_GT(implied, 10);
}

TEST(BallInclusion, Errors) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  auto fr = hopflab::extremal_frame(F, 0.1);
  fr.r = 0.2;
  EXPECT_EQ(code_of([&] { hopflab::ball_inclusion_check(F, fr, 0.5, 10); }), ErrorCode::FrameMismatch);
  const auto steep = BoundaryProfile::preset("cone:2", 0.5);
  const auto res = hopflab::ball_inclusion_check(steep, hopflab::extremal_frame(steep, 0.1), 0.5, 64);
  EXPECT_TRUE(res.smallness_violated);
}

TEST(DomainMask, FlatHasNoCuts) {
  const auto mask = hopflab::domain_mask(BoundaryProfile::preset("flat", 0.5), {1.0 / 32, 0.5, 0.0});
  EXPECT_TRUE(mask.cut_table().empty());
  for (int j = 0; j < mask.rows(); ++j) {
    for (int i = 0; i < mask.columns(); ++i) {
      const auto k = mask.kind(i, j);
      if (j == 0) {
        EXPECT_EQ(k, NodeKind::Boundary);
      } else if (i == 0 || i == mask.columns() - 1 || j == mask.rows() - 1) {
        EXPECT_EQ(k, NodeKind::BoxEdge);
      } else {
        EXPECT_EQ(k, NodeKind::Interior);
        for (int d = 0; d < 8; ++d) EXPECT_EQ(mask.arm(mask.node(i, j), d), 1.0);
      }
    }
  }
}

TEST(DomainMask, ParabolaNodeOnBoundary) {
  const double h = 1.0 / 128;
  const auto mask = hopflab::domain_mask(BoundaryProfile::preset("power:1", 0.5), {h, 0.5, 0.0});
  const int i = mask.half_width() + 32;
  const int j = 8;
  EXPECT_DOUBLE_EQ(mask.x1(i), 0.25);
  EXPECT_DOUBLE_EQ(mask.x2(j), 0.0625);
  EXPECT_EQ(mask.kind(i, j), NodeKind::Boundary);
}

TEST(DomainMask, VerticalArmsMatchExactCrossing) {
  const double h = 1.0 / 64;
  const auto F = BoundaryProfile::preset("power:1", 0.5);
  const auto mask = hopflab::domain_mask(F, {h, 0.5, 0.0});
  int checked = 0;
  for (const auto& [node, arms] : mask.cut_table()) {
    const int i = static_cast<int>(node % mask.columns());
    const int j = static_cast<int>(node / mask.columns());
    if (mask.kind(i, j - 1) != NodeKind::Exterior) continue;
    const double x = mask.x1(i);
    EXPECT_NEAR(arms[3], (mask.x2(j) - x * x) / h, 1e-10);
    // Horizontal crossing toward the curve: x^2 = y.
    const double y = mask.x2(j);
    const int outward = x > 0 ? 0 : 1;
    if (mask.kind(i + (x > 0 ? 1 : -1), j) == NodeKind::Exterior) {
      EXPECT_NEAR(arms[outward], (std::sqrt(y) - std::abs(x)) / h, 1e-10);
    }
    for (double a : arms) {
      EXPECT_GT(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(DomainMask, RadialProfileIsSymmetric) {
  const auto mask = hopflab::domain_mask(BoundaryProfile::preset("log1", 0.5), {1.0 / 64, 0.5, 0.0});
  const int last = mask.columns() - 1;
  const int mirror[8] = {1, 0, 2, 3, 7, 6, 5, 4};
  for (int j = 0; j < mask.rows(); ++j) {
    for (int i = 0; i < mask.columns(); ++i) {
      ASSERT_EQ(mask.kind(i, j), mask.kind(last - i, j));
      if (mask.kind(i, j) != NodeKind::Interior) continue;
      for (int d = 0; d < 8; ++d) {
        EXPECT_NEAR(mask.arm(mask.node(i, j), d), mask.arm(mask.node(last - i, j), mirror[d]), 1e-12);
      }
    }
  }
}

TEST(DomainMask, ResolutionErrors) {
  const auto F = BoundaryProfile::preset("log1", 0.5);
  EXPECT_EQ(code_of([&] { hopflab::domain_mask(F, {0.25, 0.5, 0.0}); }), ErrorCode::ResolutionError);
  EXPECT_EQ(code_of([&] { hopflab::domain_mask(F, {0.3, 0.5, 0.0}); }), ErrorCode::ResolutionError);
}
