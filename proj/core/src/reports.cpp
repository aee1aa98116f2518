#include "hopflab/reports.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "hopflab/elliptic_operator.hpp"
#include "hopflab/error.hpp"

namespace hopflab {

namespace fs = std::filesystem;

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it) {
    if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
  }
}

fs::path OutputSet::write(const std::string& name, const std::string& content) {
  const fs::path path = dir_ / name;
  std::vector<fs::path> missing;
  for (fs::path p = path.parent_path(); !p.empty() && !fs::exists(p); p = p.parent_path()) missing.push_back(p);
  std::error_code ec;
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path(), ec);
  if (ec) fail(ErrorCode::ConfigError, fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
  created_dirs_.insert(created_dirs_.end(), missing.begin(), missing.end());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::ConfigError, fmt::format("cannot write '{}'", path.string()));
  files_.push_back(path);
  out << content;
  if (!out) fail(ErrorCode::ConfigError, fmt::format("write to '{}' failed", path.string()));
  return path;
}

std::string path_safe(std::string_view id) {
  std::string s(id);
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
    if (!ok) c = '_';
  }
  return s;
}

void write_modulus_table(std::ostream& out, const Modulus& sigma, std::size_t grid) {
  out << "t,sigma,sigma_over_t,J\n";
  for (double t : log_grid(grid)) {
    const double s = sigma(t);
    std::string j;
    try {
      j = fmt::format("{:.17g}", dini_integral(sigma, t).value);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Divergent) throw;
      j = "inf";
    }
    out << fmt::format("{:.17g},{:.17g},{:.17g},{}\n", t, s, s / t, j);
  }
}

void write_geometry_table(std::ostream& out, const BoundaryProfile& F, const std::vector<double>& radii) {
  out << "r,delta,delta1,two_delta_2r,sandwich\n";
  for (double r : radii) {
    const auto s = sandwich_check(F, r);
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r, s.delta_r, s.delta1_r, 2.0 * s.delta_2r,
                       s.holds() ? "ok" : "violated");
  }
}

SuiteOutcome sandwich_suite(int profiles, double R0, std::uint64_t seed) {
  SuiteOutcome out;
  out.name = "sandwich";
  const auto check = [&](const BoundaryProfile& F, const std::string& label) {
    for (double frac : {0.25, 0.125, 0.0625}) {
      const auto s = sandwich_check(F, frac * R0);
      ++out.checks;
      if (!s.holds()) {
        if (out.failures++ == 0) {
          out.first_failure = fmt::format("{} r={:.6g} delta={:.17g} delta1={:.17g} 2delta(2r)={:.17g}", label,
                                          frac * R0, s.delta_r, s.delta1_r, 2.0 * s.delta_2r);
        }
      }
    }
  };
  for (int i = 0; i < profiles; ++i) {
    const int dim = 2 + (i % 2);
    const std::uint64_t sd = seed + static_cast<std::uint64_t>(i);
    check(random_max_affine(dim, 3 + i % 6, R0, sd), fmt::format("maxaffine(dim={}, seed={})", dim, sd));
  }
  for (const char* id : {"flat", "cone:0.5", "power:0.5", "power:2", "log1", "log2", "wedge:2pi/3"}) {
    check(BoundaryProfile::preset(id, R0, 2), id);
  }
  return out;
}

SuiteOutcome drift_property_suite(int triples, std::uint64_t seed) {
  SuiteOutcome out;
  out.name = "drift_correction";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> logeps(-3.0, 1.0);
  for (int t = 0; t < triples; ++t) {
    const int n = 2 + t % 3;
    Eigen::VectorXd b(n), g(n);
    for (int i = 0; i < n; ++i) {
      b[i] = 5.0 * normal(rng);
      g[i] = normal(rng);
    }
    const double eps = std::pow(10.0, logeps(rng));
    const Eigen::VectorXd bt = truncate_drift(b, eps);
    const Eigen::VectorXd be = correct_drift(bt, b, g);
    const double lhs = std::abs(ordered_dot(be, g));
    const double rhs = std::abs(ordered_dot(b, g));
    ++out.checks;
    if (!(lhs <= rhs)) {
      if (out.failures++ == 0) {
        out.first_failure = fmt::format("triple {} eps={:.6g}: |b_eps.g| = {:.17g} > |b.g| = {:.17g}", t, eps, lhs, rhs);
      }
    }
  }
  return out;
}

std::string to_text(const SuiteOutcome& s) {
  std::string t = fmt::format("suite: {}\nchecks: {}\nfailures: {}\npass: {}\n", s.name, s.checks, s.failures,
                              s.pass() ? "true" : "false");
  if (!s.first_failure.empty()) t += "first_failure: " + s.first_failure + "\n";
  return t;
}

}  // namespace hopflab
