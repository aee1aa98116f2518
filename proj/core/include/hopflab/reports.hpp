#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hopflab/convex_geometry.hpp"
#include "hopflab/modulus.hpp"

namespace hopflab {

/// Files written into one output directory. Unless commit() is called the
/// destructor deletes every file it created, so a failed run leaves nothing
/// half-written behind.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  /// Writes `content` to dir/name (name may contain subdirectories).
  std::filesystem::path write(const std::string& name, const std::string& content);
  void commit() { committed_ = true; }

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  std::vector<std::filesystem::path> created_dirs_;
  bool committed_ = false;
};

/// Profile ids made safe as directory names ("wedge:2pi/3" -> "wedge_2pi_3").
std::string path_safe(std::string_view id);

/// Rows t, sigma, sigma_over_t, J on log_grid(grid); J is "inf" where the
/// Dini integral diverges.
void write_modulus_table(std::ostream& out, const Modulus& sigma, std::size_t grid);

/// Rows r, delta, delta1, two_delta_2r, sandwich.
void write_geometry_table(std::ostream& out, const BoundaryProfile& F, const std::vector<double>& radii);

struct SuiteOutcome {
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string first_failure;  // empty when all checks pass
  bool pass() const { return failures == 0 && checks > 0; }
};

/// delta <= delta1 <= 2 delta(2r) at r = R0/4, R0/8, R0/16 for `profiles`
/// seeded random MaxAffine profiles (dimensions 2 and 3 alternating) plus the
/// radial presets.
SuiteOutcome sandwich_suite(int profiles, double R0, std::uint64_t seed);

/// |b_eps . g| <= |b . g| for corrected truncations of seeded random triples.
SuiteOutcome drift_property_suite(int triples, std::uint64_t seed);

std::string to_text(const SuiteOutcome& s);

}  // namespace hopflab
