#include "hopflab/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "hopflab/error.hpp"
#include "text_util.hpp"

namespace hopflab {

namespace {

constexpr double kBig = std::numeric_limits<double>::max();

ConfigKey real(std::string name, std::string fallback, double lo, bool lo_open, double hi, bool hi_open,
               std::string help) {
  return {std::move(name), KeyKind::Real, std::move(fallback), lo, hi, lo_open, hi_open, std::move(help)};
}

ConfigKey integer(std::string name, std::string fallback, double lo, double hi, std::string help) {
  return {std::move(name), KeyKind::Integer, std::move(fallback), lo, hi, false, false, std::move(help)};
}

ConfigKey text_key(std::string name, std::string fallback, std::string help) {
  return {std::move(name), KeyKind::Text, std::move(fallback), 0.0, 0.0, false, false, std::move(help)};
}

std::string range_text(const ConfigKey& k) {
  return fmt::format("{}{}, {}{}", k.lo_open ? '(' : '[', k.lo, k.hi >= kBig ? std::string("inf") : fmt::format("{}", k.hi),
                     k.hi_open ? ')' : ']');
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      text_key("preset", "log1", "modulus preset: linear, power:<a>, log1, log2, const"),
      text_key("csv", "", "two-column (t, sigma) modulus table; overrides preset"),
      integer("grid", "41", 2, 100000, "points of the log grid in the modulus table"),
      integer("depth", "40", 4, 60, "dyadic depth of the Dini classifier"),
      text_key("profile", "log1", "boundary profile preset: flat, cone:<c>, power:<a>, log1, log2, wedge:<theta>"),
      text_key("op", "laplace", "operator preset"),
      text_key("bc", "linear", "boundary data: linear, zero, sector"),
      real("h", "0.001953125", 0.0, true, 0.25, false, "grid spacing"),
      real("R0", "1", 0.0, true, 16.0, false, "patch radius"),
      real("H", "0", 0.0, false, 16.0, false, "box height (0 means R0)"),
      integer("K", "4", 0, 40, "number of dyadic levels below R0"),
      real("ladder_base", "2", 1.0, true, 16.0, false, "ratio r_k / r_{k+1} of the dyadic ladder"),
      integer("trace_window", "4", 2, 64, "trace heights in the trend window"),
      real("nu", "0.5", 0.0, true, 1.0, false, "ellipticity constant"),
      integer("n", "2", 2, 8, "space dimension of the barrier certificates"),
      text_key("s", "auto", "radial barrier exponent (auto: n / nu^2)"),
      real("epsilon", "0.01", 0.0, true, 1.0, false, "drift truncation level"),
      real("kappa", "0.1", 0.0, true, 1.0, true, "shared decay constant of the product bound"),
      integer("K_product", "40", 0, 400, "depth of the product bound"),
      real("tol", "1e-10", 0.0, true, 1e-2, false, "relative residual of the linear solver"),
      integer("max_iter", "50000", 1, 100000000, "iteration cap of the linear solver"),
      integer("direct_below", "4096", 0, 100000000, "use the sparse direct solver below this many unknowns"),
      integer("samples", "10000", 1, 10000000, "random samples per certificate"),
      integer("profiles", "50", 0, 100000, "random MaxAffine profiles in the sandwich suite"),
      integer("seed", "0", 0, 9.0e15, "seed of every random draw"),
      text_key("r", "", "comma-separated radii for the geometry table (empty: R0/2^k, k = 1..K)"),
      text_key("contrast", "", "comma-separated profile presets for the contrast suite"),
      text_key("dump", "false", "also write the matrix (COO) and right-hand side"),
      text_key("out", "", "output directory"),
  };
  return schema;
}

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

RunConfig::RunConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {
  for (const auto& k : config_schema()) values_[k.name] = k.fallback;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const ConfigKey* k = find_key(key);
  if (!k) fail(ErrorCode::ConfigError, fmt::format("unknown configuration key '{}'", key));
  const auto v = text::trim(value);
  if (k->kind != KeyKind::Text) {
    const auto x = text::parse_double(v);
    if (!x || !std::isfinite(*x)) fail(ErrorCode::ConfigError, fmt::format("{} must be a number, got '{}'", key, v));
    if (k->kind == KeyKind::Integer && *x != std::floor(*x)) {
      fail(ErrorCode::ConfigError, fmt::format("{} must be an integer, got '{}'", key, v));
    }
    const bool below = k->lo_open ? !(*x > k->lo) : !(*x >= k->lo);
    const bool above = k->hi_open ? !(*x < k->hi) : !(*x <= k->hi);
    if (below || above) {
      fail(ErrorCode::ConfigError, fmt::format("{} = {} outside {}", key, v, range_text(*k)));
    }
  }
  if (k->name == "dump" && v != "true" && v != "false") {
    fail(ErrorCode::ConfigError, fmt::format("dump must be true or false, got '{}'", v));
  }
  values_[k->name] = std::string(v);
  explicit_[k->name] = true;
}

void RunConfig::load(std::istream& in, std::string_view origin) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::ConfigError, fmt::format("{}:{}: expected key=value", origin, lineno));
    }
    const auto key = text::trim(body.substr(0, eq));
    if (key == "subcommand") continue;
    set(key, body.substr(eq + 1));
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, fmt::format("cannot read config file '{}'", path.string()));
  load(in, path.string());
}

double RunConfig::real(std::string_view key) const {
  const ConfigKey* k = find_key(key);
  if (!k || k->kind == KeyKind::Text) fail(ErrorCode::ConfigError, fmt::format("'{}' is not a numeric key", key));
  return *text::parse_double(values_.find(key)->second);
}

long RunConfig::integer(std::string_view key) const {
  const ConfigKey* k = find_key(key);
  if (!k || k->kind != KeyKind::Integer) fail(ErrorCode::ConfigError, fmt::format("'{}' is not an integer key", key));
  return static_cast<long>(*text::parse_double(values_.find(key)->second));
}

const std::string& RunConfig::text(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::ConfigError, fmt::format("unknown configuration key '{}'", key));
  return it->second;
}

bool RunConfig::explicitly_set(std::string_view key) const { return explicit_.find(key) != explicit_.end(); }

std::uint64_t RunConfig::seed() const { return static_cast<std::uint64_t>(integer("seed")); }

std::filesystem::path RunConfig::output_dir() const {
  if (const auto& o = text("out"); !o.empty()) return o;
  if (const char* env = std::getenv("HOPFLAB_OUT"); env && *env) return env;
  return "hopflab_out";
}

std::string RunConfig::resolved() const {
  std::ostringstream s;
  s << "subcommand=" << subcommand_ << '\n';
  for (const auto& k : config_schema()) s << k.name << '=' << values_.find(k.name)->second << '\n';
  return s.str();
}

std::vector<std::string> split_list(std::string_view list) {
  std::vector<std::string> out;
  for (auto item : text::split(list, ',')) {
    const auto t = text::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace hopflab
