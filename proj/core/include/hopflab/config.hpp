#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hopflab {

enum class KeyKind { Real, Integer, Text };

/// One documented configuration key. Numeric keys carry an allowed range;
/// open ends are exclusive.
struct ConfigKey {
  std::string name;
  KeyKind kind = KeyKind::Text;
  std::string fallback;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;
  std::string help;
};

const std::vector<ConfigKey>& config_schema();
const ConfigKey* find_key(std::string_view name);

/// Resolved settings of one CLI invocation.
///
/// Values start from the schema defaults, then a key=value file, then
/// explicit flags. Every assignment is validated against the schema.
class RunConfig {
 public:
  explicit RunConfig(std::string subcommand = {});

  void set(std::string_view key, std::string_view value);
  /// key=value lines; '#' starts a comment, blank lines are ignored.
  void load(std::istream& in, std::string_view origin = "config");
  void load_file(const std::filesystem::path& path);

  const std::string& subcommand() const { return subcommand_; }
  double real(std::string_view key) const;
  long integer(std::string_view key) const;
  const std::string& text(std::string_view key) const;
  bool explicitly_set(std::string_view key) const;

  std::uint64_t seed() const;

  /// "out" when set, else $HOPFLAB_OUT, else "hopflab_out".
  std::filesystem::path output_dir() const;

  /// "subcommand=..." followed by every key in schema order.
  std::string resolved() const;

 private:
  std::string subcommand_;
  std::map<std::string, std::string, std::less<>> values_;
  std::map<std::string, bool, std::less<>> explicit_;
};

/// Comma-separated list with surrounding blanks removed; empty items dropped.
std::vector<std::string> split_list(std::string_view text);

}  // namespace hopflab
