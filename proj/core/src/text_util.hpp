#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hopflab::text {

std::string_view trim(std::string_view s);
std::optional<double> parse_double(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Splits "name:params" into ("name", "params"); params empty when absent.
std::pair<std::string_view, std::string_view> split_preset(std::string_view id);

// Reads numeric rows separated by commas, semicolons or whitespace. Lines that
// are blank or start with '#' are skipped; a first line that fails to parse
// is treated as a header. Any later unparsable line yields std::nullopt.
std::optional<std::vector<std::vector<double>>> read_numeric_rows(std::istream& in);

}  // namespace hopflab::text
