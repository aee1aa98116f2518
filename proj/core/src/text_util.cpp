#include "text_util.hpp"

#include <charconv>
#include <istream>

namespace hopflab::text {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::pair<std::string_view, std::string_view> split_preset(std::string_view id) {
  id = trim(id);
  const auto pos = id.find(':');
  if (pos == std::string_view::npos) return {id, {}};
  return {trim(id.substr(0, pos)), trim(id.substr(pos + 1))};
}

std::optional<std::vector<std::vector<double>>> read_numeric_rows(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<double> row;
    bool ok = true;
    std::size_t i = 0;
    while (i < view.size()) {
      while (i < view.size() && (view[i] == ',' || view[i] == ';' || view[i] == ' ' || view[i] == '\t')) ++i;
      if (i >= view.size()) break;
      std::size_t j = i;
      while (j < view.size() && view[j] != ',' && view[j] != ';' && view[j] != ' ' && view[j] != '\t') ++j;
      const auto value = parse_double(view.substr(i, j - i));
      if (!value) {
        ok = false;
        break;
      }
      row.push_back(*value);
      i = j;
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      return std::nullopt;
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hopflab::text
