#pragma once

// Minimal comma-separated text helpers. No quoting: every field in the
// toolkit's schemas is a bare token.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "vmap/types.hpp"

namespace vmap::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// 12 significant digits, locale independent.
inline std::string format(double v, int significant = 12) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, significant);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

/// Shortest representation that reads back to the same double.
inline std::string format_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

/// Reads a header line and data lines; blank lines and '#' comments are skipped.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Returns false at end of input.
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      auto t = trim(line_);
      if (t.empty() || t.front() == '#') continue;
      fields = split(t);
      return true;
    }
    return false;
  }

  std::size_t line_number() const { return line_no_; }

  /// Reads the header and checks it against the expected column names.
  void expect_header(const std::vector<std::string_view>& expected) {
    std::vector<std::string_view> fields;
    if (!next(fields)) throw ParseError(line_no_, "header", "missing header row");
    if (fields.size() != expected.size())
      throw ParseError(line_no_, "header",
                       "expected " + std::to_string(expected.size()) + " columns, got " +
                           std::to_string(fields.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (!detail::iequals(fields[i], expected[i]))
        throw ParseError(line_no_, expected[i],
                         "unexpected header column '" + std::string(fields[i]) + "'");
    }
  }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace vmap::csv
