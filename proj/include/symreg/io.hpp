#ifndef SYMREG_IO_HPP
#define SYMREG_IO_HPP

#include "symreg/geometry.hpp"

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace symreg::io {

class PointFileError : public std::runtime_error {
 public:
  PointFileError(const std::string& source, std::size_t line,
                 const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Rows of 2 or 3 coordinates as read from a point file.
struct PointTable {
  int dim = 0;
  std::vector<double> coords;  // row-major

  std::size_t size() const {
    return dim == 0 ? 0 : coords.size() / static_cast<std::size_t>(dim);
  }

  template <int D>
  PointSet<D> as() const {
    if (dim != D) {
      throw std::invalid_argument("point file has " + std::to_string(dim) +
                                  " columns, expected " + std::to_string(D));
    }
    std::vector<Vec<D>> pts(size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int k = 0; k < D; ++k) pts[i](k) = coords[i * D + k];
    }
    return PointSet<D>(std::move(pts));
  }
};

/// One point per line, coordinates separated by whitespace and/or commas.
/// Text after '#' is ignored, as are blank lines.
inline PointTable parse_points(std::istream& in,
                               const std::string& source = "<input>") {
  PointTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    row.clear();
    std::size_t pos = 0;
    auto is_sep = [](char c) {
      return c == ' ' || c == '\t' || c == ',' || c == '\r';
    };
    while (pos < text.size()) {
      while (pos < text.size() && is_sep(text[pos])) ++pos;
      if (pos >= text.size()) break;
      std::size_t end = pos;
      while (end < text.size() && !is_sep(text[end])) ++end;
      const char* first = text.data() + pos;
      const char* last = text.data() + end;
      if (*first == '+') ++first;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last) {
        throw PointFileError(source, line_no,
                             "malformed number '" +
                                 std::string(text.substr(pos, end - pos)) + "'");
      }
      row.push_back(value);
      pos = end;
    }
    if (row.empty()) continue;
    if (row.size() != 2 && row.size() != 3) {
      throw PointFileError(source, line_no,
                           "expected 2 or 3 coordinates, found " +
                               std::to_string(row.size()));
    }
    if (table.dim == 0) {
      table.dim = static_cast<int>(row.size());
    } else if (table.dim != static_cast<int>(row.size())) {
      throw PointFileError(source, line_no,
                           "mixed dimensionality: expected " +
                               std::to_string(table.dim) + " coordinates");
    }
    table.coords.insert(table.coords.end(), row.begin(), row.end());
  }
  return table;
}

inline PointTable load_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point file " + path.string());
  PointTable table = parse_points(in, path.string());
  if (table.size() == 0) {
    throw std::runtime_error("point file " + path.string() + " has no points");
  }
  return table;
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

template <int D>
void write_points(std::ostream& out, const PointSet<D>& set) {
  for (const auto& p : set) {
    for (int k = 0; k < D; ++k) {
      if (k) out << ' ';
      out << format_double(p(k));
    }
    out << '\n';
  }
}

template <int D>
void save_points(const std::filesystem::path& path, const PointSet<D>& set,
                 const std::string& header = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write point file " + path.string());
  if (!header.empty()) {
    std::istringstream lines(header);
    for (std::string l; std::getline(lines, l);) out << "# " << l << '\n';
  }
  write_points(out, set);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace symreg::io

#endif  // SYMREG_IO_HPP
