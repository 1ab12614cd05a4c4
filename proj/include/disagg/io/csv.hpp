#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/mixture.hpp"

namespace disagg::io {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, const std::string& context) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::io, context + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

/// Rows of a numeric CSV. Lines starting with '#' are header comments of the form
/// "# key: value" or "# key=value"; a first non-numeric row is taken as column names.
struct CsvTable {
  std::map<std::string, std::string> header;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(std::istream& in, const std::string& context = "csv") {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      std::string_view body = trim(sv.substr(1));
      const auto sep = body.find_first_of(":=");
      if (sep != std::string_view::npos) {
        t.header[std::string(trim(body.substr(0, sep)))] = std::string(trim(body.substr(sep + 1)));
      }
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = sv.find(',', start);
      fields.push_back(sv.substr(start, comma == std::string_view::npos ? sv.size() - start : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (t.rows.empty() && t.columns.empty()) {
      double probe;
      const auto f = trim(fields.front());
      if (std::from_chars(f.data(), f.data() + f.size(), probe).ec != std::errc()) {
        for (auto f2 : fields) t.columns.emplace_back(trim(f2));
        continue;
      }
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, context + " line " + std::to_string(line_no)));
    if (!t.rows.empty() && row.size() != t.rows.front().size()) {
      throw Error(ErrorCode::io, context + " line " + std::to_string(line_no) + ": ragged row");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Two-column (x, phi) table.
inline void write_tabulated_csv(std::ostream& out, const std::vector<double>& x,
                                const std::vector<double>& phi) {
  out << "x,phi\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << format_double(x[i]) << ',' << format_double(phi[i]) << '\n';
}

inline void write_tabulated_csv(std::ostream& out, const MixtureDensity& m) {
  const auto* t = std::get_if<TabulatedParams>(&m.params());
  if (t == nullptr) throw DomainError("write_tabulated_csv: density is not tabulated");
  write_tabulated_csv(out, t->x, t->phi);
}

inline MixtureDensity read_tabulated_csv(std::istream& in) {
  const CsvTable t = read_csv(in, "tabulated density");
  std::vector<double> x, phi;
  for (const auto& r : t.rows) {
    if (r.size() != 2) throw Error(ErrorCode::io, "tabulated density: expected two columns");
    x.push_back(r[0]);
    phi.push_back(r[1]);
  }
  return MixtureDensity::tabulated(std::move(x), std::move(phi));
}

}  // namespace disagg::io
