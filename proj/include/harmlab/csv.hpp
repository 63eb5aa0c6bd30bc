#pragma once

// RFC 4180 style CSV with shortest round-trip decimal formatting.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "harmlab/solver.hpp"

namespace harmlab {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InputError("csv: '" + s + "' is not a number");
  return v;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
    os << "\r\n";
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!os) throw IoError("write to '" + path + "' failed");
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(field);
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      rec.push_back(field);
      records.push_back(rec);
      rec.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any) {
    rec.push_back(field);
    records.push_back(rec);
  }
  CsvTable t;
  if (records.empty()) return t;
  t.header = records.front();
  t.rows.assign(records.begin() + 1, records.end());
  return t;
}

inline const std::vector<std::string>& trace_header() {
  static const std::vector<std::string> h{"sweep", "energy", "max_move", "min_u", "delta_max"};
  return h;
}

inline CsvTable trace_table(const SolveTrace& trace) {
  CsvTable t{trace_header(), {}};
  for (const auto& r : trace.records)
    t.rows.push_back({std::to_string(r.sweep), format_number(r.energy), format_number(r.max_move), format_number(r.min_u),
                      format_number(r.delta_max)});
  return t;
}

inline void emit_csv(const SolveTrace& trace, const std::string& path) { write_csv(trace_table(trace), path); }

inline std::vector<SweepRecord> read_trace_csv(const std::string& path) {
  const auto t = read_csv(path);
  if (t.header != trace_header()) throw InputError("'" + path + "' is not a solve-trace CSV");
  std::vector<SweepRecord> out;
  for (const auto& row : t.rows) {
    if (row.size() != 5) throw InputError("'" + path + "': malformed trace row");
    out.push_back({static_cast<int>(parse_number(row[0])), parse_number(row[1]), parse_number(row[2]), parse_number(row[3]),
                   parse_number(row[4])});
  }
  return out;
}

}  // namespace harmlab
