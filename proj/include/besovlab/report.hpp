#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace besovlab {

/// Shortest decimal text that reads back to the same double; "inf", "-inf"
/// and "nan" for the non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// A rectangular table of already-formatted cells.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  Table& row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw std::invalid_argument("table row has the wrong number of cells");
    rows_.push_back(std::move(cells));
    return *this;
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string csv() const {
    std::ostringstream os;
    join(os, columns_, ',');
    for (const auto& r : rows_) join(os, r, ',');
    return os.str();
  }

  /// Whitespace separated with a commented header, as gnuplot reads it.
  std::string dat() const {
    std::ostringstream os;
    os << "# ";
    join(os, columns_, ' ');
    for (const auto& r : rows_) join(os, r, ' ');
    return os.str();
  }

 private:
  static void join(std::ostringstream& os, const std::vector<std::string>& cells, char sep) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << sep;
      os << cells[i];
    }
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return format_number(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(long v) { return std::to_string(v); }
inline std::string cell(long long v) { return std::to_string(v); }
inline std::string cell(unsigned long v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(const std::string& v) { return v; }
inline std::string cell(const char* v) { return v; }

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.dat`.
inline void write_table(const std::filesystem::path& dir, const std::string& stem, const Table& table) {
  write_file_atomic(dir / (stem + ".csv"), table.csv());
  write_file_atomic(dir / (stem + ".dat"), table.dat());
}

/// JSON numbers cannot hold inf or nan; those are written as strings.
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

/// One named check in a report.
struct Assertion {
  std::string name;
  double value = 0.0;
  std::string relation;  // e.g. "<", "<=", "in"
  double lower = 0.0;
  double upper = 0.0;
  bool pass = false;
  std::string detail;
};

inline nlohmann::json to_json(const Assertion& a) {
  nlohmann::json j{{"name", a.name}, {"value", json_number(a.value)}, {"relation", a.relation}, {"pass", a.pass}};
  if (a.relation == "in") {
    j["bounds"] = {json_number(a.lower), json_number(a.upper)};
  } else {
    j["threshold"] = json_number(a.upper);
  }
  if (!a.detail.empty()) j["detail"] = a.detail;
  return j;
}

inline Assertion assert_below(std::string name, double value, double bound, std::string detail = "") {
  return {std::move(name), value, "<", 0.0, bound, value < bound, std::move(detail)};
}

inline Assertion assert_at_most(std::string name, double value, double bound, std::string detail = "") {
  return {std::move(name), value, "<=", 0.0, bound, value <= bound, std::move(detail)};
}

inline Assertion assert_at_least(std::string name, double value, double bound, std::string detail = "") {
  return {std::move(name), value, ">=", bound, bound, value >= bound, std::move(detail)};
}

inline Assertion assert_within(std::string name, double value, double lo, double hi, std::string detail = "") {
  return {std::move(name), value, "in", lo, hi, value >= lo && value <= hi, std::move(detail)};
}

inline Assertion assert_true(std::string name, bool ok, std::string detail = "") {
  return {std::move(name), ok ? 1.0 : 0.0, "==", 1.0, 1.0, ok, std::move(detail)};
}

}  // namespace besovlab
