#include "recbf/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recbf/errors.hpp"

namespace recbf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ConfigError(path + ": bad numeric cell '" + cell + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return in;
}

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out = open_out(path);
  out << join(trace.columns) << '\n';
  for (std::size_t r = 0; r < trace.rows(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < trace.columns.size(); ++c) {
      if (c) line += ',';
      line += format_double(trace.data[c][r]);
    }
    out << line << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  Trace trace(split_line(line));
  std::vector<double> row(trace.columns.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != trace.columns.size())
      throw ConfigError(path + ": row width does not match header");
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_cell(cells[c], path);
    trace.push_row(row);
  }
  return trace;
}

void write_table_csv(const std::string& path,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  out << join(columns) << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw ConfigError(path + ": row width does not match header");
    out << join(row) << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

void write_road_csv(const std::string& path, const RoadProfile& road) {
  road.validate();
  std::ofstream out = open_out(path);
  out << "t_s,grade_rad\n";
  for (std::size_t i = 0; i < road.t.size(); ++i)
    out << format_double(road.t[i]) << ',' << format_double(road.grade[i])
        << '\n';
  if (!out) throw ConfigError("write failed: " + path);
}

RoadProfile read_road_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,grade_rad")
    throw ConfigError(path + ": road header must be 't_s,grade_rad'");
  RoadProfile road;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != 2)
      throw ConfigError(path + ": road rows need exactly two cells");
    road.t.push_back(parse_cell(cells[0], path));
    road.grade.push_back(parse_cell(cells[1], path));
  }
  try {
    road.validate();
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return road;
}

}  // namespace recbf
