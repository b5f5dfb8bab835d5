#include "csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "kerf/error.hpp"
#include "kerf/experiments.hpp"

namespace kerf::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw UsageError("line " + std::to_string(line_no) + ": '" + std::string(cell) + "' is not a number");
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table parse_table(std::string_view text) {
  Table table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const auto line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (table.header.empty()) {
      for (auto c : cells) table.header.emplace_back(c);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw UsageError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                       " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(parse_cell(c, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw UsageError("CSV input has no header row");
  return table;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<SamplePoint> parse_samples_csv(std::string_view text) {
  const Table table = parse_table(text);
  std::ptrdiff_t y_col = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "y") y_col = static_cast<std::ptrdiff_t>(c);
  }
  if (y_col < 0) throw UsageError("sample CSV needs a 'y' column");
  if (table.header.size() < 2) throw UsageError("sample CSV needs at least one coordinate column");
  std::vector<SamplePoint> samples;
  for (const auto& row : table.rows) {
    SamplePoint s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == y_col) {
        s.y = row[c];
      } else {
        s.x.push_back(row[c]);
      }
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Point> parse_points_csv(std::string_view text) {
  const Table table = parse_table(text);
  std::vector<Point> points;
  for (const auto& row : table.rows) {
    Point p;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (table.header[c] != "y") p.push_back(row[c]);
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::string samples_csv(const std::vector<SamplePoint>& samples) {
  std::string out;
  const std::size_t d = samples.empty() ? 0 : samples.front().x.size();
  for (std::size_t j = 0; j < d; ++j) out += "x" + std::to_string(j + 1) + ",";
  out += "y\n";
  for (const auto& s : samples) {
    for (double v : s.x) out += format_double(v) + ",";
    out += format_double(s.y) + "\n";
  }
  return out;
}

Point parse_point(std::string_view text) {
  Point p;
  for (auto cell : split(text)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw UsageError("cannot parse coordinate '" + std::string(cell) + "'");
    }
    p.push_back(v);
  }
  return p;
}

}  // namespace kerf::cli
