#include "mavg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mavg/error.hpp"

namespace mavg {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

double parse_number(const std::string& s, const std::string& path, std::size_t line) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw Error(ErrorCode::kIo, path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_numeric_csv(const std::string& path) {
  auto in = open_in(path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, path + ": empty file");
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != t.header.size())
      throw Error(ErrorCode::kIo, path + ":" + std::to_string(lineno) + ": expected " +
                                      std::to_string(t.header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, path, lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, const std::string& response) {
  const Table t = read_numeric_csv(path);
  std::size_t ycol = t.header.size();
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == response) ycol = j;
  if (ycol == t.header.size()) throw Error(ErrorCode::kIo, path + ": no column named '" + response + "'");

  Dataset d;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto p = static_cast<Eigen::Index>(t.header.size() - 1);
  d.y.resize(n);
  d.x.resize(n, p);
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (j != ycol) d.names.push_back(t.header[j]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == ycol) {
        d.y[i] = row[j];
      } else {
        d.x(i, c++) = row[j];
      }
    }
  }
  d.validate();
  return d;
}

void write_dataset_csv(const Dataset& data, const std::string& path, const std::string& response) {
  data.validate();
  auto out = open_out(path);
  out << csv_escape(response);
  for (const auto& n : data.names) out << ',' << csv_escape(n);
  out << '\n';
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    out << format_double(data.y[i]);
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << ',' << format_double(data.x(i, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

namespace {

const std::vector<std::string> kPanelHeader{"subject", "t", "V1", "V2", "V3", "L1", "L2", "L3", "A", "C", "Y"};

}  // namespace

void write_panel_csv(const LongitudinalPanel& panel, std::ostream& out) {
  panel.validate();
  for (std::size_t j = 0; j < kPanelHeader.size(); ++j) out << (j ? "," : "") << kPanelHeader[j];
  out << '\n';
  for (std::size_t i = 0; i < panel.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t t = 0; t <= panel.horizon; ++t) {
      const auto c = static_cast<Eigen::Index>(t);
      if (std::isnan(panel.l1(r, c))) break;
      out << panel.ids[i] << ',' << t << ',' << format_double(panel.v1[r]) << ',' << format_double(panel.v2[r]) << ','
          << format_double(panel.v3[r]) << ',' << format_double(panel.l1(r, c)) << ','
          << format_double(panel.l2(r, c)) << ',' << format_double(panel.l3(r, c)) << ','
          << format_double(panel.a(r, c)) << ',' << format_double(panel.c(r, c)) << ','
          << format_double(panel.y(r, c)) << '\n';
    }
  }
}

void write_panel_csv(const LongitudinalPanel& panel, const std::string& path) {
  auto out = open_out(path);
  write_panel_csv(panel, out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

LongitudinalPanel read_panel_csv(const std::string& path) {
  const Table t = read_numeric_csv(path);
  if (t.header != kPanelHeader) {
    std::string expected;
    for (const auto& h : kPanelHeader) expected += (expected.empty() ? "" : ",") + h;
    throw Error(ErrorCode::kIo, path + ": panel header must be " + expected);
  }
  std::map<std::uint64_t, std::vector<const std::vector<double>*>> by_subject;
  std::size_t horizon = 0;
  for (const auto& row : t.rows) {
    if (!(row[0] >= 0.0) || !(row[1] >= 0.0) || row[1] != std::floor(row[1]))
      throw Error(ErrorCode::kIo, path + ": subject and t must be non-negative integers");
    by_subject[static_cast<std::uint64_t>(row[0])].push_back(&row);
    horizon = std::max(horizon, static_cast<std::size_t>(row[1]));
  }
  LongitudinalPanel p;
  p.resize(by_subject.size(), horizon);
  std::size_t i = 0;
  for (const auto& [id, rows] : by_subject) {
    const auto r = static_cast<Eigen::Index>(i);
    p.ids[i] = id;
    for (const auto* row : rows) {
      const auto& v = *row;
      const auto c = static_cast<Eigen::Index>(v[1]);
      p.v1[r] = v[2];
      p.v2[r] = v[3];
      p.v3[r] = v[4];
      p.l1(r, c) = v[5];
      p.l2(r, c) = v[6];
      p.l3(r, c) = v[7];
      p.a(r, c) = v[8];
      p.c(r, c) = v[9];
      p.y(r, c) = v[10];
    }
    ++i;
  }
  p.validate();
  return p;
}

}  // namespace mavg
