#include "mvkit/csv.hpp"

#include "mvkit/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mvkit {

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0 into 0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::InvalidData, "not a decimal number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) fail(ErrorCode::InvalidData, "non-finite value '" + std::string(text) + "'");
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

void strip_bom(std::string& line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out << ',';
    out << csv_escape(fields[k]);
  }
  out << '\n';
}

}  // namespace

FeatureMatrix read_matrix_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::InvalidData, source + ": empty file");
  strip_bom(line);
  auto header = split_csv_line(line);
  if (header.size() < 2) fail(ErrorCode::InvalidData, source + ": header needs unit_id and at least one feature");
  std::vector<std::string> names(header.begin() + 1, header.end());
  std::vector<std::string> ids;
  std::vector<double> flat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorCode::InvalidData, source + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(header.size()) + " fields, got " +
                                       std::to_string(fields.size()));
    }
    ids.push_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        flat.push_back(parse_double(fields[k]));
      } catch (const Error& e) {
        fail(ErrorCode::InvalidData, source + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  const auto n = static_cast<Index>(ids.size());
  const auto p = static_cast<Index>(names.size());
  Matrix values(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) values(i, j) = flat[static_cast<std::size_t>(i * p + j)];
  return FeatureMatrix(std::move(ids), std::move(names), std::move(values));
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix_csv(in, path.string());
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m, std::string_view id_header) {
  std::vector<std::string> header{std::string(id_header)};
  header.insert(header.end(), m.feature_names().begin(), m.feature_names().end());
  write_row(out, header);
  std::vector<std::string> row;
  for (Index i = 0; i < m.rows(); ++i) {
    row.clear();
    row.push_back(m.unit_ids()[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m.values()(i, j)));
    write_row(out, row);
  }
}

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m,
                      std::string_view id_header) {
  auto out = open_out(path);
  write_matrix_csv(out, m, id_header);
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::InvalidData, path.string() + ": empty file");
  strip_bom(line);
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size()) {
      fail(ErrorCode::InvalidData, path.string() + ": ragged row");
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

void write_csv_table(const std::filesystem::path& path, const CsvTable& table) {
  auto out = open_out(path);
  write_row(out, table.header);
  for (const auto& r : table.rows) write_row(out, r);
}

ScoreVector read_score_csv(const std::filesystem::path& path) {
  auto t = read_csv_table(path);
  if (t.header.size() != 2) fail(ErrorCode::InvalidData, path.string() + ": expected two columns unit_id,score");
  ScoreVector s;
  s.values.resize(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s.unit_ids.push_back(t.rows[i][0]);
    s.values(static_cast<Index>(i)) = parse_double(t.rows[i][1]);
  }
  return s;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mvkit
