#pragma once

#include "mvkit/matrix_core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mvkit {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Splits one CSV record. Quoted fields ("a,b") and doubled quotes are honoured.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

/// Matrix CSV: header "unit_id,<feature>...", then one row per unit.
/// Rows with empty or non-numeric cells are rejected.
FeatureMatrix read_matrix_csv(std::istream& in, const std::string& source = "<stream>");
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m,
                      std::string_view id_header = "unit_id");
void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m,
                      std::string_view id_header = "unit_id");

/// Plain table of strings, written verbatim (fields escaped).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(const std::filesystem::path& path);
void write_csv_table(const std::filesystem::path& path, const CsvTable& table);

/// Two-column "unit_id,score" file, e.g. an external deprivation score.
struct ScoreVector {
  std::vector<std::string> unit_ids;
  Vector values;
};
ScoreVector read_score_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mvkit
