#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvt::io {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

// Comma-separated table with a mandatory header row. Blank lines are
// skipped; fields are not quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required_columns);
CsvTable parse_csv(std::string_view text, const std::vector<std::string>& required_columns,
                   const std::string& source_name);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

// 64-bit FNV-1a content hash, rendered as 16 hex digits.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace mvt::io
