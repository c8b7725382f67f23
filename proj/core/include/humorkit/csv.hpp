#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace humorkit {

/// A parsed delimited text file. The delimiter is auto-detected from the
/// header line (tab wins over comma when both appear). Lines starting with
/// '#' are treated as comments and skipped, which lets reports carry their
/// own config echo.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  char delimiter = ',';

  std::size_t column_count() const { return header.size(); }
};

Table read_delimited(const std::filesystem::path& path);

/// Maps canonical column names to the names actually present in a file,
/// loaded from a key=value config ('#' comments allowed).
using ColumnMap = std::map<std::string, std::string, std::less<>>;

ColumnMap load_column_map(const std::filesystem::path& path);

/// Index of the column for `canonical`, honoring the mapping. Returns
/// nullopt when absent; throws DataError instead if `required`.
std::optional<std::size_t> find_column(const Table& table, std::string_view canonical,
                                       const ColumnMap& mapping, bool required);

/// Strict float/int parsing helpers (whole-field, locale-independent).
double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

/// Shortest round-trip decimal form, identical across runs and platforms
/// that share IEEE-754 doubles. Used for deterministic report output.
std::string format_double(double value);

/// RFC-4180-style field quoting for CSV output (quotes only when needed).
std::string csv_escape(std::string_view field);

}  // namespace humorkit
