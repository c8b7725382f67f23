#include "humorkit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "humorkit/errors.hpp"

namespace humorkit {
namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty()) {
      in_quotes = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Table read_delimited(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());

  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      table.delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
      table.header = split_line(line, table.delimiter);
      have_header = true;
      continue;
    }
    auto fields = split_line(line, table.delimiter);
    if (fields.size() != table.header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(table.rows.size() + 2) +
                      " has " + std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw DataError("empty file: " + path.string());
  return table;
}

ColumnMap load_column_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open column map: " + path.string());
  ColumnMap mapping;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("column map line is not key=value: " + line);
    }
    mapping[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return mapping;
}

std::optional<std::size_t> find_column(const Table& table, std::string_view canonical,
                                       const ColumnMap& mapping, bool required) {
  std::string_view wanted = canonical;
  if (auto it = mapping.find(canonical); it != mapping.end()) wanted = it->second;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == wanted) return i;
  }
  if (required) {
    throw DataError("missing required column '" + std::string(wanted) + "'");
  }
  return std::nullopt;
}

double parse_double(std::string_view field, std::string_view context) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("cannot parse number '" + std::string(field) + "' in " +
                    std::string(context));
  }
  return value;
}

long long parse_int(std::string_view field, std::string_view context) {
  long long value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("cannot parse integer '" + std::string(field) + "' in " +
                    std::string(context));
  }
  return value;
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\t\"\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace humorkit
