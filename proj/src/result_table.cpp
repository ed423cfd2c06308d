#include "widesense/result_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "widesense/errors.hpp"
#include "widesense/harness.hpp"

#ifndef WIDESENSE_VERSION
#define WIDESENSE_VERSION "0.0.0"
#endif

namespace widesense::harness {

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

const char* version() noexcept { return WIDESENSE_VERSION; }

ResultTable::ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw DomainError("result table needs columns");
}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) throw DomainError("result row width mismatch");
  rows_.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return i;
  }
  throw DomainError("no column named '" + name + "'");
}

std::vector<double> ResultTable::numeric_column(const std::string& name) const {
  const auto idx = column_index(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    const auto& cell = row[idx];
    if (const auto* i = std::get_if<std::int64_t>(&cell)) {
      out.push_back(static_cast<double>(*i));
    } else if (const auto* d = std::get_if<double>(&cell)) {
      out.push_back(*d);
    } else {
      throw DomainError("column '" + name + "' is not numeric");
    }
  }
  return out;
}

std::vector<std::string> ResultTable::text_column(const std::string& name) const {
  const auto idx = column_index(name);
  std::vector<std::string> out;
  for (const auto& row : rows_) out.push_back(format_cell(row[idx]));
  return out;
}

std::string format_cell(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), *d);
    return std::string(buf, res.ptr);
  }
  return quote_if_needed(std::get<std::string>(cell));
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "# widesense " << version() << '\n';
  out << "# experiment=" << experiment << '\n';
  out << "# config_hash=" << config_hash << '\n';
  out << "# seed=" << seed << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    out << (i ? "," : "") << quote_if_needed(columns_[i]);
  }
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << '\n';
  }
  return out.str();
}

std::optional<std::string> read_config_hash(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  const std::string key = "# config_hash=";
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    if (line.rfind(key, 0) == 0) return line.substr(key.size());
  }
  return std::nullopt;
}

void write_table(const ResultTable& table, const std::filesystem::path& path, bool force) {
  if (std::filesystem::exists(path) && !force) {
    const auto existing = read_config_hash(path);
    if (!existing || *existing != table.config_hash) {
      throw ConfigError("refusing to overwrite " + path.string() +
                        " written with a different configuration (use --force)");
    }
  }
  if (path.has_parent_path() && !std::filesystem::exists(path.parent_path())) {
    throw ConfigError("output directory " + path.parent_path().string() + " does not exist");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << table.to_csv();
  if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace widesense::harness
