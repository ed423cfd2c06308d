#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace widesense::harness {

using Cell = std::variant<std::int64_t, double, std::string>;

/// Rectangular CSV-bound table with a provenance preamble.
///
/// Serialized form:
///   # widesense <version>
///   # experiment=<name>
///   # config_hash=<16 hex digits>
///   # seed=<master seed>
///   <header row>
///   <rows>
/// Doubles use the shortest representation that round-trips.
class ResultTable {
 public:
  explicit ResultTable(std::vector<std::string> columns);

  void add_row(std::vector<Cell> row);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  std::size_t column_index(const std::string& name) const;
  /// Numeric column as doubles (integers widened).
  std::vector<double> numeric_column(const std::string& name) const;
  std::vector<std::string> text_column(const std::string& name) const;

  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string to_csv() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

std::string format_cell(const Cell& cell);

/// Value of `# config_hash=` in an existing result file, if any.
std::optional<std::string> read_config_hash(const std::filesystem::path& path);

/// Writes the table. If `path` exists with a different config hash the call
/// throws ConfigError unless `force` is set.
void write_table(const ResultTable& table, const std::filesystem::path& path, bool force);

const char* version() noexcept;

}  // namespace widesense::harness
