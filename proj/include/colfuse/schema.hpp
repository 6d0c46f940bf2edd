#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "colfuse/codec/types.hpp"

namespace colfuse {

struct ColumnSchema {
  std::string name;
  ColumnType type;
};

/// A pruning attribute of a table. Either one of the table's own columns, or a
/// column of another table reached through one foreign-key hop:
/// `column` (in this table) = `ref_table.ref_key`, value taken from `ref_table.ref_column`.
struct ZoneAttributeSpec {
  std::string name;
  std::string column;
  std::string ref_table;
  std::string ref_key;
  std::string ref_column;

  bool is_reference() const { return !ref_table.empty(); }
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSchema> columns;
  std::string cluster_key;
  std::vector<ZoneAttributeSpec> zone_attributes;

  /// Throws Error for an unknown column.
  std::size_t column_index(const std::string& column) const;
  const ColumnSchema& column(const std::string& column) const { return columns[column_index(column)]; }
};

struct Schema {
  std::vector<TableSchema> tables;

  const TableSchema& table(const std::string& name) const;
  std::size_t table_index(const std::string& name) const;

  std::string to_json() const;
  static Schema from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Schema load(const std::filesystem::path& path);
};

/// Column-major in-memory table.
struct TableData {
  std::string name;
  std::vector<ColumnValues> columns;

  std::size_t row_count() const { return columns.empty() ? 0 : value_count(columns.front()); }
};

/// Pipe-delimited rows, one per line, optional trailing '|'. Values use the
/// textual forms of parse_date / parse_decimal.
TableData read_row_file(const std::filesystem::path& path, const TableSchema& schema);
TableData parse_rows(const std::string& text, const TableSchema& schema);
std::string format_rows(const TableData& data, const TableSchema& schema);
void write_row_file(const std::filesystem::path& path, const TableData& data, const TableSchema& schema);

}  // namespace colfuse
