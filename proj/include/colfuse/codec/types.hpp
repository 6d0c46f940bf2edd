#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace colfuse {

enum class TypeKind : std::uint8_t { Int32, Int64, Decimal18_2, Char, Varchar, Date };

/// Logical column type. DECIMAL(18,2) is held as a value scaled by 100 and stored
/// in 32 bits; DATE is days since 1970-01-01 stored in 32 bits.
struct ColumnType {
  TypeKind kind = TypeKind::Int32;
  std::uint32_t length = 0;  // CHAR(n) only

  static ColumnType int32() { return {TypeKind::Int32, 0}; }
  static ColumnType int64() { return {TypeKind::Int64, 0}; }
  static ColumnType decimal() { return {TypeKind::Decimal18_2, 0}; }
  static ColumnType date() { return {TypeKind::Date, 0}; }
  static ColumnType varchar() { return {TypeKind::Varchar, 0}; }
  static ColumnType fixed_char(std::uint32_t n) { return {TypeKind::Char, n}; }

  /// Integer-backed at rest: compressed with frame-of-reference bit packing.
  bool is_integer_backed() const {
    return kind != TypeKind::Varchar && !(kind == TypeKind::Char && length > 2);
  }
  bool is_string() const { return kind == TypeKind::Char || kind == TypeKind::Varchar; }
  /// 32 or 64; only meaningful when is_integer_backed().
  int width_class() const { return kind == TypeKind::Int64 ? 64 : 32; }
  /// Bytes per value in the uncompressed fixed-length layout.
  std::uint32_t fixed_width() const;

  std::string to_string() const;
  static ColumnType parse(std::string_view text);

  friend bool operator==(const ColumnType&, const ColumnType&) = default;
};

using IntValues = std::vector<std::int64_t>;
using StrValues = std::vector<std::string>;
/// Values of one column: integers (already widened to 64 bits) or byte strings.
using ColumnValues = std::variant<IntValues, StrValues>;

std::size_t value_count(const ColumnValues& values);

/// Packs CHAR(1..2) big-endian so integer order equals byte-string order.
std::int64_t pack_short_char(std::string_view s, std::uint32_t n);
std::string unpack_short_char(std::int64_t v, std::uint32_t n);

/// Text <-> stored integer conversions used by the row-file reader and printers.
std::int32_t parse_date(std::string_view yyyy_mm_dd);
std::string format_date(std::int64_t days);
std::int64_t parse_decimal(std::string_view text);
std::string format_decimal(std::int64_t scaled, int scale = 2);

}  // namespace colfuse
