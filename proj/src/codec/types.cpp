#include "colfuse/codec/types.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "colfuse/error.hpp"

namespace colfuse {

std::uint32_t ColumnType::fixed_width() const {
  switch (kind) {
    case TypeKind::Int64:
      return 8;
    case TypeKind::Char:
      return length;
    case TypeKind::Varchar:
      return 0;
    default:
      return 4;
  }
}

std::string ColumnType::to_string() const {
  switch (kind) {
    case TypeKind::Int32:
      return "INT32";
    case TypeKind::Int64:
      return "INT64";
    case TypeKind::Decimal18_2:
      return "DECIMAL(18,2)";
    case TypeKind::Date:
      return "DATE";
    case TypeKind::Varchar:
      return "VARCHAR";
    case TypeKind::Char:
      return "CHAR(" + std::to_string(length) + ")";
  }
  return "?";
}

ColumnType ColumnType::parse(std::string_view text) {
  if (text == "INT32") return int32();
  if (text == "INT64") return int64();
  if (text == "DECIMAL(18,2)") return decimal();
  if (text == "DATE") return date();
  if (text == "VARCHAR") return varchar();
  if (text.starts_with("CHAR(") && text.ends_with(")")) {
    std::uint32_t n = 0;
    auto digits = text.substr(5, text.size() - 6);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && n > 0) return fixed_char(n);
  }
  throw Error("unknown column type '" + std::string(text) + "'");
}

std::size_t value_count(const ColumnValues& values) {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

std::int64_t pack_short_char(std::string_view s, std::uint32_t n) {
  if (n == 0 || n > 2 || s.size() != n) {
    throw Error("CHAR(" + std::to_string(n) + ") value has length " + std::to_string(s.size()));
  }
  std::int64_t v = 0;
  for (unsigned char c : s) v = (v << 8) | c;
  return v;
}

std::string unpack_short_char(std::int64_t v, std::uint32_t n) {
  std::string s(n, '\0');
  for (std::uint32_t i = 0; i < n; ++i) {
    s[n - 1 - i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  return s;
}

namespace {

int parse_int_field(std::string_view text, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error("malformed date '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

std::int32_t parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    throw Error("malformed date '" + std::string(s) + "'");
  }
  using namespace std::chrono;
  year_month_day ymd{year{parse_int_field(s.substr(0, 4), s)},
                     month{static_cast<unsigned>(parse_int_field(s.substr(5, 2), s))},
                     day{static_cast<unsigned>(parse_int_field(s.substr(8, 2), s))}};
  if (!ymd.ok()) throw Error("invalid date '" + std::string(s) + "'");
  return static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count());
}

std::string format_date(std::int64_t days) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::int64_t parse_decimal(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() || frac.size() > 2) throw Error("malformed decimal '" + std::string(text) + "'");
  std::int64_t w = 0;
  auto [p1, e1] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (e1 != std::errc{} || p1 != whole.data() + whole.size()) {
    throw Error("malformed decimal '" + std::string(text) + "'");
  }
  std::int64_t f = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    f *= 10;
    if (i < frac.size()) {
      if (frac[i] < '0' || frac[i] > '9') throw Error("malformed decimal '" + std::string(text) + "'");
      f += frac[i] - '0';
    }
  }
  std::int64_t v = w * 100 + f;
  return negative ? -v : v;
}

std::string format_decimal(std::int64_t scaled, int scale) {
  std::int64_t div = 1;
  for (int i = 0; i < scale; ++i) div *= 10;
  bool negative = scaled < 0;
  // Magnitude via unsigned to survive INT64_MIN.
  std::uint64_t mag = negative ? 0 - static_cast<std::uint64_t>(scaled) : static_cast<std::uint64_t>(scaled);
  std::string out = negative ? "-" : "";
  out += std::to_string(mag / static_cast<std::uint64_t>(div));
  if (scale > 0) {
    std::string frac = std::to_string(mag % static_cast<std::uint64_t>(div));
    out += '.';
    out.append(static_cast<std::size_t>(scale) - frac.size(), '0');
    out += frac;
  }
  return out;
}

}  // namespace colfuse
