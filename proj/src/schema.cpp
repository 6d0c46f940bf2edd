#include "colfuse/schema.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "colfuse/error.hpp"
#include "json.hpp"

namespace colfuse {

using nlohmann::json;

std::size_t TableSchema::column_index(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  throw Error("table " + name + " has no column " + column);
}

const TableSchema& Schema::table(const std::string& name) const { return tables[table_index(name)]; }

std::size_t Schema::table_index(const std::string& name) const {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].name == name) return i;
  }
  throw Error("unknown table " + name);
}

std::string Schema::to_json() const {
  json doc;
  doc["tables"] = json::array();
  for (const auto& t : tables) {
    json jt;
    jt["name"] = t.name;
    jt["cluster_key"] = t.cluster_key;
    jt["columns"] = json::array();
    for (const auto& c : t.columns) jt["columns"].push_back({{"name", c.name}, {"type", c.type.to_string()}});
    jt["zone_attributes"] = json::array();
    for (const auto& z : t.zone_attributes) {
      json jz{{"name", z.name}, {"column", z.column}};
      if (z.is_reference()) {
        jz["ref_table"] = z.ref_table;
        jz["ref_key"] = z.ref_key;
        jz["ref_column"] = z.ref_column;
      }
      jt["zone_attributes"].push_back(jz);
    }
    doc["tables"].push_back(jt);
  }
  return doc.dump(2);
}

Schema Schema::from_json(const std::string& text) {
  Schema s;
  try {
    auto doc = json::parse(text);
    for (const auto& jt : doc.at("tables")) {
      TableSchema t;
      t.name = jt.at("name").get<std::string>();
      t.cluster_key = jt.value("cluster_key", "");
      for (const auto& jc : jt.at("columns")) {
        t.columns.push_back({jc.at("name").get<std::string>(), ColumnType::parse(jc.at("type").get<std::string>())});
      }
      for (const auto& jz : jt.value("zone_attributes", json::array())) {
        ZoneAttributeSpec z;
        z.name = jz.at("name").get<std::string>();
        z.column = jz.at("column").get<std::string>();
        z.ref_table = jz.value("ref_table", "");
        z.ref_key = jz.value("ref_key", "");
        z.ref_column = jz.value("ref_column", "");
        t.zone_attributes.push_back(std::move(z));
      }
      s.tables.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed schema: ") + e.what());
  }
  return s;
}

void Schema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

namespace {

std::int64_t parse_integer(std::string_view field) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error("malformed integer '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

TableData parse_rows(const std::string& text, const TableSchema& schema) {
  TableData data;
  data.name = schema.name;
  for (const auto& c : schema.columns) {
    if (c.type.is_string()) {
      data.columns.emplace_back(StrValues{});
    } else {
      data.columns.emplace_back(IntValues{});
    }
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    std::size_t col = 0;
    std::size_t start = 0;
    while (col < schema.columns.size()) {
      std::size_t bar = line.find('|', start);
      if (bar == std::string_view::npos) bar = line.size();
      std::string_view field = line.substr(start, bar - start);
      const auto& type = schema.columns[col].type;
      try {
        switch (type.kind) {
          case TypeKind::Char:
          case TypeKind::Varchar:
            std::get<StrValues>(data.columns[col]).emplace_back(field);
            break;
          case TypeKind::Date:
            std::get<IntValues>(data.columns[col]).push_back(parse_date(field));
            break;
          case TypeKind::Decimal18_2:
            std::get<IntValues>(data.columns[col]).push_back(parse_decimal(field));
            break;
          default:
            std::get<IntValues>(data.columns[col]).push_back(parse_integer(field));
        }
      } catch (const Error& e) {
        throw Error(schema.name + " line " + std::to_string(line_no) + ": " + e.what());
      }
      ++col;
      if (bar >= line.size() && col < schema.columns.size()) {
        throw Error(schema.name + " line " + std::to_string(line_no) + ": too few fields");
      }
      start = bar + 1;
    }
  }
  return data;
}

TableData read_row_file(const std::filesystem::path& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rows(ss.str(), schema);
}

std::string format_rows(const TableData& data, const TableSchema& schema) {
  std::string out;
  const auto rows = data.row_count();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& type = schema.columns[c].type;
      switch (type.kind) {
        case TypeKind::Char:
        case TypeKind::Varchar:
          out += std::get<StrValues>(data.columns[c])[r];
          break;
        case TypeKind::Date:
          out += format_date(std::get<IntValues>(data.columns[c])[r]);
          break;
        case TypeKind::Decimal18_2:
          out += format_decimal(std::get<IntValues>(data.columns[c])[r]);
          break;
        default:
          out += std::to_string(std::get<IntValues>(data.columns[c])[r]);
      }
      out += '|';
    }
    out += '\n';
  }
  return out;
}

void write_row_file(const std::filesystem::path& path, const TableData& data, const TableSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << format_rows(data, schema);
}

}  // namespace colfuse
