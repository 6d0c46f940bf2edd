#include "colfuse/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "colfuse/codec/bytes.hpp"
#include "colfuse/error.hpp"
#include "json.hpp"

namespace colfuse {

// ---------------------------------------------------------------------------
// IntervalSet

IntervalSet IntervalSet::from_spans(std::vector<RidSpan> spans) {
  std::erase_if(spans, [](const RidSpan& s) { return s.empty(); });
  std::sort(spans.begin(), spans.end(), [](const RidSpan& a, const RidSpan& b) { return a.begin < b.begin; });
  IntervalSet out;
  for (const auto& s : spans) {
    if (!out.spans_.empty() && s.begin <= out.spans_.back().end) {
      out.spans_.back().end = std::max(out.spans_.back().end, s.end);
    } else {
      out.spans_.push_back(s);
    }
  }
  return out;
}

std::uint64_t IntervalSet::cardinality() const {
  std::uint64_t n = 0;
  for (const auto& s : spans_) n += s.size();
  return n;
}

bool IntervalSet::contains(std::uint64_t rid) const {
  auto it = std::upper_bound(spans_.begin(), spans_.end(), rid,
                             [](std::uint64_t r, const RidSpan& s) { return r < s.begin; });
  return it != spans_.begin() && rid < std::prev(it)->end;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  IntervalSet out;
  std::size_t i = 0, j = 0;
  while (i < spans_.size() && j < other.spans_.size()) {
    const auto& a = spans_[i];
    const auto& b = other.spans_[j];
    RidSpan s{std::max(a.begin, b.begin), std::min(a.end, b.end)};
    if (!s.empty()) out.spans_.push_back(s);
    if (a.end < b.end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

IntervalSet IntervalSet::clip(RidSpan window) const {
  IntervalSet w;
  if (!window.empty()) w.spans_.push_back(window);
  return intersect(w);
}

// ---------------------------------------------------------------------------
// RidIndex

RidIndex::RidIndex(std::vector<std::uint64_t> cumulative_counts) : cumulative_(std::move(cumulative_counts)) {
  std::uint64_t prev = 0;
  for (auto c : cumulative_) {
    if (c <= prev) throw CatalogError("RID index must be strictly increasing");
    prev = c;
  }
}

RidIndex RidIndex::from_page_counts(std::span<const std::uint64_t> counts) {
  std::vector<std::uint64_t> cum;
  cum.reserve(counts.size());
  std::uint64_t total = 0;
  for (auto c : counts) cum.push_back(total += c);
  return RidIndex(std::move(cum));
}

RidSpan RidIndex::page_span(std::size_t page) const {
  if (page >= cumulative_.size()) throw CatalogError("page ordinal " + std::to_string(page) + " out of range");
  return {page == 0 ? 0 : cumulative_[page - 1], cumulative_[page]};
}

std::size_t RidIndex::rid_to_page(std::uint64_t rid) const {
  if (rid >= total_rows()) {
    throw CatalogError("RID " + std::to_string(rid) + " outside " + std::to_string(total_rows()) + " rows");
  }
  return static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), rid) -
                                  cumulative_.begin());
}

std::pair<std::size_t, std::size_t> RidIndex::pages_covering(RidSpan span) const {
  if (span.empty()) throw CatalogError("cannot cover an empty RID span");
  return {rid_to_page(span.begin), rid_to_page(span.end - 1)};
}

std::vector<std::size_t> align_pages(const RidIndex& a, const RidIndex& b, std::size_t page_a) {
  if (a.total_rows() != b.total_rows()) throw CatalogError("RID indexes cover different row counts");
  auto [first, last] = b.pages_covering(a.page_span(page_a));
  std::vector<std::size_t> out;
  for (auto p = first; p <= last; ++p) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// Zone maps

ZoneMap::ZoneMap(std::uint32_t attr_count, std::vector<ZoneEntry> entries)
    : attr_count_(attr_count), entries_(std::move(entries)) {
  if (attr_count_ != 0 && entries_.size() % attr_count_ != 0) {
    throw CatalogError("zone map entry count is not a multiple of the attribute count");
  }
  if (attr_count_ == 0 && !entries_.empty()) throw CatalogError("zone map entries without attributes");
  for (const auto& e : entries_) {
    if (e.min > e.max) throw CatalogError("zone map entry with min above max");
  }
}

std::span<const ZoneEntry> ZoneMap::page(std::size_t p) const {
  if (attr_count_ == 0) return {};
  return std::span<const ZoneEntry>(entries_).subspan(p * attr_count_, attr_count_);
}

const ZoneEntry* ZoneMap::find(std::size_t p, std::uint32_t attr_id) const {
  if (p >= page_count()) return nullptr;
  for (const auto& e : page(p)) {
    if (e.attr_id == attr_id) return &e;
  }
  return nullptr;
}

ZoneMap build_zone_map(std::span<const AttributeKeys> attributes, const RidIndex& pages) {
  std::vector<ZoneEntry> entries;
  entries.reserve(attributes.size() * pages.page_count());
  for (std::size_t p = 0; p < pages.page_count(); ++p) {
    auto span = pages.page_span(p);
    for (const auto& attr : attributes) {
      if (attr.keys.size() < span.end) throw CatalogError("attribute keys shorter than the RID range");
      auto first = attr.keys.begin() + static_cast<std::ptrdiff_t>(span.begin);
      auto last = attr.keys.begin() + static_cast<std::ptrdiff_t>(span.end);
      auto [lo, hi] = std::minmax_element(first, last);
      entries.push_back({attr.attr_id, *lo, *hi});
    }
  }
  ZoneMap zm(static_cast<std::uint32_t>(attributes.size()), std::move(entries));
  zm.set_page_count(pages.page_count());
  return zm;
}

bool RangePredicate::matches(std::int64_t v) const {
  switch (op) {
    case CmpOp::Lt:
      return v < lo;
    case CmpOp::Le:
      return v <= lo;
    case CmpOp::Eq:
      return v == lo;
    case CmpOp::Ge:
      return v >= lo;
    case CmpOp::Gt:
      return v > lo;
    case CmpOp::Between:
      return v >= lo && v <= hi;
  }
  return false;
}

bool RangePredicate::may_match(std::int64_t min, std::int64_t max) const {
  switch (op) {
    case CmpOp::Lt:
      return min < lo;
    case CmpOp::Le:
      return min <= lo;
    case CmpOp::Eq:
      return min <= lo && lo <= max;
    case CmpOp::Ge:
      return max >= lo;
    case CmpOp::Gt:
      return max > lo;
    case CmpOp::Between:
      return lo <= hi && max >= lo && min <= hi;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Dictionary and pruning

std::size_t DictionaryEntry::ordinal_of(std::uint64_t page_id) const {
  auto it = std::lower_bound(page_ids.begin(), page_ids.end(), page_id);
  if (it == page_ids.end() || *it != page_id) {
    throw CatalogError("page " + std::to_string(page_id) + " not in column " + std::to_string(column_id));
  }
  return static_cast<std::size_t>(it - page_ids.begin());
}

PrunedPageList prune(const ZoneMap& zone_map, const DictionaryEntry& dictionary,
                     std::span<const RangePredicate> predicates) {
  PrunedPageList out{dictionary.column_id, {}};
  for (std::size_t p = 0; p < dictionary.page_ids.size(); ++p) {
    bool keep = true;
    for (const auto& pred : predicates) {
      const ZoneEntry* e = zone_map.find(p, pred.attr_id);
      if (e != nullptr && !pred.may_match(e->min, e->max)) {
        keep = false;
        break;
      }
    }
    if (keep) out.page_ids.push_back(dictionary.page_ids[p]);
  }
  return out;
}

IntervalSet covered_rids(const PrunedPageList& list, const RidIndex& index, const DictionaryEntry& dictionary) {
  std::vector<RidSpan> spans;
  spans.reserve(list.page_ids.size());
  for (auto id : list.page_ids) spans.push_back(index.page_span(dictionary.ordinal_of(id)));
  return IntervalSet::from_spans(std::move(spans));
}

IntersectedPages intersect_page_lists(std::span<const ColumnPages> columns) {
  IntersectedPages out;
  if (columns.empty()) return out;
  out.rids = covered_rids(*columns[0].list, *columns[0].index, *columns[0].dictionary);
  for (std::size_t c = 1; c < columns.size(); ++c) {
    out.rids = out.rids.intersect(covered_rids(*columns[c].list, *columns[c].index, *columns[c].dictionary));
  }
  for (const auto& col : columns) {
    PrunedPageList list{col.list->column_id, {}};
    std::size_t next_unseen = 0;
    for (const auto& span : out.rids.spans()) {
      auto [first, last] = col.index->pages_covering(span);
      for (auto p = std::max(first, next_unseen); p <= last; ++p) list.page_ids.push_back(col.dictionary->page_ids[p]);
      next_unseen = std::max(next_unseen, last + 1);
    }
    out.lists.push_back(std::move(list));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Side-files

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CatalogError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CatalogError("cannot write " + path.string());
}

void write_u64_file(const std::filesystem::path& path, std::span<const std::uint64_t> values) {
  std::vector<std::uint8_t> bytes;
  ByteWriter w(bytes);
  for (auto v : values) w.put<std::uint64_t>(v);
  write_file_bytes(path, bytes);
}

void write_u32_file(const std::filesystem::path& path, std::span<const std::uint32_t> values) {
  std::vector<std::uint8_t> bytes;
  ByteWriter w(bytes);
  for (auto v : values) w.put<std::uint32_t>(v);
  write_file_bytes(path, bytes);
}

std::vector<std::uint64_t> read_u64_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() % 8 != 0) throw CatalogError(path.string() + " is not a u64 array");
  std::vector<std::uint64_t> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_le<std::uint64_t>(bytes.data() + 8 * i);
  return out;
}

std::vector<std::uint32_t> read_u32_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() % 4 != 0) throw CatalogError(path.string() + " is not a u32 array");
  std::vector<std::uint32_t> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_le<std::uint32_t>(bytes.data() + 4 * i);
  return out;
}

std::vector<std::uint8_t> encode_zone_map(const ZoneMap& zone_map) {
  std::vector<std::uint8_t> bytes;
  ByteWriter w(bytes);
  w.put<std::uint32_t>(zone_map.attr_count());
  for (const auto& e : zone_map.entries()) {
    w.put<std::uint32_t>(e.attr_id);
    w.put<std::int64_t>(e.min);
    w.put<std::int64_t>(e.max);
  }
  return bytes;
}

ZoneMap decode_zone_map(std::span<const std::uint8_t> bytes, std::size_t page_count) {
  ByteReader<CatalogError> r(bytes);
  auto attr_count = r.get<std::uint32_t>();
  std::vector<ZoneEntry> entries(std::size_t{attr_count} * page_count);
  for (auto& e : entries) {
    e.attr_id = r.get<std::uint32_t>();
    e.min = r.get<std::int64_t>();
    e.max = r.get<std::int64_t>();
  }
  if (r.remaining() != 0) throw CatalogError("zone map has trailing bytes");
  ZoneMap zm(attr_count, std::move(entries));
  zm.set_page_count(page_count);
  return zm;
}

void write_zone_map_file(const std::filesystem::path& path, const ZoneMap& zone_map) {
  write_file_bytes(path, encode_zone_map(zone_map));
}

ZoneMap read_zone_map_file(const std::filesystem::path& path, std::size_t page_count) {
  return decode_zone_map(read_file_bytes(path), page_count);
}

std::string side_file_stem(const std::string& table, const std::string& column) { return table + "." + column; }

// ---------------------------------------------------------------------------
// Catalog

const ColumnCatalog& TableCatalog::column(const std::string& col) const {
  for (const auto& c : columns) {
    if (c.name == col) return c;
  }
  throw CatalogError("table " + name + " has no column " + col);
}

std::optional<std::uint32_t> TableCatalog::attribute_id(const std::string& attr) const {
  for (const auto& z : zone_attributes) {
    if (z.spec.name == attr) return z.attr_id;
  }
  return std::nullopt;
}

const TableCatalog& Catalog::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw CatalogError("unknown table " + name);
}

const ColumnCatalog& Catalog::column_of_page(std::uint64_t page_id) const {
  for (const auto& t : tables) {
    for (const auto& c : t.columns) {
      if (page_id >= c.first_page_id && page_id < c.first_page_id + c.page_count()) return c;
    }
  }
  throw CatalogError("unknown page " + std::to_string(page_id));
}

std::uint64_t Catalog::total_pages() const {
  std::uint64_t n = 0;
  for (const auto& t : tables) {
    for (const auto& c : t.columns) n += c.page_count();
  }
  return n;
}

using nlohmann::json;

void Catalog::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json doc;
  doc["format_version"] = 1;
  doc["page_size"] = page_size;
  doc["device_count"] = device_count;
  doc["device_capacity"] = device_capacity;
  doc["schema"] = json::parse(schema.to_json());
  doc["tables"] = json::array();
  for (const auto& t : tables) {
    json jt{{"name", t.name}, {"row_count", t.row_count}, {"cluster_key", t.cluster_key}};
    jt["zone_attributes"] = json::array();
    for (const auto& z : t.zone_attributes) jt["zone_attributes"].push_back({{"id", z.attr_id}, {"name", z.spec.name}});
    jt["columns"] = json::array();
    for (const auto& c : t.columns) {
      jt["columns"].push_back({{"name", c.name},
                               {"type", c.type.to_string()},
                               {"column_id", c.column_id},
                               {"first_page_id", c.first_page_id},
                               {"page_count", c.page_count()},
                               {"region_start", c.region.start},
                               {"region_capacity", c.region.capacity}});
      auto stem = dir / side_file_stem(t.name, c.name);
      write_u64_file(stem.string() + ".offsets", c.offsets);
      write_u32_file(stem.string() + ".sizes", c.sizes);
      write_u64_file(stem.string() + ".rids", c.rids.cumulative_counts());
      write_zone_map_file(stem.string() + ".zonemap", c.zone_map);
    }
    doc["tables"].push_back(jt);
  }
  std::ofstream out(dir / "catalog.json");
  out << doc.dump(2) << '\n';
  if (!out) throw CatalogError("cannot write catalog in " + dir.string());
}

Catalog Catalog::open(const std::filesystem::path& dir) {
  std::ifstream in(dir / "catalog.json");
  if (!in) throw CatalogError("no catalog.json in " + dir.string());
  Catalog cat;
  try {
    json doc = json::parse(in);
    cat.page_size = doc.at("page_size").get<std::size_t>();
    cat.device_count = doc.at("device_count").get<std::uint32_t>();
    cat.device_capacity = doc.at("device_capacity").get<std::uint64_t>();
    cat.schema = Schema::from_json(doc.at("schema").dump());
    for (const auto& jt : doc.at("tables")) {
      TableCatalog t;
      t.name = jt.at("name").get<std::string>();
      t.row_count = jt.at("row_count").get<std::uint64_t>();
      t.cluster_key = jt.at("cluster_key").get<std::string>();
      const auto& ts = cat.schema.table(t.name);
      for (const auto& jz : jt.at("zone_attributes")) {
        ZoneAttribute z;
        z.attr_id = jz.at("id").get<std::uint32_t>();
        auto name = jz.at("name").get<std::string>();
        for (const auto& spec : ts.zone_attributes) {
          if (spec.name == name) z.spec = spec;
        }
        t.zone_attributes.push_back(std::move(z));
      }
      for (const auto& jc : jt.at("columns")) {
        ColumnCatalog c;
        c.name = jc.at("name").get<std::string>();
        c.type = ColumnType::parse(jc.at("type").get<std::string>());
        c.column_id = jc.at("column_id").get<std::uint32_t>();
        c.first_page_id = jc.at("first_page_id").get<std::uint64_t>();
        auto pages = jc.at("page_count").get<std::size_t>();
        c.region = {c.column_id, jc.at("region_start").get<std::uint64_t>(),
                    jc.at("region_capacity").get<std::uint64_t>()};
        auto stem = (dir / side_file_stem(t.name, c.name)).string();
        c.offsets = read_u64_file(stem + ".offsets");
        c.sizes = read_u32_file(stem + ".sizes");
        c.rids = RidIndex(read_u64_file(stem + ".rids"));
        c.zone_map = read_zone_map_file(stem + ".zonemap", pages);
        if (c.offsets.size() != pages || c.sizes.size() != pages || c.rids.page_count() != pages) {
          throw CatalogError("side-files of " + stem + " disagree on page count");
        }
        if (c.rids.total_rows() != t.row_count) throw CatalogError("RID index of " + stem + " disagrees on rows");
        c.dictionary.column_id = c.column_id;
        for (std::size_t p = 0; p < pages; ++p) {
          c.dictionary.page_ids.push_back(c.first_page_id + p);
          c.dictionary.first_rids.push_back(c.rids.page_span(p).begin);
        }
        t.columns.push_back(std::move(c));
      }
      cat.tables.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw CatalogError(std::string("malformed catalog: ") + e.what());
  }
  return cat;
}

}  // namespace colfuse
