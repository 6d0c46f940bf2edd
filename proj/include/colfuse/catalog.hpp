#pragma once

// Page placement metadata and compile-time pruning: RID indexes, zone maps,
// the column -> page dictionary, pruned page lists, and the side-files that
// persist them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colfuse/codec/types.hpp"
#include "colfuse/schema.hpp"

namespace colfuse {

/// Half-open RID interval.
struct RidSpan {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t size() const { return end - begin; }
  bool empty() const { return begin >= end; }
  friend bool operator==(const RidSpan&, const RidSpan&) = default;
};

/// Sorted, disjoint, non-adjacent half-open RID intervals.
class IntervalSet {
 public:
  IntervalSet() = default;
  /// Normalizes arbitrary spans (sorts, drops empties, merges overlaps and adjacency).
  static IntervalSet from_spans(std::vector<RidSpan> spans);

  const std::vector<RidSpan>& spans() const { return spans_; }
  bool empty() const { return spans_.empty(); }
  std::uint64_t cardinality() const;
  bool contains(std::uint64_t rid) const;

  IntervalSet intersect(const IntervalSet& other) const;
  /// The part of this set inside `window`.
  IntervalSet clip(RidSpan window) const;

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<RidSpan> spans_;
};

/// Per-column prefix sums of page row counts: entry i = rows in pages 0..=i.
class RidIndex {
 public:
  RidIndex() = default;
  /// Throws CatalogError unless strictly increasing.
  explicit RidIndex(std::vector<std::uint64_t> cumulative_counts);
  static RidIndex from_page_counts(std::span<const std::uint64_t> counts);

  const std::vector<std::uint64_t>& cumulative_counts() const { return cumulative_; }
  std::size_t page_count() const { return cumulative_.size(); }
  std::uint64_t total_rows() const { return cumulative_.empty() ? 0 : cumulative_.back(); }
  RidSpan page_span(std::size_t page) const;

  /// Smallest page i with cumulative_counts[i] > rid. Throws CatalogError when out of range.
  std::size_t rid_to_page(std::uint64_t rid) const;
  /// Ordinals [first, last] of the pages overlapping a non-empty span.
  std::pair<std::size_t, std::size_t> pages_covering(RidSpan span) const;

  friend bool operator==(const RidIndex&, const RidIndex&) = default;

 private:
  std::vector<std::uint64_t> cumulative_;
};

/// Minimal contiguous run of B's pages covering A's page `page_a`.
std::vector<std::size_t> align_pages(const RidIndex& a, const RidIndex& b, std::size_t page_a);

struct ZoneEntry {
  std::uint32_t attr_id = 0;
  std::int64_t min = 0;
  std::int64_t max = 0;

  friend bool operator==(const ZoneEntry&, const ZoneEntry&) = default;
};

/// Per-page min/max for a fixed set of attributes (same attributes on every page).
class ZoneMap {
 public:
  ZoneMap() = default;
  ZoneMap(std::uint32_t attr_count, std::vector<ZoneEntry> entries);

  std::uint32_t attr_count() const { return attr_count_; }
  std::size_t page_count() const { return attr_count_ == 0 ? page_count_ : entries_.size() / attr_count_; }
  std::span<const ZoneEntry> page(std::size_t p) const;
  const ZoneEntry* find(std::size_t p, std::uint32_t attr_id) const;
  const std::vector<ZoneEntry>& entries() const { return entries_; }
  void set_page_count(std::size_t n) { page_count_ = n; }

  friend bool operator==(const ZoneMap&, const ZoneMap&) = default;

 private:
  std::uint32_t attr_count_ = 0;
  std::size_t page_count_ = 0;  // only used when attr_count_ == 0
  std::vector<ZoneEntry> entries_;
};

/// Row-aligned keys of one attribute over the sorted table.
struct AttributeKeys {
  std::uint32_t attr_id = 0;
  std::span<const std::int64_t> keys;
};

/// Exact min/max of every attribute over each page's RID span.
ZoneMap build_zone_map(std::span<const AttributeKeys> attributes, const RidIndex& pages);

enum class CmpOp : std::uint8_t { Lt, Le, Eq, Ge, Gt, Between };

/// attr `op` lo, or lo <= attr <= hi for Between.
struct RangePredicate {
  std::uint32_t attr_id = 0;
  CmpOp op = CmpOp::Eq;
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  bool matches(std::int64_t v) const;
  /// Can any value in [min, max] satisfy the predicate? Bounds inclusive.
  bool may_match(std::int64_t min, std::int64_t max) const;
};

struct DictionaryEntry {
  std::uint32_t column_id = 0;
  std::vector<std::uint64_t> page_ids;
  std::vector<std::uint64_t> first_rids;

  /// Ordinal of a page id within the column; throws CatalogError if absent.
  std::size_t ordinal_of(std::uint64_t page_id) const;
};

struct PrunedPageList {
  std::uint32_t column_id = 0;
  std::vector<std::uint64_t> page_ids;

  friend bool operator==(const PrunedPageList&, const PrunedPageList&) = default;
};

/// Keeps pages where every predicate whose attribute is mapped may match.
PrunedPageList prune(const ZoneMap& zone_map, const DictionaryEntry& dictionary,
                     std::span<const RangePredicate> predicates);

struct ColumnPages {
  const PrunedPageList* list;
  const RidIndex* index;
  const DictionaryEntry* dictionary;
};

struct IntersectedPages {
  std::vector<PrunedPageList> lists;
  IntervalSet rids;  // RIDs covered by every input list
};

/// RIDs covered by a list of pages.
IntervalSet covered_rids(const PrunedPageList& list, const RidIndex& index, const DictionaryEntry& dictionary);

/// Intersects the RID coverage of all lists and maps it back to the minimal
/// page list of every column.
IntersectedPages intersect_page_lists(std::span<const ColumnPages> columns);

// Side-files, little-endian.
void write_u64_file(const std::filesystem::path& path, std::span<const std::uint64_t> values);
void write_u32_file(const std::filesystem::path& path, std::span<const std::uint32_t> values);
std::vector<std::uint64_t> read_u64_file(const std::filesystem::path& path);
std::vector<std::uint32_t> read_u32_file(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_zone_map(const ZoneMap& zone_map);
ZoneMap decode_zone_map(std::span<const std::uint8_t> bytes, std::size_t page_count);
void write_zone_map_file(const std::filesystem::path& path, const ZoneMap& zone_map);
ZoneMap read_zone_map_file(const std::filesystem::path& path, std::size_t page_count);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

struct Region {
  std::uint32_t column_id = 0;
  std::uint64_t start = 0;  // device-relative, identical on every device
  std::uint64_t capacity = 0;

  friend bool operator==(const Region&, const Region&) = default;
};

struct ColumnCatalog {
  std::string name;
  ColumnType type;
  std::uint32_t column_id = 0;
  std::uint64_t first_page_id = 0;
  Region region;
  std::vector<std::uint64_t> offsets;  // device-relative byte offset per page
  std::vector<std::uint32_t> sizes;    // compressed bytes per page
  RidIndex rids;
  ZoneMap zone_map;
  DictionaryEntry dictionary;

  std::size_t page_count() const { return sizes.size(); }
};

struct ZoneAttribute {
  std::uint32_t attr_id = 0;
  ZoneAttributeSpec spec;
};

struct TableCatalog {
  std::string name;
  std::uint64_t row_count = 0;
  std::string cluster_key;
  std::vector<ColumnCatalog> columns;
  std::vector<ZoneAttribute> zone_attributes;  // passed the cardinality gate

  const ColumnCatalog& column(const std::string& name) const;
  std::optional<std::uint32_t> attribute_id(const std::string& name) const;
};

/// Everything needed to locate pages and prune, held in memory for queries.
struct Catalog {
  std::size_t page_size = 0;
  std::uint32_t device_count = 1;
  std::uint64_t device_capacity = 0;
  std::vector<TableCatalog> tables;
  Schema schema;

  const TableCatalog& table(const std::string& name) const;
  /// Column owning a page id; throws CatalogError for unknown ids.
  const ColumnCatalog& column_of_page(std::uint64_t page_id) const;
  std::uint64_t total_pages() const;

  /// Writes catalog.json plus <table>.<column>.{offsets,sizes,rids,zonemap}.
  void save(const std::filesystem::path& dir) const;
  static Catalog open(const std::filesystem::path& dir);
};

std::string side_file_stem(const std::string& table, const std::string& column);

}  // namespace colfuse
