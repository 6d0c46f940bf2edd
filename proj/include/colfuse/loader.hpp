#pragma once

// Sort-based clustering and two-pass loading. Pass 1 fixes the uncompressed
// page count of every column and reserves one device region per column.
// Pass 2 compresses pages on a worker pool, assigns page ids in region order,
// writes pages densely from each region start and emits side-files and zone maps.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "colfuse/catalog.hpp"
#include "colfuse/codec/for_codec.hpp"
#include "colfuse/iosim.hpp"
#include "colfuse/page.hpp"
#include "colfuse/parallel.hpp"
#include "colfuse/schema.hpp"

namespace colfuse {

inline constexpr std::size_t kDefaultCardinalityGate = 5000;

struct LoadPlan {
  TableSchema table;
  std::size_t page_size = kDefaultPageSize;
  std::uint32_t device_count = 1;

  /// Throws LoadError for an unknown cluster key or unsupported page size.
  void validate() const;
};

struct LoadConfig {
  std::size_t page_size = kDefaultPageSize;
  std::uint32_t device_count = 1;
  std::size_t workers = default_worker_count();
  std::size_t cardinality_gate = kDefaultCardinalityGate;
  std::size_t block_values = kDefaultMiniBlockValues;
  std::uint64_t region_alignment = 4096;
};

/// Stable ascending order of a key column.
std::vector<std::size_t> cluster_order(const ColumnValues& key);
/// Rows permuted by cluster_order; RIDs are the row positions of the result.
TableData sort_cluster(const TableData& rows, std::size_t key_column);

/// Pass-1 rows per page: page_size / fixed width for fixed-length types, a
/// greedy fill of the uncompressed layout for variable-length ones.
std::vector<std::uint64_t> plan_page_rows(const ColumnValues& values, const ColumnType& type, std::size_t page_size);

/// Upper bound on the compressed bytes of one pass-1 page, splits included.
std::uint64_t compressed_page_bound(const ColumnType& type, std::uint64_t rows, std::uint64_t raw_bytes);

struct ColumnLayout {
  std::uint32_t column_id = 0;
  std::vector<std::uint64_t> page_rows;  // pass-1 pages
  Region region;
};

/// Pass 1 for one table. Regions follow each other from `base` in column order;
/// capacity is max(pages * page_size, compressed bound).
std::vector<ColumnLayout> plan_regions(const TableData& sorted, const LoadPlan& plan, std::uint64_t base = 0,
                                       std::uint32_t first_column_id = 0, std::uint64_t alignment = 4096);

/// One compressed page before placement (page id still zero).
struct EncodedPage {
  std::vector<std::uint8_t> bytes;
  std::uint64_t first_rid = 0;
  std::uint32_t value_count = 0;
};

/// Encodes rows [begin, end) of a column, splitting at the overflow point when
/// the page does not fit.
std::vector<EncodedPage> encode_page_range(const ColumnValues& values, const ColumnType& type, std::uint32_t column_id,
                                           std::size_t begin, std::size_t end, std::size_t page_size,
                                           std::size_t block_values = kDefaultMiniBlockValues);

/// Writes a page id into serialized page bytes and refreshes the checksum.
void stamp_page_id(std::vector<std::uint8_t>& page, std::uint64_t page_id);

/// Integer keys of every designated attribute that is integer-backed and has at
/// most `gate` distinct values, in declaration order. Reference attributes follow one
/// foreign-key hop into `tables`.
std::vector<std::pair<ZoneAttributeSpec, IntValues>> zone_attribute_keys(const Schema& schema,
                                                                         std::span<const TableData> tables,
                                                                         const TableSchema& table,
                                                                         const TableData& sorted, std::size_t gate);

/// Sorts, plans and writes every table of `schema` (matched to `tables` by
/// name) onto `devices`. The returned catalog is what Catalog::save persists.
Catalog load_tables(const Schema& schema, std::span<const TableData> tables, DeviceArray& devices,
                    const LoadConfig& config = {});

/// <dir>/<table>.tbl for every table in the schema.
std::vector<TableData> read_input_dir(const std::filesystem::path& dir, const Schema& schema);

/// Reads and decodes every page of a table in RID order.
TableData read_back_table(const Catalog& catalog, const DeviceArray& devices, const std::string& table);

}  // namespace colfuse
