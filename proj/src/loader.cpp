#include "colfuse/loader.hpp"

#include <zlib.h>

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "colfuse/codec/bytes.hpp"
#include "colfuse/error.hpp"

namespace colfuse {

namespace {

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return a <= 1 ? v : (v + a - 1) / a * a; }

std::uint64_t div_ceil(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

template <class T>
std::vector<T> permute(const std::vector<T>& in, std::span<const std::size_t> order) {
  std::vector<T> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(in[i]);
  return out;
}

ColumnValues slice(const ColumnValues& values, std::size_t begin, std::size_t end) {
  return std::visit(
      [&](const auto& v) -> ColumnValues {
        using V = std::decay_t<decltype(v)>;
        return V(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end));
      },
      values);
}

/// Integer keys of a column as stored: CHAR(1..2) packed, VARCHAR rejected.
std::optional<IntValues> integer_keys(const ColumnValues& values, const ColumnType& type) {
  if (!type.is_integer_backed()) return std::nullopt;
  if (const auto* ints = std::get_if<IntValues>(&values)) return *ints;
  const auto& strs = std::get<StrValues>(values);
  IntValues out;
  out.reserve(strs.size());
  for (const auto& s : strs) out.push_back(pack_short_char(s, type.length));
  return out;
}

const TableData& find_table(std::span<const TableData> tables, const std::string& name) {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw LoadError("no input rows for table " + name);
}

}  // namespace

void LoadPlan::validate() const {
  if (page_size < kMinPageSize || page_size > kMaxPageSize) {
    throw LoadError("page size " + std::to_string(page_size) + " outside [" + std::to_string(kMinPageSize) + ", " +
                    std::to_string(kMaxPageSize) + "]");
  }
  if (device_count == 0) throw LoadError("device count must be positive");
  try {
    table.column_index(table.cluster_key);
  } catch (const Error&) {
    throw LoadError("cluster key " + table.cluster_key + " is not a column of " + table.name);
  }
}

std::vector<std::size_t> cluster_order(const ColumnValues& key) {
  std::vector<std::size_t> order(value_count(key));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::visit([&](const auto& v) { std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; }); },
             key);
  return order;
}

TableData sort_cluster(const TableData& rows, std::size_t key_column) {
  if (key_column >= rows.columns.size()) throw LoadError("cluster key column out of range");
  auto order = cluster_order(rows.columns[key_column]);
  TableData out;
  out.name = rows.name;
  for (const auto& col : rows.columns) {
    out.columns.push_back(std::visit([&](const auto& v) -> ColumnValues { return permute(v, order); }, col));
  }
  return out;
}

std::vector<std::uint64_t> plan_page_rows(const ColumnValues& values, const ColumnType& type, std::size_t page_size) {
  std::vector<std::uint64_t> pages;
  std::uint64_t n = value_count(values);
  if (type.is_integer_backed()) {
    std::uint64_t per_page = page_size / type.fixed_width();
    for (std::uint64_t done = 0; done < n; done += per_page) pages.push_back(std::min(per_page, n - done));
    return pages;
  }
  const auto& strs = std::get<StrValues>(values);
  const std::size_t empty = uncompressed_page_bytes({.layout = PageLayout::Varlen}, type, 0);
  std::size_t used = empty;
  std::uint64_t rows = 0;
  for (const auto& s : strs) {
    std::size_t add = s.size() + 12;
    if (rows > 0 && used + add > page_size) {
      pages.push_back(rows);
      used = empty;
      rows = 0;
    }
    used += add;
    ++rows;
  }
  if (rows > 0) pages.push_back(rows);
  return pages;
}

std::uint64_t compressed_page_bound(const ColumnType& type, std::uint64_t rows, std::uint64_t raw_bytes) {
  constexpr std::uint64_t kBlockMeta = kMiniBlockMetaBytes + 8;  // directory entry plus word alignment
  constexpr std::uint64_t kPageFrame = kPageHeaderBytes + 16;
  if (type.is_integer_backed()) {
    return rows * static_cast<std::uint64_t>(type.width_class() / 8) + (div_ceil(rows, 128) + 2) * kBlockMeta +
           2 * kPageFrame;
  }
  // FSST output is at most twice its input; a split page may need up to four pieces.
  return 2 * raw_bytes + rows * 18 + (div_ceil(rows, 128) + 4) * kBlockMeta +
         4 * (kPageFrame + kMaxSerializedTable);
}

std::vector<ColumnLayout> plan_regions(const TableData& sorted, const LoadPlan& plan, std::uint64_t base,
                                       std::uint32_t first_column_id, std::uint64_t alignment) {
  plan.validate();
  if (sorted.columns.size() != plan.table.columns.size()) throw LoadError("column count mismatch for " + plan.table.name);
  std::vector<ColumnLayout> out;
  std::uint64_t cursor = align_up(base, alignment);
  for (std::size_t c = 0; c < sorted.columns.size(); ++c) {
    const auto& type = plan.table.columns[c].type;
    ColumnLayout layout;
    layout.column_id = first_column_id + static_cast<std::uint32_t>(c);
    layout.page_rows = plan_page_rows(sorted.columns[c], type, plan.page_size);
    std::uint64_t bound = 0;
    std::uint64_t row = 0;
    for (auto rows : layout.page_rows) {
      std::uint64_t raw = 0;
      if (const auto* s = std::get_if<StrValues>(&sorted.columns[c])) {
        for (std::uint64_t i = row; i < row + rows; ++i) raw += (*s)[i].size();
      }
      bound += compressed_page_bound(type, rows, raw);
      row += rows;
    }
    std::uint64_t capacity = std::max<std::uint64_t>(layout.page_rows.size() * plan.page_size, bound);
    layout.region = {layout.column_id, cursor, capacity};
    cursor = align_up(cursor + capacity, alignment);
    out.push_back(std::move(layout));
  }
  return out;
}

std::vector<EncodedPage> encode_page_range(const ColumnValues& values, const ColumnType& type, std::uint32_t column_id,
                                           std::size_t begin, std::size_t end, std::size_t page_size,
                                           std::size_t block_values) {
  std::vector<EncodedPage> out;
  PageOptions opts;
  opts.column_id = column_id;
  opts.page_size = page_size;
  opts.block_values = block_values;
  while (begin < end) {
    std::size_t take = end - begin;
    for (;;) {
      try {
        EncodedPage p;
        if (type.is_integer_backed()) {
          p.bytes = serialize_page(encode_fixed_page(slice(values, begin, begin + take), type, begin, opts));
        } else {
          const auto& strs = std::get<StrValues>(values);
          std::vector<std::uint64_t> rids(take);
          std::iota(rids.begin(), rids.end(), std::uint64_t{begin});
          p.bytes = serialize_page(encode_varlen_page(std::span(strs).subspan(begin, take), rids, opts));
        }
        p.first_rid = begin;
        p.value_count = static_cast<std::uint32_t>(take);
        out.push_back(std::move(p));
        break;
      } catch (const PageOverflow& e) {
        // The prefix gets its own symbol table when re-encoded, so it may shrink again.
        if (e.max_prefix() == 0 || e.max_prefix() >= take) {
          throw LoadError("row " + std::to_string(begin) + " of column " + std::to_string(column_id) +
                          " does not fit a " + std::to_string(page_size) + "-byte page");
        }
        take = e.max_prefix();
      } catch (const OversizedRecord& e) {
        throw LoadError("column " + std::to_string(column_id) + ", row " + std::to_string(begin + e.index()) +
                        ": " + e.what());
      }
    }
    begin += take;
  }
  return out;
}

void stamp_page_id(std::vector<std::uint8_t>& page, std::uint64_t page_id) {
  if (page.size() < kPageHeaderBytes + 4) throw CorruptPage("page too short to stamp");
  store_le<std::uint64_t>(page.data(), page_id);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, page.data(), static_cast<uInt>(page.size() - 4));
  store_le<std::uint32_t>(page.data() + page.size() - 4, static_cast<std::uint32_t>(crc));
}

std::vector<std::pair<ZoneAttributeSpec, IntValues>> zone_attribute_keys(const Schema& schema,
                                                                         std::span<const TableData> tables,
                                                                         const TableSchema& table,
                                                                         const TableData& sorted, std::size_t gate) {
  std::vector<std::pair<ZoneAttributeSpec, IntValues>> out;
  for (const auto& spec : table.zone_attributes) {
    auto local_idx = table.column_index(spec.column);
    auto local = integer_keys(sorted.columns[local_idx], table.columns[local_idx].type);
    if (!local) continue;
    IntValues keys;
    if (!spec.is_reference()) {
      keys = std::move(*local);
    } else {
      const auto& ref_schema = schema.table(spec.ref_table);
      const auto& ref_rows = find_table(tables, spec.ref_table);
      auto key_idx = ref_schema.column_index(spec.ref_key);
      auto val_idx = ref_schema.column_index(spec.ref_column);
      auto ref_keys = integer_keys(ref_rows.columns[key_idx], ref_schema.columns[key_idx].type);
      auto ref_vals = integer_keys(ref_rows.columns[val_idx], ref_schema.columns[val_idx].type);
      if (!ref_keys || !ref_vals) continue;
      std::unordered_map<std::int64_t, std::int64_t> lookup;
      lookup.reserve(ref_keys->size());
      for (std::size_t i = 0; i < ref_keys->size(); ++i) lookup.emplace((*ref_keys)[i], (*ref_vals)[i]);
      keys.reserve(local->size());
      for (std::size_t i = 0; i < local->size(); ++i) {
        auto it = lookup.find((*local)[i]);
        if (it == lookup.end()) {
          throw LoadError(table.name + "." + spec.column + " row " + std::to_string(i) + " has no match in " +
                          spec.ref_table + "." + spec.ref_key);
        }
        keys.push_back(it->second);
      }
    }
    std::unordered_set<std::int64_t> distinct;
    bool small = true;
    for (auto k : keys) {
      distinct.insert(k);
      if (distinct.size() > gate) {
        small = false;
        break;
      }
    }
    if (small) out.emplace_back(spec, std::move(keys));
  }
  return out;
}

Catalog load_tables(const Schema& schema, std::span<const TableData> tables, DeviceArray& devices,
                    const LoadConfig& config) {
  if (devices.device_count() != config.device_count) {
    throw LoadError("device array has " + std::to_string(devices.device_count()) + " devices, plan expects " +
                    std::to_string(config.device_count));
  }
  Catalog cat;
  cat.page_size = config.page_size;
  cat.device_count = config.device_count;
  cat.schema = schema;

  struct TableWork {
    const TableSchema* schema;
    TableData sorted;
    std::vector<ColumnLayout> layouts;
  };
  std::vector<TableWork> work;
  std::uint64_t cursor = 0;
  std::uint32_t next_column_id = 0;
  for (const auto& ts : schema.tables) {
    LoadPlan plan{ts, config.page_size, config.device_count};
    plan.validate();
    const auto& input = find_table(tables, ts.name);
    if (input.columns.size() != ts.columns.size()) throw LoadError("column count mismatch for " + ts.name);
    TableWork tw{&ts, sort_cluster(input, ts.column_index(ts.cluster_key)), {}};
    tw.layouts = plan_regions(tw.sorted, plan, cursor, next_column_id, config.region_alignment);
    for (const auto& l : tw.layouts) {
      if (l.region.start + l.region.capacity > devices.capacity()) {
        throw LoadError("region of " + ts.name + "." + ts.columns[l.column_id - next_column_id].name +
                        " [" + std::to_string(l.region.start) + ", +" + std::to_string(l.region.capacity) +
                        ") exceeds device capacity " + std::to_string(devices.capacity()));
      }
      cursor = align_up(l.region.start + l.region.capacity, config.region_alignment);
    }
    next_column_id += static_cast<std::uint32_t>(ts.columns.size());
    work.push_back(std::move(tw));
  }

  // Pass 2a: compress every pass-1 page.
  struct Task {
    std::size_t table, column, page;
    std::uint64_t begin, end;
  };
  std::vector<Task> tasks;
  for (std::size_t t = 0; t < work.size(); ++t) {
    for (std::size_t c = 0; c < work[t].layouts.size(); ++c) {
      std::uint64_t row = 0;
      for (std::size_t p = 0; p < work[t].layouts[c].page_rows.size(); ++p) {
        auto rows = work[t].layouts[c].page_rows[p];
        tasks.push_back({t, c, p, row, row + rows});
        row += rows;
      }
    }
  }
  std::vector<std::vector<EncodedPage>> encoded(tasks.size());
  parallel_for(tasks.size(), config.workers, [&](std::size_t i, std::size_t) {
    const auto& task = tasks[i];
    const auto& tw = work[task.table];
    encoded[i] = encode_page_range(tw.sorted.columns[task.column], tw.schema->columns[task.column].type,
                                   tw.layouts[task.column].column_id, task.begin, task.end, config.page_size,
                                   config.block_values);
  });

  // Barrier passed: ids and offsets in region order.
  struct Placement {
    std::size_t task, piece;
    std::uint64_t page_id, offset;
  };
  std::vector<Placement> placements;
  std::uint64_t next_page_id = 0;
  std::size_t task_cursor = 0;
  for (std::size_t t = 0; t < work.size(); ++t) {
    auto& tw = work[t];
    TableCatalog tc;
    tc.name = tw.schema->name;
    tc.row_count = tw.sorted.row_count();
    tc.cluster_key = tw.schema->cluster_key;
    auto attrs = zone_attribute_keys(schema, tables, *tw.schema, tw.sorted, config.cardinality_gate);
    for (std::size_t a = 0; a < attrs.size(); ++a) tc.zone_attributes.push_back({static_cast<std::uint32_t>(a), attrs[a].first});
    std::vector<AttributeKeys> attr_keys;
    for (std::size_t a = 0; a < attrs.size(); ++a) attr_keys.push_back({static_cast<std::uint32_t>(a), attrs[a].second});

    for (std::size_t c = 0; c < tw.layouts.size(); ++c) {
      const auto& layout = tw.layouts[c];
      ColumnCatalog cc;
      cc.name = tw.schema->columns[c].name;
      cc.type = tw.schema->columns[c].type;
      cc.column_id = layout.column_id;
      cc.first_page_id = next_page_id;
      cc.region = layout.region;
      std::uint64_t offset = layout.region.start;
      std::vector<std::uint64_t> counts;
      for (std::size_t p = 0; p < layout.page_rows.size(); ++p, ++task_cursor) {
        auto& pieces = encoded[task_cursor];
        for (std::size_t k = 0; k < pieces.size(); ++k) {
          placements.push_back({task_cursor, k, next_page_id, offset});
          cc.offsets.push_back(offset);
          cc.sizes.push_back(static_cast<std::uint32_t>(pieces[k].bytes.size()));
          counts.push_back(pieces[k].value_count);
          offset += pieces[k].bytes.size();
          ++next_page_id;
        }
      }
      if (offset > layout.region.start + layout.region.capacity) {
        throw LoadError("compressed pages of " + tc.name + "." + cc.name + " overflow their region by " +
                        std::to_string(offset - layout.region.start - layout.region.capacity) + " bytes");
      }
      cc.rids = RidIndex::from_page_counts(counts);
      cc.zone_map = build_zone_map(attr_keys, cc.rids);
      cc.dictionary.column_id = cc.column_id;
      for (std::size_t p = 0; p < cc.page_count(); ++p) {
        cc.dictionary.page_ids.push_back(cc.first_page_id + p);
        cc.dictionary.first_rids.push_back(cc.rids.page_span(p).begin);
      }
      tc.columns.push_back(std::move(cc));
    }
    cat.tables.push_back(std::move(tc));
  }
  cat.device_capacity = devices.capacity() == UINT64_MAX ? cursor : devices.capacity();

  // Pass 2b: stamp ids and write. Each placement owns a disjoint extent.
  parallel_for(placements.size(), config.workers, [&](std::size_t i, std::size_t) {
    const auto& pl = placements[i];
    auto& bytes = encoded[pl.task][pl.piece].bytes;
    stamp_page_id(bytes, pl.page_id);
    devices.write(devices.device_of(pl.page_id), pl.offset, bytes);
    std::vector<std::uint8_t>().swap(bytes);
  });
  devices.flush();
  return cat;
}

std::vector<TableData> read_input_dir(const std::filesystem::path& dir, const Schema& schema) {
  std::vector<TableData> out;
  for (const auto& ts : schema.tables) {
    auto path = dir / (ts.name + ".tbl");
    if (!std::filesystem::exists(path)) throw LoadError("missing input file " + path.string());
    out.push_back(read_row_file(path, ts));
  }
  return out;
}

TableData read_back_table(const Catalog& catalog, const DeviceArray& devices, const std::string& table) {
  const auto& tc = catalog.table(table);
  TableData out;
  out.name = tc.name;
  for (const auto& cc : tc.columns) {
    ColumnValues col = cc.type.is_string() ? ColumnValues(StrValues{}) : ColumnValues(IntValues{});
    for (std::size_t p = 0; p < cc.page_count(); ++p) {
      auto loc = resolve_page(catalog, cc.first_page_id + p);
      auto bytes = devices.read(loc.device, loc.offset, loc.length);
      auto page = parse_page(bytes);
      if (const auto* fp = std::get_if<FixedPage>(&page)) {
        auto vals = decode_fixed_page(*fp, cc.type);
        std::visit(
            [&](auto& dst) {
              auto& src = std::get<std::decay_t<decltype(dst)>>(vals);
              dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
            },
            col);
      } else {
        auto& dst = std::get<StrValues>(col);
        auto decoded = decode_varlen_strings(std::get<VarlenPage>(page));
        for (std::size_t i = 0; i < decoded.size(); ++i) dst.emplace_back(decoded.at(i));
      }
    }
    out.columns.push_back(std::move(col));
  }
  return out;
}

}  // namespace colfuse
