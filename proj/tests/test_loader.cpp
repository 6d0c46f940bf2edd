#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "colfuse/error.hpp"
#include "colfuse/loader.hpp"
#include "testutil.hpp"

using namespace colfuse;
using colfuse::testing::shared_database;
using colfuse::testing::TempDir;

namespace {

TableSchema small_schema() {
  TableSchema t;
  t.name = "T";
  t.columns = {{"k", ColumnType::int32()}, {"v", ColumnType::int64()}, {"s", ColumnType::varchar()},
               {"c", ColumnType::fixed_char(1)}};
  t.cluster_key = "k";
  t.zone_attributes = {{"k", "k", "", "", ""}, {"c", "c", "", "", ""}, {"v", "v", "", "", ""}};
  return t;
}

TableData small_table(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  IntValues k(n), v(n);
  StrValues s(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = static_cast<std::int64_t>(rng() % 1000);
    v[i] = static_cast<std::int64_t>(rng() >> 4);
    s[i] = "row" + std::to_string(i) + std::string(rng() % 30, 'x');
    c[i] = std::string(1, static_cast<char>('A' + rng() % 5));
  }
  return {"T", {k, v, s, c}};
}

}  // namespace

TEST(SortCluster, StableAscending) {
  TableData t{"T", {IntValues{3, 1, 2}, StrValues{"c", "a", "b"}}};
  auto sorted = sort_cluster(t, 0);
  EXPECT_EQ(std::get<IntValues>(sorted.columns[0]), (IntValues{1, 2, 3}));
  EXPECT_EQ(std::get<StrValues>(sorted.columns[1]), (StrValues{"a", "b", "c"}));

  TableData dup{"T", {IntValues{2, 1, 2, 1}, IntValues{10, 20, 30, 40}}};
  auto d = sort_cluster(dup, 0);
  EXPECT_EQ(std::get<IntValues>(d.columns[1]), (IntValues{20, 40, 10, 30}));

  TableData already{"T", {IntValues{1, 2, 3}}};
  EXPECT_EQ(std::get<IntValues>(sort_cluster(already, 0).columns[0]), (IntValues{1, 2, 3}));
  EXPECT_EQ(cluster_order(StrValues{"b", "a"}), (std::vector<std::size_t>{1, 0}));
}

TEST(PlanRegions, FixedWidthFloorDivision) {
  EXPECT_EQ(plan_page_rows(IntValues(1000, 1), ColumnType::int32(), 1u << 20), (std::vector<std::uint64_t>{1000}));
  EXPECT_EQ(plan_page_rows(IntValues(300000, 1), ColumnType::int32(), 1u << 20),
            (std::vector<std::uint64_t>{262144, 37856}));
  EXPECT_EQ(plan_page_rows(IntValues(300000, 1), ColumnType::int64(), 1u << 20),
            (std::vector<std::uint64_t>{131072, 131072, 37856}));

  TableSchema t;
  t.name = "T";
  t.columns = {{"a", ColumnType::int32()}};
  t.cluster_key = "a";
  LoadPlan plan{t, 1u << 20, 1};
  TableData rows{"T", {IntValues(1000, 4)}};
  auto layout = plan_regions(rows, plan);
  ASSERT_EQ(layout.size(), 1u);
  EXPECT_EQ(layout[0].page_rows, (std::vector<std::uint64_t>{1000}));
  EXPECT_EQ(layout[0].region.start, 0u);
  EXPECT_EQ(layout[0].region.capacity, 1u << 20);
}

TEST(PlanRegions, RegionsAreAdjacentAndDisjoint) {
  auto t = small_schema();
  auto sorted = sort_cluster(small_table(40000, 1), 0);
  LoadPlan plan{t, kMinPageSize, 2};
  auto layouts = plan_regions(sorted, plan, 8192, 10, 4096);
  ASSERT_EQ(layouts.size(), 4u);
  std::uint64_t expect_start = 8192;
  for (std::size_t c = 0; c < layouts.size(); ++c) {
    EXPECT_EQ(layouts[c].column_id, 10 + c);
    EXPECT_EQ(layouts[c].region.start, expect_start);
    EXPECT_GE(layouts[c].region.capacity, layouts[c].page_rows.size() * kMinPageSize);
    expect_start = (layouts[c].region.start + layouts[c].region.capacity + 4095) / 4096 * 4096;
  }
}

TEST(PlanRegions, LargeVarlenRecordsFillGreedily) {
  StrValues records;
  for (int i = 0; i < 40; ++i) {
    std::string r;
    while (r.size() < 9 * 1024) r += "lorem ipsum " + std::to_string(i) + " ";
    r.resize(9 * 1024);
    records.push_back(r);
  }
  auto rows = plan_page_rows(records, ColumnType::varchar(), kMinPageSize);
  std::uint64_t total = 0;
  for (auto r : rows) {
    EXPECT_GE(r, 1u);
    EXPECT_LE(33 + r * (9 * 1024 + 12), kMinPageSize);
    total += r;
  }
  EXPECT_EQ(total, 40u);

  TableSchema t;
  t.name = "T";
  t.columns = {{"s", ColumnType::varchar()}};
  t.cluster_key = "s";
  Schema schema{{t}};
  TableData data{"T", {records}};
  auto devices = DeviceArray::in_memory(1);
  LoadConfig cfg;
  cfg.page_size = kMinPageSize;
  auto catalog = load_tables(schema, std::span(&data, 1), devices, cfg);
  auto back = read_back_table(catalog, devices, "T");
  EXPECT_EQ(back.columns, sort_cluster(data, 0).columns);
  const auto& col = catalog.table("T").column("s");
  for (std::size_t p = 0; p < col.page_count(); ++p) {
    auto bytes = devices.read(devices.device_of(col.first_page_id + p), col.offsets[p], col.sizes[p]);
    auto page = std::get<VarlenPage>(parse_page(bytes));
    for (const auto& b : page.string_blocks) EXPECT_LE(b.bytes.size(), kStringBlockLimit);
  }
}

TEST(Loader, DenseRoundRobinPlacement) {
  auto t = small_schema();
  Schema schema{{t}};
  auto data = small_table(70000, 2);
  auto devices = DeviceArray::in_memory(2);
  LoadConfig cfg;
  cfg.page_size = kMinPageSize;
  cfg.device_count = 2;
  auto catalog = load_tables(schema, std::span(&data, 1), devices, cfg);
  std::uint64_t expected_id = 0;
  for (const auto& col : catalog.table("T").columns) {
    ASSERT_GE(col.page_count(), 2u);
    EXPECT_EQ(col.first_page_id, expected_id);
    std::uint64_t at = col.region.start;
    for (std::size_t p = 0; p < col.page_count(); ++p) {
      auto id = col.first_page_id + p;
      EXPECT_EQ(col.offsets[p], at);
      at += col.sizes[p];
      auto loc = resolve_page(catalog, id);
      EXPECT_EQ(loc.device, id % 2);
      EXPECT_EQ(loc.offset, col.offsets[p]);
      EXPECT_EQ(loc.length, col.sizes[p]);
      auto header = parse_page_header(devices.read(loc.device, loc.offset, loc.length));
      EXPECT_EQ(header.page_id, id);
      EXPECT_EQ(header.column_id, col.column_id);
      EXPECT_EQ(header.first_rid, col.rids.page_span(p).begin);
    }
    EXPECT_LE(at, col.region.start + col.region.capacity);
    expected_id += col.page_count();
  }
}

TEST(Loader, LoadThenScanIdentity) {
  auto t = small_schema();
  Schema schema{{t}};
  auto data = small_table(30000, 3);
  auto devices = DeviceArray::in_memory(3);
  LoadConfig cfg;
  cfg.page_size = kMinPageSize;
  cfg.device_count = 3;
  auto catalog = load_tables(schema, std::span(&data, 1), devices, cfg);
  EXPECT_EQ(read_back_table(catalog, devices, "T").columns, sort_cluster(data, 0).columns);
}

TEST(Loader, OutputIndependentOfWorkerCount) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  std::map<std::string, std::vector<std::uint8_t>> first;
  for (std::size_t workers : {1u, 4u}) {
    TempDir dir("loader-det");
    auto devices = DeviceArray::file_backed(dir.path() / "devices", 2, UINT64_MAX, true);
    LoadConfig cfg;
    cfg.page_size = kMinPageSize;
    cfg.device_count = 2;
    cfg.workers = workers;
    auto catalog = load_tables(db.schema, db.tables, devices, cfg);
    devices.flush();
    catalog.save(dir.path() / "meta");
    auto files = colfuse::testing::read_dir_bytes(dir.path() / "meta");
    for (auto& [name, bytes] : colfuse::testing::read_dir_bytes(dir.path() / "devices")) files["dev/" + name] = bytes;
    if (first.empty()) {
      first = std::move(files);
    } else {
      EXPECT_EQ(files, first);
    }
  }
}

TEST(Loader, ZoneMapsMatchBruteForceIncludingReference) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = colfuse::testing::shared_load(db, kMinPageSize);
  const auto& li = loaded.catalog.table("LINEITEM");
  auto sorted = sort_cluster(db.table("LINEITEM"), db.schema.table("LINEITEM").column_index("l_shipdate"));
  const auto& ts = db.schema.table("LINEITEM");
  const auto& orders = db.table("ORDERS");
  const auto& os = db.schema.table("ORDERS");
  std::map<std::int64_t, std::int64_t> order_date;
  const auto& okeys = std::get<IntValues>(orders.columns[os.column_index("o_orderkey")]);
  const auto& odates = std::get<IntValues>(orders.columns[os.column_index("o_orderdate")]);
  for (std::size_t i = 0; i < okeys.size(); ++i) order_date[okeys[i]] = odates[i];

  auto key_of = [&](const ZoneAttribute& za, std::size_t row) -> std::int64_t {
    if (za.spec.is_reference()) {
      auto fk = std::get<IntValues>(sorted.columns[ts.column_index(za.spec.column)])[row];
      return order_date.at(fk);
    }
    return std::get<IntValues>(sorted.columns[ts.column_index(za.spec.column)])[row];
  };
  ASSERT_EQ(li.zone_attributes.size(), 4u);
  for (const auto& col : li.columns) {
    ASSERT_EQ(col.zone_map.page_count(), col.page_count());
    for (std::size_t p = 0; p < col.page_count(); ++p) {
      auto span = col.rids.page_span(p);
      for (const auto& za : li.zone_attributes) {
        std::int64_t mn = INT64_MAX, mx = INT64_MIN;
        for (auto r = span.begin; r < span.end; ++r) {
          auto k = key_of(za, r);
          mn = std::min(mn, k);
          mx = std::max(mx, k);
        }
        const auto* e = col.zone_map.find(p, za.attr_id);
        ASSERT_NE(e, nullptr);
        EXPECT_EQ(e->min, mn) << col.name << " page " << p << " attr " << za.spec.name;
        EXPECT_EQ(e->max, mx) << col.name << " page " << p << " attr " << za.spec.name;
      }
    }
  }
}

TEST(Loader, CardinalityGateDropsWideAttributes) {
  auto t = small_schema();
  Schema schema{{t}};
  auto data = small_table(20000, 4);
  auto devices = DeviceArray::in_memory(1);
  LoadConfig cfg;
  cfg.page_size = kMinPageSize;
  auto catalog = load_tables(schema, std::span(&data, 1), devices, cfg);
  const auto& tc = catalog.table("T");
  std::set<std::string> names;
  for (const auto& za : tc.zone_attributes) names.insert(za.spec.name);
  EXPECT_EQ(names, (std::set<std::string>{"k", "c"}));
}

TEST(Loader, CapacityExceededNamesRegion) {
  auto t = small_schema();
  Schema schema{{t}};
  auto data = small_table(50000, 5);
  auto devices = DeviceArray::in_memory(1, 256 * 1024);
  LoadConfig cfg;
  cfg.page_size = kMinPageSize;
  try {
    load_tables(schema, std::span(&data, 1), devices, cfg);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("region of T."), std::string::npos) << e.what();
  }
}

TEST(Loader, PlanValidation) {
  auto t = small_schema();
  EXPECT_THROW((LoadPlan{t, 1000, 1}.validate()), LoadError);
  EXPECT_THROW((LoadPlan{t, 4u << 20, 1}.validate()), LoadError);
  EXPECT_THROW((LoadPlan{t, kDefaultPageSize, 0}.validate()), LoadError);
  t.cluster_key = "missing";
  EXPECT_THROW((LoadPlan{t, kDefaultPageSize, 1}.validate()), LoadError);
}

TEST(Loader, StampPageIdKeepsChecksumValid) {
  auto bytes = serialize_page(encode_fixed_page(IntValues{4, 5, 6}, ColumnType::int32(), 0));
  stamp_page_id(bytes, 99);
  EXPECT_EQ(parse_page_header(bytes).page_id, 99u);
  EXPECT_NO_THROW(parse_page(bytes));
}

TEST(Loader, RowFileInputRoundtrip) {
  const auto& db = shared_database(Benchmark::Ssb, 0.001);
  TempDir dir("rows");
  write_database(db, dir.path());
  auto schema = Schema::load(dir.path() / "schema.json");
  auto tables = read_input_dir(dir.path(), schema);
  ASSERT_EQ(tables.size(), db.tables.size());
  for (std::size_t i = 0; i < tables.size(); ++i) EXPECT_EQ(tables[i].columns, db.tables[i].columns);
}
