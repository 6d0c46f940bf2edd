#include <gtest/gtest.h>

#include <random>

#include "colfuse/catalog.hpp"
#include "colfuse/error.hpp"
#include "testutil.hpp"

using namespace colfuse;

namespace {

std::size_t linear_rid_to_page(const std::vector<std::uint64_t>& cumulative, std::uint64_t rid) {
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (cumulative[i] > rid) return i;
  }
  return cumulative.size();
}

DictionaryEntry dictionary_for(const RidIndex& index, std::uint64_t first_page_id = 0) {
  DictionaryEntry d;
  for (std::size_t i = 0; i < index.page_count(); ++i) {
    d.page_ids.push_back(first_page_id + i);
    d.first_rids.push_back(index.page_span(i).begin);
  }
  return d;
}

}  // namespace

TEST(RidIndex, Examples) {
  RidIndex index({100, 250, 400});
  EXPECT_EQ(index.rid_to_page(0), 0u);
  EXPECT_EQ(index.rid_to_page(250), 2u);
  EXPECT_EQ(index.rid_to_page(99), 0u);
  EXPECT_EQ(index.rid_to_page(100), 1u);
  EXPECT_THROW(index.rid_to_page(400), CatalogError);
  EXPECT_THROW(RidIndex({5, 5}), CatalogError);
  EXPECT_EQ(index.page_span(1), (RidSpan{100, 250}));
}

TEST(RidIndex, AgreesWithLinearScan) {
  std::mt19937_64 rng(2);
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  while (total < 10000) {
    auto c = std::min<std::uint64_t>(1 + rng() % 700, 10000 - total);
    counts.push_back(c);
    total += c;
  }
  auto index = RidIndex::from_page_counts(counts);
  for (std::uint64_t rid = 0; rid < total; ++rid) {
    ASSERT_EQ(index.rid_to_page(rid), linear_rid_to_page(index.cumulative_counts(), rid));
  }
}

TEST(AlignPages, Examples) {
  RidIndex a({4, 8});
  RidIndex b({2, 4, 6, 8});
  EXPECT_EQ(align_pages(a, b, 1), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(align_pages(b, b, 2), (std::vector<std::size_t>{2}));
  RidIndex giant({8});
  EXPECT_EQ(align_pages(b, giant, 3), (std::vector<std::size_t>{0}));
  EXPECT_THROW(align_pages(a, RidIndex({9}), 0), CatalogError);
}

TEST(AlignPages, CoverIsMinimalSuperset) {
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 50; ++iter) {
    auto make = [&] {
      std::vector<std::uint64_t> counts;
      std::uint64_t total = 0;
      while (total < 1000) {
        auto c = std::min<std::uint64_t>(1 + rng() % 90, 1000 - total);
        counts.push_back(c);
        total += c;
      }
      return RidIndex::from_page_counts(counts);
    };
    auto a = make();
    auto b = make();
    for (std::size_t p = 0; p < a.page_count(); ++p) {
      auto span = a.page_span(p);
      auto cover = align_pages(a, b, p);
      ASSERT_FALSE(cover.empty());
      for (std::size_t k = 1; k < cover.size(); ++k) ASSERT_EQ(cover[k], cover[k - 1] + 1);
      ASSERT_LE(b.page_span(cover.front()).begin, span.begin);
      ASSERT_GE(b.page_span(cover.back()).end, span.end);
      ASSERT_GT(b.page_span(cover.front()).end, span.begin);
      ASSERT_LT(b.page_span(cover.back()).begin, span.end);
    }
  }
}

TEST(ZoneMap, BuildExamples) {
  std::vector<std::int64_t> keys(20);
  for (int i = 0; i < 20; ++i) keys[i] = i + 1;
  std::vector<std::int64_t> constant(20, 9);
  AttributeKeys attrs[] = {{0, keys}, {1, constant}};
  auto zm = build_zone_map(attrs, RidIndex({10, 20}));
  ASSERT_EQ(zm.page_count(), 2u);
  EXPECT_EQ(*zm.find(0, 0), (ZoneEntry{0, 1, 10}));
  EXPECT_EQ(*zm.find(1, 0), (ZoneEntry{0, 11, 20}));
  EXPECT_EQ(*zm.find(0, 1), (ZoneEntry{1, 9, 9}));
  EXPECT_EQ(*zm.find(1, 1), (ZoneEntry{1, 9, 9}));
}

TEST(Prune, Examples) {
  std::vector<std::int64_t> keys(20);
  for (int i = 0; i < 20; ++i) keys[i] = i + 1;
  AttributeKeys attrs[] = {{0, keys}};
  RidIndex index({10, 20});
  auto zm = build_zone_map(attrs, index);
  auto dict = dictionary_for(index, 40);
  RangePredicate lt5{0, CmpOp::Lt, 5, 0};
  EXPECT_EQ(prune(zm, dict, std::span(&lt5, 1)).page_ids, (std::vector<std::uint64_t>{40}));
  RangePredicate eq10{0, CmpOp::Eq, 10, 0};
  EXPECT_EQ(prune(zm, dict, std::span(&eq10, 1)).page_ids, (std::vector<std::uint64_t>{40}));
  RangePredicate unmapped{7, CmpOp::Eq, -1, 0};
  EXPECT_EQ(prune(zm, dict, std::span(&unmapped, 1)).page_ids, (std::vector<std::uint64_t>{40, 41}));
}

TEST(Prune, MatchesBruteForceOverRawRows) {
  std::mt19937_64 rng(8);
  for (int iter = 0; iter < 40; ++iter) {
    std::size_t n = 500 + rng() % 1500;
    std::vector<std::int64_t> a(n), b(n);
    std::int64_t walk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      walk += static_cast<std::int64_t>(rng() % 4);
      a[i] = walk;
      b[i] = static_cast<std::int64_t>(rng() % 50);
    }
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    while (total < n) {
      auto c = std::min<std::uint64_t>(1 + rng() % 200, n - total);
      counts.push_back(c);
      total += c;
    }
    auto index = RidIndex::from_page_counts(counts);
    AttributeKeys attrs[] = {{0, a}, {1, b}};
    auto zm = build_zone_map(attrs, index);
    auto dict = dictionary_for(index);
    for (int q = 0; q < 25; ++q) {
      std::vector<RangePredicate> preds;
      for (std::uint32_t attr = 0; attr < 2; ++attr) {
        if (rng() % 3 == 0) continue;
        auto op = static_cast<CmpOp>(rng() % 6);
        std::int64_t lo = static_cast<std::int64_t>(rng() % (attr == 0 ? walk + 2 : 52)) - 1;
        std::int64_t hi = lo + static_cast<std::int64_t>(rng() % 40);
        preds.push_back({attr, op, lo, hi});
      }
      std::vector<std::uint64_t> expected;
      for (std::size_t p = 0; p < index.page_count(); ++p) {
        auto span = index.page_span(p);
        // Page survives iff each predicate's attribute range may intersect it.
        bool keep = true;
        for (const auto& pr : preds) {
          const auto& keys = pr.attr_id == 0 ? a : b;
          std::int64_t mn = INT64_MAX, mx = INT64_MIN;
          for (auto r = span.begin; r < span.end; ++r) {
            mn = std::min(mn, keys[r]);
            mx = std::max(mx, keys[r]);
          }
          bool any = false;
          for (std::int64_t v = mn; v <= mx && !any; ++v) any = pr.matches(v);
          keep = keep && any;
        }
        if (keep) expected.push_back(p);
      }
      ASSERT_EQ(prune(zm, dict, preds).page_ids, expected);
      // Soundness over rows: every qualifying row's page survives.
      for (std::size_t r = 0; r < n; ++r) {
        bool row_ok = true;
        for (const auto& pr : preds) row_ok = row_ok && pr.matches(pr.attr_id == 0 ? a[r] : b[r]);
        if (row_ok) {
          auto page = index.rid_to_page(r);
          ASSERT_TRUE(std::binary_search(expected.begin(), expected.end(), page));
        }
      }
    }
  }
}

TEST(IntervalSet, NormalizesAndIntersects) {
  auto s = IntervalSet::from_spans({{5, 10}, {0, 3}, {3, 4}, {8, 12}, {20, 20}});
  EXPECT_EQ(s.spans(), (std::vector<RidSpan>{{0, 4}, {5, 12}}));
  EXPECT_EQ(s.cardinality(), 11u);
  auto t = IntervalSet::from_spans({{2, 6}, {11, 30}});
  EXPECT_EQ(s.intersect(t).spans(), (std::vector<RidSpan>{{2, 4}, {5, 6}, {11, 12}}));
  EXPECT_EQ(s.clip({3, 6}).spans(), (std::vector<RidSpan>{{3, 4}, {5, 6}}));
  EXPECT_TRUE(s.contains(11));
  EXPECT_FALSE(s.contains(4));
}

TEST(IntersectPageLists, Examples) {
  RidIndex ia({10, 20, 30});
  RidIndex ib({15, 30});
  auto da = dictionary_for(ia, 0);
  auto db = dictionary_for(ib, 10);
  PrunedPageList la{0, {0, 1, 2}};
  PrunedPageList lb{1, {10}};
  ColumnPages cols[] = {{&la, &ia, &da}, {&lb, &ib, &db}};
  auto out = intersect_page_lists(cols);
  EXPECT_EQ(out.rids.spans(), (std::vector<RidSpan>{{0, 15}}));
  EXPECT_EQ(out.lists[0].page_ids, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(out.lists[1].page_ids, (std::vector<std::uint64_t>{10}));

  ColumnPages single[] = {{&la, &ia, &da}};
  EXPECT_EQ(intersect_page_lists(single).lists[0], la);

  PrunedPageList only_last{0, {2}};
  PrunedPageList only_first{1, {10}};
  ColumnPages disjoint[] = {{&only_last, &ia, &da}, {&only_first, &ib, &db}};
  auto none = intersect_page_lists(disjoint);
  EXPECT_TRUE(none.rids.empty());
  EXPECT_TRUE(none.lists[0].page_ids.empty());
  EXPECT_TRUE(none.lists[1].page_ids.empty());
}

TEST(SideFiles, Roundtrip) {
  colfuse::testing::TempDir dir("catalog");
  std::vector<std::uint64_t> u64{1, 2, 1ull << 40};
  std::vector<std::uint32_t> u32{7, 9};
  write_u64_file(dir.path() / "a.offsets", u64);
  write_u32_file(dir.path() / "a.sizes", u32);
  EXPECT_EQ(read_u64_file(dir.path() / "a.offsets"), u64);
  EXPECT_EQ(read_u32_file(dir.path() / "a.sizes"), u32);
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "a.offsets"), 24u);

  std::vector<std::int64_t> keys{3, 1, 4, 1, 5, 9};
  AttributeKeys attrs[] = {{2, keys}};
  auto zm = build_zone_map(attrs, RidIndex({3, 6}));
  auto bytes = encode_zone_map(zm);
  EXPECT_EQ(bytes.size(), 4u + 2 * (4 + 8 + 8));
  EXPECT_EQ(decode_zone_map(bytes, 2), zm);
  write_zone_map_file(dir.path() / "a.zonemap", zm);
  EXPECT_EQ(read_zone_map_file(dir.path() / "a.zonemap", 2), zm);
}

TEST(Catalog, SaveOpenRoundtripAndLookups) {
  const auto& db = colfuse::testing::shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = colfuse::testing::shared_load(db, kMinPageSize);
  colfuse::testing::TempDir dir("catalog-save");
  loaded.catalog.save(dir.path());
  auto back = Catalog::open(dir.path());
  ASSERT_EQ(back.tables.size(), loaded.catalog.tables.size());
  EXPECT_EQ(back.total_pages(), loaded.catalog.total_pages());
  for (std::size_t t = 0; t < back.tables.size(); ++t) {
    const auto& x = back.tables[t];
    const auto& y = loaded.catalog.tables[t];
    EXPECT_EQ(x.row_count, y.row_count);
    ASSERT_EQ(x.columns.size(), y.columns.size());
    for (std::size_t c = 0; c < x.columns.size(); ++c) {
      EXPECT_EQ(x.columns[c].offsets, y.columns[c].offsets);
      EXPECT_EQ(x.columns[c].sizes, y.columns[c].sizes);
      EXPECT_EQ(x.columns[c].rids, y.columns[c].rids);
      EXPECT_EQ(x.columns[c].zone_map, y.columns[c].zone_map);
      EXPECT_EQ(x.columns[c].region, y.columns[c].region);
    }
  }
  const auto& li = back.table("LINEITEM");
  ASSERT_TRUE(li.attribute_id("l_shipdate"));
  ASSERT_TRUE(li.attribute_id("o_orderdate@l_orderkey"));
  EXPECT_FALSE(li.attribute_id("l_comment"));
  const auto& col = li.column("l_quantity");
  EXPECT_EQ(&back.column_of_page(col.first_page_id), &col);
  EXPECT_THROW(back.column_of_page(back.total_pages() + 5), CatalogError);
  EXPECT_THROW(back.table("NOPE"), Error);
}
