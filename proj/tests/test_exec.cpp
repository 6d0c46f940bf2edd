#include <gtest/gtest.h>

#include <map>
#include <random>
#include <thread>

#include "colfuse/bench/oracle.hpp"
#include "colfuse/bench/queries.hpp"
#include "colfuse/error.hpp"
#include "colfuse/exec/executor.hpp"
#include "colfuse/exec/hash_table.hpp"
#include "colfuse/exec/operators.hpp"
#include "testutil.hpp"

using namespace colfuse;
using colfuse::testing::shared_database;
using colfuse::testing::shared_load;

namespace {

ColumnView ints_view(const std::vector<std::int64_t>& v) { return ColumnView{v.data(), nullptr, nullptr, 0}; }

struct Strings {
  std::string bytes;
  std::vector<std::uint32_t> offsets{0};
  explicit Strings(const std::vector<std::string>& s) {
    for (const auto& x : s) {
      bytes += x;
      offsets.push_back(static_cast<std::uint32_t>(bytes.size()));
    }
  }
  ColumnView view() const { return ColumnView{nullptr, bytes.data(), offsets.data(), 0}; }
};

ExecOptions instant(ExecMode mode) {
  ExecOptions o;
  o.mode = mode;
  o.latency = LatencyModel::instant();
  return o;
}

}  // namespace

TEST(Filter, Examples) {
  std::vector<std::int64_t> x{1, 7, 3};
  std::vector<std::int64_t> y{4, 4, 9};
  std::vector<ColumnView> slots{ints_view(x), ints_view(y)};
  std::vector<bool> kinds{false, false};
  auto lt5 = compile_filter(FilterOp{{Predicate::compare(0, CmpOp::Lt, 5)}}, kinds);
  EXPECT_EQ(filter_bitmap(lt5, slots, 3), (std::vector<bool>{true, false, true}));
  auto y_lt5 = compile_filter(FilterOp{{Predicate::compare(1, CmpOp::Lt, 5)}}, kinds);
  auto both = compile_filter(FilterOp{{Predicate::compare(0, CmpOp::Lt, 5), Predicate::compare(1, CmpOp::Lt, 5)}}, kinds);
  auto a = filter_bitmap(lt5, slots, 3);
  auto b = filter_bitmap(y_lt5, slots, 3);
  auto ab = filter_bitmap(both, slots, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ab[i], a[i] && b[i]);
  auto none = compile_filter(FilterOp{{Predicate::between(0, 100, 200)}}, kinds);
  EXPECT_EQ(filter_bitmap(none, slots, 3), (std::vector<bool>{false, false, false}));
  Selection sel{0, 1, 2};
  filter_apply(lt5, slots, sel);
  EXPECT_EQ(sel, (Selection{0, 2}));
}

TEST(Filter, StringPredicates) {
  Strings s({"SMALL BRASS BOX", "LARGE TIN", "BRASS", ""});
  std::vector<ColumnView> slots{s.view()};
  std::vector<bool> kinds{true};
  auto like = compile_filter(FilterOp{{Predicate::like(0, "%BRASS%")}}, kinds);
  EXPECT_EQ(filter_bitmap(like, slots, 4), (std::vector<bool>{true, false, true, false}));
  auto not_like = compile_filter(FilterOp{{Predicate::like(0, "%BRASS%", true)}}, kinds);
  EXPECT_EQ(filter_bitmap(not_like, slots, 4), (std::vector<bool>{false, true, false, true}));
  auto eq = compile_filter(FilterOp{{Predicate::str_eq(0, "BRASS")}}, kinds);
  EXPECT_EQ(filter_bitmap(eq, slots, 4), (std::vector<bool>{false, false, true, false}));
  EXPECT_THROW(compile_filter(FilterOp{{Predicate::compare(0, CmpOp::Lt, 1)}}, kinds), PlanError);
  EXPECT_THROW(compile_filter(FilterOp{{Predicate::like(0, "%a%b%")}}, kinds), PlanError);
  EXPECT_THROW(compile_filter(FilterOp{{Predicate::like(0, "a%")}}, kinds), PlanError);
  EXPECT_THROW(compile_filter(FilterOp{{Predicate::like(0, "%a_b%")}}, kinds), PlanError);
}

TEST(Kmp, Examples) {
  EXPECT_TRUE(KmpMatcher("BRASS").matches("SMALL BRASS BOX"));
  EXPECT_FALSE(KmpMatcher("LONGER THAN").matches("SHORT"));
  EXPECT_TRUE(KmpMatcher("").matches(""));
  EXPECT_TRUE(KmpMatcher("aab").matches("aaab"));
  EXPECT_TRUE(KmpMatcher("abab").matches("abaabab"));
  EXPECT_EQ(parse_like_pattern("%special%"), "special");
  EXPECT_EQ(parse_like_pattern("%%"), "");
}

TEST(Kmp, AgreesWithNaiveSearch) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10000; ++i) {
    std::string needle(rng() % 6, 'a'), hay(rng() % 40, 'a');
    for (auto& c : needle) c = static_cast<char>('a' + rng() % 3);
    for (auto& c : hay) c = static_cast<char>('a' + rng() % 3);
    ASSERT_EQ(KmpMatcher(needle).matches(hay), hay.find(needle) != std::string::npos) << needle << " in " << hay;
  }
}

TEST(HashTable, Examples) {
  HashTable t(0, hash_capacity_for(4), 1);
  std::int64_t seven = 7;
  t.insert(42, std::span(&seven, 1));
  ASSERT_NE(t.probe(42), nullptr);
  EXPECT_EQ(*t.probe(42), 7);
  EXPECT_EQ(t.probe(41), nullptr);
  EXPECT_THROW(t.insert(42, std::span(&seven, 1)), Error);
  HashTable keys_only(1, 8, 0);
  keys_only.insert(5, {});
  EXPECT_NE(keys_only.probe(5), nullptr);
  EXPECT_EQ(keys_only.probe(6), nullptr);
}

TEST(HashTable, CapacityAndHash) {
  EXPECT_EQ(hash_capacity_for(0), 2u);
  EXPECT_EQ(hash_capacity_for(7), 16u);
  EXPECT_EQ(hash_capacity_for(1000), 2048u);
  HashTable t(0, 1024, 0);
  EXPECT_EQ(t.slot_of(1), (0x9E3779B97F4A7C15ull >> 54));
  EXPECT_THROW(HashTable(0, 100, 0), Error);
}

TEST(HashTable, OverflowNamesTable) {
  HashTable t(9, 4, 0);
  t.insert(1, {});
  t.insert(2, {});
  try {
    t.insert(3, {});
    FAIL() << "expected HashTableOverflow";
  } catch (const HashTableOverflow& e) {
    EXPECT_EQ(e.table_id(), 9u);
  }
}

TEST(HashTable, AgreesWithReferenceMap) {
  std::mt19937_64 rng(23);
  HashTable t(0, hash_capacity_for(5000), 2);
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> ref;
  for (int op = 0; op < 10000; ++op) {
    std::int64_t key = static_cast<std::int64_t>(rng() % 20000) - 10000;
    if (op % 2 == 0 && ref.size() < 5000) {
      std::int64_t payload[2] = {key * 3, op};
      if (ref.count(key)) {
        EXPECT_THROW(t.insert(key, payload), Error);
        continue;
      }
      t.insert(key, payload);
      ref[key] = {payload[0], payload[1]};
    } else {
      auto got = t.find(key);
      auto it = ref.find(key);
      ASSERT_EQ(got.has_value(), it != ref.end());
      if (got) ASSERT_EQ(*got, (std::vector<std::int64_t>{it->second.first, it->second.second}));
    }
  }
  EXPECT_EQ(t.size(), ref.size());
}

TEST(HashTable, ConcurrentInsertsAllVisible) {
  HashTable t(0, hash_capacity_for(40000), 1);
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&t, w] {
      for (std::int64_t i = w; i < 40000; i += 4) {
        std::int64_t p = i * 2;
        t.insert(i, std::span(&p, 1));
      }
    });
  }
  for (auto& th : threads) th.join();
  ASSERT_EQ(t.size(), 40000u);
  for (std::int64_t i = 0; i < 40000; ++i) ASSERT_EQ(*t.probe(i), i * 2);
}

TEST(Aggregate, SumPerGroupAndEmptyInput) {
  std::vector<std::int64_t> keys{1, 1, 2};
  std::vector<std::int64_t> vals{1, 2, 5};
  AggregateOp op;
  op.keys = {{0, {"k", ValueKind::Int, 0, 0}}};
  op.aggs = {{AggFn::Sum, Expr::col(1), {"s", ValueKind::Int, 0, 0}},
             {AggFn::Min, Expr::col(1), {"mn", ValueKind::Int, 0, 0}},
             {AggFn::Max, Expr::col(1), {"mx", ValueKind::Int, 0, 0}},
             {AggFn::Avg, Expr::col(1), {"avg", ValueKind::Int, 0, 0}}};
  std::vector<ColumnView> slots{ints_view(keys), ints_view(vals)};
  std::vector<bool> kinds{false, false};
  StringPool pool;
  AggregateState a(&op), b(&op);
  a.consume(slots, Selection{0, 1}, kinds, pool);
  b.consume(slots, Selection{2}, kinds, pool);
  a.merge(b);
  auto r = a.finalize(pool);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0], (std::vector<Cell>{1, 3, 1, 2, 3, 2}));
  EXPECT_EQ(r.rows[1], (std::vector<Cell>{2, 5, 5, 5, 5, 1}));
  AggregateState empty(&op);
  EXPECT_TRUE(empty.finalize(pool).rows.empty());
}

TEST(Arithmetic, OverflowChecked) {
  EXPECT_EQ(checked_mul(1 << 20, 1 << 20), std::int64_t{1} << 40);
  EXPECT_THROW(checked_add(INT64_MAX, 1), ArithmeticOverflow);
  EXPECT_THROW(checked_sub(INT64_MIN, 1), ArithmeticOverflow);
  EXPECT_THROW(checked_mul(INT64_MAX / 2, 3), ArithmeticOverflow);
}

TEST(Executor, ModesAgreeWithOracleAtSmallScale) {
  for (auto b : {Benchmark::Tpch, Benchmark::Ssb}) {
    const auto& db = shared_database(b, 0.001);
    const auto& loaded = shared_load(db, kMinPageSize);
    for (const auto& id : canned_query_ids()) {
      if (benchmark_of(id) != b) continue;
      auto expected = oracle_eval(id, db);
      auto fused = run_query(canned_query(id), loaded.catalog, loaded.devices, instant(ExecMode::Fused));
      auto staged = run_query(canned_query(id), loaded.catalog, loaded.devices, instant(ExecMode::Staged));
      EXPECT_EQ(fused.result, expected) << id;
      EXPECT_EQ(staged.result, expected) << id;
      EXPECT_FALSE(expected.rows.empty()) << id;
    }
  }
}

TEST(Executor, LaunchAccountingAndMaterialization) {
  const std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> launches = {
      {"Q1", {2, 11}},     {"Q3", {4, 22}},     {"Q6", {2, 8}},      {"Q13", {3, 12}},
      {"SSB1.1", {3, 14}}, {"SSB2.1", {5, 25}}, {"SSB3.1", {5, 27}}};
  for (const auto& [id, expect] : launches) {
    const auto& db = shared_database(benchmark_of(id), 0.001);
    const auto& loaded = shared_load(db, kMinPageSize);
    auto plan = canned_query(id);
    auto fused = run_query(plan, loaded.catalog, loaded.devices, instant(ExecMode::Fused));
    auto staged = run_query(plan, loaded.catalog, loaded.devices, instant(ExecMode::Staged));
    EXPECT_EQ(fused.trace.pass_launches(), plan.pipelines.size() + 1) << id;
    EXPECT_EQ(fused.trace.pass_launches(), expect.first) << id;
    EXPECT_EQ(staged.trace.pass_launches(), expect.second) << id;
    EXPECT_GE(staged.trace.pass_launches(), 3 * plan.pipelines.size() + 1) << id;
    EXPECT_EQ(fused.trace.intermediate_bytes(), 0u) << id;
    EXPECT_GT(staged.trace.intermediate_bytes(), 0u) << id;
    EXPECT_EQ(fused.trace.bytes_read(), staged.trace.bytes_read()) << id;
    EXPECT_EQ(fused.trace.io.pass_launches, fused.trace.pass_launches()) << id;
    for (const auto& p : fused.trace.pipelines) EXPECT_EQ(p.barrier_count, 2 * p.page_groups) << id;
  }
}

TEST(Executor, BytesReadEqualsPrunedPageSizes) {
  const auto& db = shared_database(Benchmark::Tpch, 0.01);
  const auto& loaded = shared_load(db, kMinPageSize);
  auto plan = canned_query("Q6", {0.2});
  const auto& table = loaded.catalog.table("LINEITEM");
  auto input = prune_pipeline(plan.pipelines[0], table);
  std::uint64_t expected = 0;
  for (std::size_t c = 0; c < input.lists.size(); ++c) {
    const auto& col = table.column(plan.pipelines[0].columns[c]);
    for (auto id : input.lists[c].page_ids) expected += col.sizes[col.dictionary.ordinal_of(id)];
  }
  auto run = run_query(plan, loaded.catalog, loaded.devices, instant(ExecMode::Fused));
  EXPECT_EQ(run.trace.bytes_read(), expected);
  EXPECT_EQ(run.trace.io.bytes_read, expected);
  auto all = prune_pipeline(plan.pipelines[0], table, false);
  std::uint64_t total_pages = 0, kept_pages = 0;
  for (const auto& l : all.lists) total_pages += l.page_ids.size();
  for (const auto& l : input.lists) kept_pages += l.page_ids.size();
  EXPECT_LT(kept_pages, total_pages);
}

TEST(Executor, WorkerCountIndependence) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = shared_load(db, kMinPageSize);
  for (const std::string id : {"Q1", "Q3"}) {
    for (auto mode : {ExecMode::Fused, ExecMode::Staged}) {
      auto opt = instant(mode);
      opt.workers = 1;
      auto one = run_query(canned_query(id), loaded.catalog, loaded.devices, opt);
      for (std::size_t w : {2u, 5u}) {
        opt.workers = w;
        auto many = run_query(canned_query(id), loaded.catalog, loaded.devices, opt);
        EXPECT_EQ(many.result, one.result) << id << " workers " << w;
        EXPECT_EQ(many.trace.pass_launches(), one.trace.pass_launches());
        EXPECT_EQ(many.trace.barrier_count(), one.trace.barrier_count());
        EXPECT_EQ(many.trace.bytes_read(), one.trace.bytes_read());
        EXPECT_EQ(many.trace.intermediate_bytes(), one.trace.intermediate_bytes());
      }
    }
  }
}

TEST(Executor, StagedWorkMemoryBudget) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = shared_load(db, kMinPageSize);
  auto opt = instant(ExecMode::Staged);
  opt.work_memory = 4096;
  EXPECT_THROW(run_query(canned_query("Q1"), loaded.catalog, loaded.devices, opt), BudgetExceeded);
  auto fused = instant(ExecMode::Fused);
  fused.work_memory = 4096;
  EXPECT_NO_THROW(run_query(canned_query("Q1"), loaded.catalog, loaded.devices, fused));
}

TEST(Executor, SmallScratchCountsSpillsWithoutChangingResults) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = shared_load(db, kMinPageSize);
  auto opt = instant(ExecMode::Fused);
  auto base = run_query(canned_query("Q1"), loaded.catalog, loaded.devices, opt);
  opt.scratch_bytes = 1024;
  opt.chunk_rows = 100;
  auto small = run_query(canned_query("Q1"), loaded.catalog, loaded.devices, opt);
  EXPECT_EQ(small.result, base.result);
  EXPECT_GT(small.trace.pipelines[0].scratch_spills, 0u);
}

TEST(Executor, PlanValidation) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = shared_load(db, kMinPageSize);
  QueryPlan probe_first{"bad", {}};
  PipelinePlan p;
  p.table = "ORDERS";
  p.columns = {"o_orderkey"};
  p.ops = {HashProbeOp{3, 0}};
  probe_first.pipelines = {p};
  EXPECT_THROW(validate_plan(probe_first, loaded.catalog), PlanError);
  p.ops = {AggregateOp{}, FilterOp{}};
  EXPECT_THROW(validate_plan(QueryPlan{"bad", {p}}, loaded.catalog), PlanError);
  p.ops = {FilterOp{{Predicate::compare(4, CmpOp::Lt, 1)}}};
  EXPECT_THROW(validate_plan(QueryPlan{"bad", {p}}, loaded.catalog), PlanError);
  p.columns = {"no_such_column"};
  p.ops = {};
  EXPECT_THROW(validate_plan(QueryPlan{"bad", {p}}, loaded.catalog), Error);
  EXPECT_THROW(canned_query("Q99"), PlanError);
  EXPECT_THROW(canned_query("Q1", {0.5}), PlanError);
  EXPECT_THROW(canned_query("Q6", {0.0}), PlanError);
  EXPECT_THROW(parse_exec_mode("turbo"), PlanError);
}

TEST(Executor, DuplicateBuildKeyAborts) {
  const auto& db = shared_database(Benchmark::Tpch, 0.001);
  const auto& loaded = shared_load(db, kMinPageSize);
  PipelinePlan build;
  build.table = "ORDERS";
  build.columns = {"o_custkey"};
  build.ops = {HashBuildOp{0, 0, {}}};
  // o_custkey repeats, so the build side has duplicate keys.
  EXPECT_THROW(run_query(QueryPlan{"dup", {build}}, loaded.catalog, loaded.devices, instant(ExecMode::Fused)), Error);
}

TEST(Result, FormatsTypedCells) {
  EXPECT_EQ(format_cell(Cell{std::int64_t{12345}}, {"x", ValueKind::Decimal, 2, 0}), "123.45");
  EXPECT_EQ(format_cell(Cell{std::int64_t{8035}}, {"d", ValueKind::Date, 0, 0}), "1992-01-01");
  EXPECT_EQ(format_cell(Cell{std::string("AB")}, {"c", ValueKind::ShortChar, 0, 2}), "AB");
  QueryResult r;
  r.columns = {{"k", ValueKind::Int, 0, 0}, {"v", ValueKind::Decimal, 4, 0}};
  r.rows = {{std::int64_t{1}, std::int64_t{15}}};
  EXPECT_EQ(format_result(r), "k|v\n1|0.0015\n");
}
