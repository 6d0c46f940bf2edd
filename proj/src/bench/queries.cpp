#include "colfuse/bench/queries.hpp"

#include <algorithm>
#include <cmath>

#include "colfuse/error.hpp"

namespace colfuse {

namespace {

const std::vector<std::string> kIds = {"Q1", "Q3", "Q6", "Q13", "SSB1.1", "SSB2.1", "SSB3.1"};

OutputSpec int_out(std::string name) { return {std::move(name), ValueKind::Int, 0, 0}; }
OutputSpec dec_out(std::string name, int scale) { return {std::move(name), ValueKind::Decimal, scale, 0}; }
OutputSpec date_out(std::string name) { return {std::move(name), ValueKind::Date, 0, 0}; }
OutputSpec text_out(std::string name) { return {std::move(name), ValueKind::Text, 0, 0}; }
OutputSpec char_out(std::string name, std::uint32_t n) { return {std::move(name), ValueKind::ShortChar, 0, n}; }

Expr col(std::uint32_t slot) { return Expr::col(slot); }
Expr lit(std::int64_t v) { return Expr::lit(v); }

AggSpec agg(AggFn fn, Expr e, OutputSpec out) { return {fn, std::move(e), std::move(out)}; }

double check_selectivity(const QueryParams& params) {
  double s = *params.selectivity;
  if (!(s > 0.0 && s <= 1.0)) throw PlanError("selectivity must be in (0, 1]");
  return s;
}

QueryPlan q1() {
  auto k = q1_constants();
  // l_returnflag, l_linestatus, l_quantity, l_extendedprice, l_discount, l_tax, l_shipdate
  PipelinePlan p;
  p.table = "LINEITEM";
  p.columns = {"l_returnflag", "l_linestatus", "l_quantity", "l_extendedprice", "l_discount", "l_tax", "l_shipdate"};
  p.pruning = {{"l_shipdate", CmpOp::Le, k.ship_le, 0}};
  AggregateOp a;
  a.keys = {{0, char_out("l_returnflag", 1)}, {1, char_out("l_linestatus", 1)}};
  auto disc_price = col(3) * (lit(100) - col(4));
  a.aggs = {agg(AggFn::Sum, col(2), int_out("sum_qty")),
            agg(AggFn::Sum, col(3), dec_out("sum_base_price", 2)),
            agg(AggFn::Sum, disc_price, dec_out("sum_disc_price", 4)),
            agg(AggFn::Sum, disc_price * (lit(100) + col(5)), dec_out("sum_charge", 6)),
            agg(AggFn::Avg, col(2), int_out("avg_qty")),
            agg(AggFn::Avg, col(3), dec_out("avg_price", 2)),
            agg(AggFn::Avg, col(4), dec_out("avg_disc", 2)),
            agg(AggFn::Count, lit(0), int_out("count_order"))};
  p.ops = {FilterOp{{Predicate::compare(6, CmpOp::Le, k.ship_le)}}, a};
  return {"Q1", {p}};
}

QueryPlan q3(const QueryParams& params) {
  auto k = q3_constants(params);
  PipelinePlan cust;
  cust.table = "CUSTOMER";
  cust.columns = {"c_custkey", "c_mktsegment"};
  cust.ops = {FilterOp{{Predicate::str_eq(1, k.segment)}}, HashBuildOp{0, 0, {}}};

  PipelinePlan ord;
  ord.table = "ORDERS";
  ord.columns = {"o_orderkey", "o_custkey", "o_orderdate", "o_shippriority"};
  ord.pruning = {{"o_orderdate", CmpOp::Lt, k.cut_date, 0}};
  ord.ops = {FilterOp{{Predicate::compare(2, CmpOp::Lt, k.cut_date)}}, HashProbeOp{0, 1}, HashBuildOp{1, 0, {2, 3}}};

  PipelinePlan li;
  li.table = "LINEITEM";
  li.columns = {"l_orderkey", "l_shipdate", "l_extendedprice", "l_discount"};
  li.pruning = {{"l_shipdate", CmpOp::Gt, k.cut_date, 0}, {"o_orderdate@l_orderkey", CmpOp::Lt, k.cut_date, 0}};
  AggregateOp a;
  // slots 4, 5: o_orderdate, o_shippriority from the probe
  a.keys = {{0, int_out("l_orderkey")}, {4, date_out("o_orderdate")}, {5, int_out("o_shippriority")}};
  a.aggs = {agg(AggFn::Sum, col(2) * (lit(100) - col(3)), dec_out("revenue", 4))};
  li.ops = {FilterOp{{Predicate::compare(1, CmpOp::Gt, k.cut_date)}}, HashProbeOp{1, 0}, a};
  return {"Q3", {cust, ord, li}};
}

QueryPlan q6(const QueryParams& params) {
  auto k = q6_constants(params);
  PipelinePlan p;
  p.table = "LINEITEM";
  p.columns = {"l_shipdate", "l_discount", "l_quantity", "l_extendedprice"};
  p.pruning = {{"l_shipdate", CmpOp::Between, k.ship_from, k.ship_to - 1},
               {"l_discount", CmpOp::Between, k.disc_lo, k.disc_hi},
               {"l_quantity", CmpOp::Lt, k.qty_lt, 0}};
  AggregateOp a;
  a.aggs = {agg(AggFn::Sum, col(3) * col(1), dec_out("revenue", 4))};
  p.ops = {FilterOp{{Predicate::between(0, k.ship_from, k.ship_to - 1), Predicate::between(1, k.disc_lo, k.disc_hi),
                     Predicate::compare(2, CmpOp::Lt, k.qty_lt)}},
           a};
  return {"Q6", {p}};
}

QueryPlan q13() {
  auto k = q13_constants();
  PipelinePlan cust;
  cust.table = "CUSTOMER";
  cust.columns = {"c_custkey", "c_mktsegment"};
  cust.ops = {HashBuildOp{0, 0, {1}}};

  PipelinePlan ord;
  ord.table = "ORDERS";
  ord.columns = {"o_custkey", "o_comment", "o_totalprice"};
  AggregateOp a;
  a.keys = {{3, text_out("c_mktsegment")}};
  a.aggs = {agg(AggFn::Count, lit(0), int_out("order_count")), agg(AggFn::Sum, col(2), dec_out("total_price", 2))};
  ord.ops = {FilterOp{{Predicate::like(1, k.pattern, true)}}, HashProbeOp{0, 0}, a};
  return {"Q13", {cust, ord}};
}

QueryPlan ssb11() {
  auto k = ssb11_constants();
  PipelinePlan date;
  date.table = "DATE";
  date.columns = {"d_datekey", "d_year"};
  date.pruning = {{"d_year", CmpOp::Eq, k.year, 0}};
  date.ops = {FilterOp{{Predicate::compare(1, CmpOp::Eq, k.year)}}, HashBuildOp{0, 0, {}}};

  PipelinePlan lo;
  lo.table = "LINEORDER";
  lo.columns = {"lo_orderdate", "lo_discount", "lo_quantity", "lo_extendedprice"};
  lo.pruning = {{"d_year@lo_orderdate", CmpOp::Eq, k.year, 0},
                {"lo_discount", CmpOp::Between, k.disc_lo, k.disc_hi},
                {"lo_quantity", CmpOp::Lt, k.qty_lt, 0}};
  AggregateOp a;
  a.aggs = {agg(AggFn::Sum, col(3) * col(1), dec_out("revenue", 2))};
  lo.ops = {FilterOp{{Predicate::between(1, k.disc_lo, k.disc_hi), Predicate::compare(2, CmpOp::Lt, k.qty_lt)}},
            HashProbeOp{0, 0}, a};
  return {"SSB1.1", {date, lo}};
}

QueryPlan ssb21() {
  auto k = ssb21_constants();
  PipelinePlan part;
  part.table = "PART";
  part.columns = {"p_partkey", "p_category", "p_brand1"};
  part.ops = {FilterOp{{Predicate::str_eq(1, k.category)}}, HashBuildOp{1, 0, {2}}};

  PipelinePlan supp;
  supp.table = "SUPPLIER";
  supp.columns = {"s_suppkey", "s_region"};
  supp.ops = {FilterOp{{Predicate::str_eq(1, k.region)}}, HashBuildOp{2, 0, {}}};

  PipelinePlan date;
  date.table = "DATE";
  date.columns = {"d_datekey", "d_year"};
  date.ops = {HashBuildOp{0, 0, {1}}};

  PipelinePlan lo;
  lo.table = "LINEORDER";
  lo.columns = {"lo_partkey", "lo_suppkey", "lo_orderdate", "lo_revenue"};
  AggregateOp a;
  // slot 4: p_brand1 id, slot 5: d_year
  a.keys = {{5, int_out("d_year")}, {4, text_out("p_brand1")}};
  a.aggs = {agg(AggFn::Sum, col(3), dec_out("revenue", 2))};
  lo.ops = {HashProbeOp{1, 0}, HashProbeOp{2, 1}, HashProbeOp{0, 2}, a};
  return {"SSB2.1", {part, supp, date, lo}};
}

QueryPlan ssb31() {
  auto k = ssb31_constants();
  PipelinePlan cust;
  cust.table = "CUSTOMER";
  cust.columns = {"c_custkey", "c_region", "c_nation"};
  cust.ops = {FilterOp{{Predicate::str_eq(1, k.region)}}, HashBuildOp{3, 0, {2}}};

  PipelinePlan supp;
  supp.table = "SUPPLIER";
  supp.columns = {"s_suppkey", "s_region", "s_nation"};
  supp.ops = {FilterOp{{Predicate::str_eq(1, k.region)}}, HashBuildOp{2, 0, {2}}};

  PipelinePlan date;
  date.table = "DATE";
  date.columns = {"d_datekey", "d_year"};
  date.pruning = {{"d_year", CmpOp::Between, k.year_lo, k.year_hi}};
  date.ops = {FilterOp{{Predicate::between(1, k.year_lo, k.year_hi)}}, HashBuildOp{0, 0, {1}}};

  PipelinePlan lo;
  lo.table = "LINEORDER";
  lo.columns = {"lo_custkey", "lo_suppkey", "lo_orderdate", "lo_revenue"};
  lo.pruning = {{"d_year@lo_orderdate", CmpOp::Between, k.year_lo, k.year_hi}};
  AggregateOp a;
  // slots 4: c_nation id, 5: s_nation id, 6: d_year
  a.keys = {{4, text_out("c_nation")}, {5, text_out("s_nation")}, {6, int_out("d_year")}};
  a.aggs = {agg(AggFn::Sum, col(3), dec_out("revenue", 2))};
  lo.ops = {HashProbeOp{3, 0}, HashProbeOp{2, 1}, HashProbeOp{0, 2}, a};
  return {"SSB3.1", {cust, supp, date, lo}};
}

}  // namespace

std::vector<std::string> canned_query_ids() { return kIds; }

bool is_canned_query(const std::string& id) { return std::find(kIds.begin(), kIds.end(), id) != kIds.end(); }

Benchmark benchmark_of(const std::string& id) {
  if (!is_canned_query(id)) throw PlanError("unknown query '" + id + "'");
  return id.rfind("SSB", 0) == 0 ? Benchmark::Ssb : Benchmark::Tpch;
}

bool supports_selectivity(const std::string& id) { return id == "Q3" || id == "Q6"; }

QueryPlan canned_query(const std::string& id, const QueryParams& params) {
  if (!is_canned_query(id)) throw PlanError("unknown query '" + id + "'");
  if (params.selectivity && !supports_selectivity(id)) throw PlanError("query " + id + " takes no selectivity");
  if (id == "Q1") return q1();
  if (id == "Q3") return q3(params);
  if (id == "Q6") return q6(params);
  if (id == "Q13") return q13();
  if (id == "SSB1.1") return ssb11();
  if (id == "SSB2.1") return ssb21();
  return ssb31();
}

Q1Constants q1_constants() { return {parse_date("1998-12-01") - 90}; }

Q3Constants q3_constants(const QueryParams& params) {
  Q3Constants k{"BUILDING", parse_date("1995-03-15")};
  if (params.selectivity) {
    // Orders span 1992-01-01 .. 1998-08-02; the cut moves through that range.
    auto s = check_selectivity(params);
    auto lo = parse_date("1992-01-01");
    auto hi = parse_date("1998-08-02");
    k.cut_date = lo + std::llround(s * static_cast<double>(hi - lo));
  }
  return k;
}

Q6Constants q6_constants(const QueryParams& params) {
  Q6Constants k{parse_date("1994-01-01"), parse_date("1995-01-01"), 5, 7, 24};
  if (params.selectivity) {
    auto s = check_selectivity(params);
    k.ship_to = k.ship_from + std::max<std::int64_t>(1, std::llround(s * 365.0));
  }
  return k;
}

Q13Constants q13_constants() { return {"%special%"}; }
Ssb11Constants ssb11_constants() { return {1993, 1, 3, 25}; }
Ssb21Constants ssb21_constants() { return {"MFGR#12", "AMERICA"}; }
Ssb31Constants ssb31_constants() { return {"ASIA", 1992, 1997}; }

}  // namespace colfuse
