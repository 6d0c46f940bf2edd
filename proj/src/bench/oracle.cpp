#include "colfuse/bench/oracle.hpp"

#include <map>
#include <set>
#include <tuple>

#include "colfuse/error.hpp"

namespace colfuse {

namespace {

struct TableRef {
  const TableSchema& schema;
  const TableData& data;

  std::size_t rows() const { return data.row_count(); }
  const IntValues& ints(const std::string& c) const { return std::get<IntValues>(data.columns[schema.column_index(c)]); }
  const StrValues& strs(const std::string& c) const { return std::get<StrValues>(data.columns[schema.column_index(c)]); }
};

TableRef table(const Database& db, const std::string& name) { return {db.schema.table(name), db.table(name)}; }

OutputSpec out(std::string name, ValueKind kind = ValueKind::Int, int scale = 0) {
  return {std::move(name), kind, scale, 0};
}

QueryResult oracle_q1(const Database& db) {
  auto li = table(db, "LINEITEM");
  auto k = q1_constants();
  struct Acc {
    std::int64_t qty = 0, price = 0, disc_price = 0, charge = 0, disc = 0, count = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> groups;
  const auto& flag = li.strs("l_returnflag");
  const auto& status = li.strs("l_linestatus");
  const auto& qty = li.ints("l_quantity");
  const auto& price = li.ints("l_extendedprice");
  const auto& disc = li.ints("l_discount");
  const auto& tax = li.ints("l_tax");
  const auto& ship = li.ints("l_shipdate");
  for (std::size_t r = 0; r < li.rows(); ++r) {
    if (ship[r] > k.ship_le) continue;
    auto& a = groups[{flag[r], status[r]}];
    a.qty += qty[r];
    a.price += price[r];
    a.disc_price += price[r] * (100 - disc[r]);
    a.charge += price[r] * (100 - disc[r]) * (100 + tax[r]);
    a.disc += disc[r];
    ++a.count;
  }
  QueryResult res;
  res.columns = {out("l_returnflag", ValueKind::Text), out("l_linestatus", ValueKind::Text),
                 out("sum_qty"), out("sum_base_price", ValueKind::Decimal, 2),
                 out("sum_disc_price", ValueKind::Decimal, 4), out("sum_charge", ValueKind::Decimal, 6),
                 out("avg_qty_sum"), out("avg_qty_count"), out("avg_price_sum", ValueKind::Decimal, 2),
                 out("avg_price_count"), out("avg_disc_sum", ValueKind::Decimal, 2), out("avg_disc_count"),
                 out("count_order")};
  for (const auto& [key, a] : groups) {
    res.rows.push_back({key.first, key.second, a.qty, a.price, a.disc_price, a.charge, a.qty, a.count, a.price,
                        a.count, a.disc, a.count, a.count});
  }
  return res;
}

QueryResult oracle_q3(const Database& db, const QueryParams& params) {
  auto k = q3_constants(params);
  auto cust = table(db, "CUSTOMER");
  auto ord = table(db, "ORDERS");
  auto li = table(db, "LINEITEM");
  std::set<std::int64_t> building;
  for (std::size_t r = 0; r < cust.rows(); ++r) {
    if (cust.strs("c_mktsegment")[r] == k.segment) building.insert(cust.ints("c_custkey")[r]);
  }
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> orders;
  for (std::size_t r = 0; r < ord.rows(); ++r) {
    if (ord.ints("o_orderdate")[r] < k.cut_date && building.count(ord.ints("o_custkey")[r])) {
      orders[ord.ints("o_orderkey")[r]] = {ord.ints("o_orderdate")[r], ord.ints("o_shippriority")[r]};
    }
  }
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::int64_t> groups;
  const auto& okey = li.ints("l_orderkey");
  const auto& ship = li.ints("l_shipdate");
  const auto& price = li.ints("l_extendedprice");
  const auto& disc = li.ints("l_discount");
  for (std::size_t r = 0; r < li.rows(); ++r) {
    if (ship[r] <= k.cut_date) continue;
    auto it = orders.find(okey[r]);
    if (it == orders.end()) continue;
    groups[{okey[r], it->second.first, it->second.second}] += price[r] * (100 - disc[r]);
  }
  QueryResult res;
  res.columns = {out("l_orderkey"), out("o_orderdate", ValueKind::Date), out("o_shippriority"),
                 out("revenue", ValueKind::Decimal, 4)};
  for (const auto& [key, rev] : groups) res.rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), rev});
  return res;
}

QueryResult oracle_q6(const Database& db, const QueryParams& params) {
  auto k = q6_constants(params);
  auto li = table(db, "LINEITEM");
  const auto& ship = li.ints("l_shipdate");
  const auto& disc = li.ints("l_discount");
  const auto& qty = li.ints("l_quantity");
  const auto& price = li.ints("l_extendedprice");
  std::int64_t revenue = 0;
  bool any = false;
  for (std::size_t r = 0; r < li.rows(); ++r) {
    if (ship[r] >= k.ship_from && ship[r] < k.ship_to && disc[r] >= k.disc_lo && disc[r] <= k.disc_hi &&
        qty[r] < k.qty_lt) {
      revenue += price[r] * disc[r];
      any = true;
    }
  }
  QueryResult res;
  res.columns = {out("revenue", ValueKind::Decimal, 4)};
  if (any) res.rows.push_back({revenue});
  return res;
}

QueryResult oracle_q13(const Database& db) {
  auto k = q13_constants();
  std::string needle = k.pattern.substr(1, k.pattern.size() - 2);
  auto cust = table(db, "CUSTOMER");
  auto ord = table(db, "ORDERS");
  std::map<std::int64_t, std::string> segment;
  for (std::size_t r = 0; r < cust.rows(); ++r) segment[cust.ints("c_custkey")[r]] = cust.strs("c_mktsegment")[r];
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> groups;
  for (std::size_t r = 0; r < ord.rows(); ++r) {
    if (ord.strs("o_comment")[r].find(needle) != std::string::npos) continue;
    auto it = segment.find(ord.ints("o_custkey")[r]);
    if (it == segment.end()) continue;
    auto& g = groups[it->second];
    ++g.first;
    g.second += ord.ints("o_totalprice")[r];
  }
  QueryResult res;
  res.columns = {out("c_mktsegment", ValueKind::Text), out("order_count"), out("total_price", ValueKind::Decimal, 2)};
  for (const auto& [seg, g] : groups) res.rows.push_back({seg, g.first, g.second});
  return res;
}

std::map<std::int64_t, std::int64_t> year_of_datekey(const Database& db) {
  auto d = table(db, "DATE");
  std::map<std::int64_t, std::int64_t> out;
  for (std::size_t r = 0; r < d.rows(); ++r) out[d.ints("d_datekey")[r]] = d.ints("d_year")[r];
  return out;
}

QueryResult oracle_ssb11(const Database& db) {
  auto k = ssb11_constants();
  auto years = year_of_datekey(db);
  auto lo = table(db, "LINEORDER");
  const auto& date = lo.ints("lo_orderdate");
  const auto& disc = lo.ints("lo_discount");
  const auto& qty = lo.ints("lo_quantity");
  const auto& price = lo.ints("lo_extendedprice");
  std::int64_t revenue = 0;
  bool any = false;
  for (std::size_t r = 0; r < lo.rows(); ++r) {
    if (disc[r] < k.disc_lo || disc[r] > k.disc_hi || qty[r] >= k.qty_lt) continue;
    auto it = years.find(date[r]);
    if (it == years.end() || it->second != k.year) continue;
    revenue += price[r] * disc[r];
    any = true;
  }
  QueryResult res;
  res.columns = {out("revenue", ValueKind::Decimal, 2)};
  if (any) res.rows.push_back({revenue});
  return res;
}

QueryResult oracle_ssb21(const Database& db) {
  auto k = ssb21_constants();
  auto years = year_of_datekey(db);
  auto part = table(db, "PART");
  auto supp = table(db, "SUPPLIER");
  auto lo = table(db, "LINEORDER");
  std::map<std::int64_t, std::string> brand;
  for (std::size_t r = 0; r < part.rows(); ++r) {
    if (part.strs("p_category")[r] == k.category) brand[part.ints("p_partkey")[r]] = part.strs("p_brand1")[r];
  }
  std::set<std::int64_t> suppliers;
  for (std::size_t r = 0; r < supp.rows(); ++r) {
    if (supp.strs("s_region")[r] == k.region) suppliers.insert(supp.ints("s_suppkey")[r]);
  }
  std::map<std::pair<std::int64_t, std::string>, std::int64_t> groups;
  for (std::size_t r = 0; r < lo.rows(); ++r) {
    auto b = brand.find(lo.ints("lo_partkey")[r]);
    if (b == brand.end() || !suppliers.count(lo.ints("lo_suppkey")[r])) continue;
    auto y = years.find(lo.ints("lo_orderdate")[r]);
    if (y == years.end()) continue;
    groups[{y->second, b->second}] += lo.ints("lo_revenue")[r];
  }
  QueryResult res;
  res.columns = {out("d_year"), out("p_brand1", ValueKind::Text), out("revenue", ValueKind::Decimal, 2)};
  for (const auto& [key, rev] : groups) res.rows.push_back({key.first, key.second, rev});
  return res;
}

QueryResult oracle_ssb31(const Database& db) {
  auto k = ssb31_constants();
  auto years = year_of_datekey(db);
  auto cust = table(db, "CUSTOMER");
  auto supp = table(db, "SUPPLIER");
  auto lo = table(db, "LINEORDER");
  std::map<std::int64_t, std::string> cnation, snation;
  for (std::size_t r = 0; r < cust.rows(); ++r) {
    if (cust.strs("c_region")[r] == k.region) cnation[cust.ints("c_custkey")[r]] = cust.strs("c_nation")[r];
  }
  for (std::size_t r = 0; r < supp.rows(); ++r) {
    if (supp.strs("s_region")[r] == k.region) snation[supp.ints("s_suppkey")[r]] = supp.strs("s_nation")[r];
  }
  std::map<std::tuple<std::string, std::string, std::int64_t>, std::int64_t> groups;
  for (std::size_t r = 0; r < lo.rows(); ++r) {
    auto c = cnation.find(lo.ints("lo_custkey")[r]);
    if (c == cnation.end()) continue;
    auto s = snation.find(lo.ints("lo_suppkey")[r]);
    if (s == snation.end()) continue;
    auto y = years.find(lo.ints("lo_orderdate")[r]);
    if (y == years.end() || y->second < k.year_lo || y->second > k.year_hi) continue;
    groups[{c->second, s->second, y->second}] += lo.ints("lo_revenue")[r];
  }
  QueryResult res;
  res.columns = {out("c_nation", ValueKind::Text), out("s_nation", ValueKind::Text), out("d_year"),
                 out("revenue", ValueKind::Decimal, 2)};
  for (const auto& [key, rev] : groups) {
    res.rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), rev});
  }
  return res;
}

}  // namespace

QueryResult oracle_eval(const std::string& id, const Database& db, const QueryParams& params) {
  if (params.selectivity && !supports_selectivity(id)) throw PlanError("query " + id + " takes no selectivity");
  if (id == "Q1") return oracle_q1(db);
  if (id == "Q3") return oracle_q3(db, params);
  if (id == "Q6") return oracle_q6(db, params);
  if (id == "Q13") return oracle_q13(db);
  if (id == "SSB1.1") return oracle_ssb11(db);
  if (id == "SSB2.1") return oracle_ssb21(db);
  if (id == "SSB3.1") return oracle_ssb31(db);
  throw PlanError("unknown query '" + id + "'");
}

}  // namespace colfuse
