#include "colfuse/bench/generator.hpp"

#include <cmath>
#include <cstdio>

#include "colfuse/error.hpp"

namespace colfuse {

const char* const kNations[25] = {"ALGERIA", "ARGENTINA", "BRAZIL",  "CANADA",       "EGYPT",
                                  "ETHIOPIA", "FRANCE",   "GERMANY", "INDIA",        "INDONESIA",
                                  "IRAN",     "IRAQ",     "JAPAN",   "JORDAN",       "KENYA",
                                  "MOROCCO",  "MOZAMBIQUE", "PERU",  "CHINA",        "ROMANIA",
                                  "SAUDI ARABIA", "VIETNAM", "RUSSIA", "UNITED KINGDOM", "UNITED STATES"};
const char* const kRegions[5] = {"AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"};

int region_of_nation(int nation) {
  static constexpr int kMap[25] = {0, 1, 1, 1, 4, 0, 3, 3, 2, 2, 4, 4, 2, 4, 0, 0, 0, 1, 2, 3, 4, 2, 3, 3, 1};
  return kMap[nation];
}

const char* to_string(Benchmark b) { return b == Benchmark::Tpch ? "tpch" : "ssb"; }

Benchmark parse_benchmark(const std::string& text) {
  if (text == "tpch") return Benchmark::Tpch;
  if (text == "ssb") return Benchmark::Ssb;
  throw Error("unknown benchmark '" + text + "' (expected tpch or ssb)");
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("Rng::below(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::int64_t Rng::uniform(std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

namespace {

ColumnSchema col(const char* name, ColumnType type) { return {name, type}; }

ZoneAttributeSpec own(const char* column) { return {column, column, "", "", ""}; }

ZoneAttributeSpec ref(const char* column, const char* table, const char* key, const char* value) {
  return {std::string(value) + "@" + column, column, table, key, value};
}

const char* const kSegments[5] = {"AUTOMOBILE", "BUILDING", "FURNITURE", "MACHINERY", "HOUSEHOLD"};
const char* const kPriorities[5] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"};
const char* const kShipModes[7] = {"REG AIR", "AIR", "RAIL", "SHIP", "TRUCK", "MAIL", "FOB"};
const char* const kWords[24] = {"special",  "requests", "pending",     "deposits",    "furiously",   "carefully",
                                "regular",  "express",  "accounts",    "packages",    "ideas",       "final",
                                "quickly",  "ironic",   "blithely",    "bold",        "silent",      "even",
                                "instructions", "theodolites", "foxes", "asymptotes", "platelets", "dependencies"};
const char* const kColors[12] = {"almond", "azure",  "blush", "chiffon", "coral",  "cyan",
                                 "ivory",  "khaki", "linen", "orchid",  "salmon", "thistle"};

std::string words(Rng& rng, int lo, int hi) {
  std::string out;
  auto n = rng.uniform(lo, hi);
  for (std::int64_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kWords[rng.below(24)];
  }
  return out;
}

std::string numbered(const char* prefix, std::int64_t n) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s#%09lld", prefix, static_cast<long long>(n));
  return buf;
}

std::int64_t scaled(double base, double sf, std::int64_t min) {
  return std::max<std::int64_t>(min, std::llround(base * sf));
}

std::int64_t datekey(std::int64_t days) {
  auto s = format_date(days);  // YYYY-MM-DD
  return std::stoll(s.substr(0, 4)) * 10000 + std::stoll(s.substr(5, 2)) * 100 + std::stoll(s.substr(8, 2));
}

/// dbgen-style sparse order keys: 8 used out of every 32.
std::int64_t sparse_orderkey(std::int64_t i) { return (i / 8) * 32 + (i % 8) + 1; }

std::int64_t retail_price(std::int64_t partkey) {
  return 90000 + ((partkey / 10) % 20001) + 100 * (partkey % 1000);
}

struct Columns {
  std::vector<ColumnValues> cols;

  explicit Columns(const TableSchema& t) {
    for (const auto& c : t.columns) {
      cols.push_back(c.type.is_string() ? ColumnValues(StrValues{}) : ColumnValues(IntValues{}));
    }
  }
  IntValues& i(std::size_t c) { return std::get<IntValues>(cols[c]); }
  StrValues& s(std::size_t c) { return std::get<StrValues>(cols[c]); }
  TableData finish(const std::string& name) { return {name, std::move(cols)}; }
};

Database generate_tpch(double sf, std::uint64_t seed) {
  Database db{tpch_schema(), {}};
  Rng rng(seed);
  const auto customers = scaled(150000, sf, 1);
  const auto parts = scaled(200000, sf, 1);
  const auto suppliers = scaled(10000, sf, 1);
  const auto orders = customers * 10;
  const auto start = parse_date("1992-01-01");
  const auto last_order = parse_date("1998-12-31") - 151;
  const auto current = parse_date("1995-06-17");

  Columns c(db.schema.table("CUSTOMER"));
  for (std::int64_t k = 1; k <= customers; ++k) {
    c.i(0).push_back(k);
    c.s(1).push_back(numbered("Customer", k));
    c.i(2).push_back(rng.uniform(0, 24));
    c.s(3).push_back(kSegments[rng.below(5)]);
    c.i(4).push_back(rng.uniform(-99999, 999999));
  }

  Columns o(db.schema.table("ORDERS"));
  Columns l(db.schema.table("LINEITEM"));
  for (std::int64_t n = 0; n < orders; ++n) {
    const auto okey = sparse_orderkey(n);
    std::int64_t cust;
    do {
      cust = rng.uniform(1, customers);
    } while (cust % 3 == 0 && customers >= 3);
    const auto odate = rng.uniform(start, last_order);
    const auto lines = rng.uniform(1, 7);
    std::int64_t total = 0;
    int shipped = 0;
    for (std::int64_t ln = 1; ln <= lines; ++ln) {
      auto part = rng.uniform(1, parts);
      auto qty = rng.uniform(1, 50);
      auto price = qty * retail_price(part);
      auto disc = rng.uniform(0, 10);
      auto tax = rng.uniform(0, 8);
      auto ship = odate + rng.uniform(1, 121);
      auto commit = odate + rng.uniform(30, 90);
      auto receipt = ship + rng.uniform(1, 30);
      std::string flag = receipt <= current ? (rng.below(2) ? "R" : "A") : "N";
      std::string status = ship > current ? "O" : "F";
      shipped += status == "F";
      total += price * (100 + tax) * (100 - disc) / 10000;
      l.i(0).push_back(okey);
      l.i(1).push_back(part);
      l.i(2).push_back(rng.uniform(1, suppliers));
      l.i(3).push_back(ln);
      l.i(4).push_back(qty);
      l.i(5).push_back(price);
      l.i(6).push_back(disc);
      l.i(7).push_back(tax);
      l.s(8).push_back(flag);
      l.s(9).push_back(status);
      l.i(10).push_back(ship);
      l.i(11).push_back(commit);
      l.i(12).push_back(receipt);
      l.s(13).push_back(kShipModes[rng.below(7)]);
      l.s(14).push_back(words(rng, 2, 5));
    }
    o.i(0).push_back(okey);
    o.i(1).push_back(cust);
    o.s(2).push_back(shipped == lines ? "F" : shipped == 0 ? "O" : "P");
    o.i(3).push_back(total);
    o.i(4).push_back(odate);
    o.s(5).push_back(kPriorities[rng.below(5)]);
    o.i(6).push_back(0);
    o.s(7).push_back(words(rng, 4, 10));
  }
  db.tables.push_back(l.finish("LINEITEM"));
  db.tables.push_back(o.finish("ORDERS"));
  db.tables.push_back(c.finish("CUSTOMER"));
  return db;
}

Database generate_ssb(double sf, std::uint64_t seed) {
  Database db{ssb_schema(), {}};
  Rng rng(seed);
  const auto customers = scaled(30000, sf, 1);
  const auto suppliers = scaled(2000, sf, 25);
  const auto parts = scaled(200000, sf, 200);
  const auto orders = scaled(1500000, sf, 1);
  const auto start = parse_date("1992-01-01");
  const auto end = parse_date("1998-12-31");

  Columns d(db.schema.table("DATE"));
  std::vector<std::int64_t> datekeys;
  for (auto day = start; day <= end; ++day) {
    auto key = datekey(day);
    datekeys.push_back(key);
    d.i(0).push_back(key);
    d.i(1).push_back(key / 10000);
    d.i(2).push_back(key / 100);
    d.i(3).push_back((day - parse_date(std::to_string(key / 10000) + "-01-01")) / 7 + 1);
  }

  Columns c(db.schema.table("CUSTOMER"));
  for (std::int64_t k = 1; k <= customers; ++k) {
    auto nation = static_cast<int>(rng.below(25));
    c.i(0).push_back(k);
    c.s(1).push_back(numbered("Customer", k));
    c.s(2).push_back(kNations[nation]);
    c.s(3).push_back(kRegions[region_of_nation(nation)]);
    c.s(4).push_back(kSegments[rng.below(5)]);
  }

  Columns s(db.schema.table("SUPPLIER"));
  for (std::int64_t k = 1; k <= suppliers; ++k) {
    auto nation = static_cast<int>(rng.below(25));
    s.i(0).push_back(k);
    s.s(1).push_back(numbered("Supplier", k));
    s.s(2).push_back(kNations[nation]);
    s.s(3).push_back(kRegions[region_of_nation(nation)]);
  }

  Columns p(db.schema.table("PART"));
  for (std::int64_t k = 1; k <= parts; ++k) {
    auto mfgr = rng.uniform(1, 5);
    auto cat = rng.uniform(1, 5);
    auto brand = rng.uniform(1, 40);
    p.i(0).push_back(k);
    p.s(1).push_back("MFGR#" + std::to_string(mfgr));
    p.s(2).push_back("MFGR#" + std::to_string(mfgr) + std::to_string(cat));
    p.s(3).push_back("MFGR#" + std::to_string(mfgr) + std::to_string(cat) + std::to_string(brand));
    p.s(4).push_back(std::string(kColors[rng.below(12)]) + " " + kColors[rng.below(12)]);
  }

  Columns lo(db.schema.table("LINEORDER"));
  const auto last_order_day = static_cast<std::int64_t>(datekeys.size()) - 151;
  for (std::int64_t n = 0; n < orders; ++n) {
    auto cust = rng.uniform(1, customers);
    auto odate = datekeys[static_cast<std::size_t>(rng.uniform(0, last_order_day - 1))];
    auto lines = rng.uniform(1, 7);
    for (std::int64_t ln = 1; ln <= lines; ++ln) {
      auto part = rng.uniform(1, parts);
      auto qty = rng.uniform(1, 50);
      auto price = qty * retail_price(part);
      auto disc = rng.uniform(0, 10);
      lo.i(0).push_back(n + 1);
      lo.i(1).push_back(ln);
      lo.i(2).push_back(cust);
      lo.i(3).push_back(part);
      lo.i(4).push_back(rng.uniform(1, suppliers));
      lo.i(5).push_back(odate);
      lo.i(6).push_back(qty);
      lo.i(7).push_back(price);
      lo.i(8).push_back(disc);
      lo.i(9).push_back(price * (100 - disc) / 100);
      lo.i(10).push_back(retail_price(part) * 6 / 10);
    }
  }
  db.tables.push_back(lo.finish("LINEORDER"));
  db.tables.push_back(d.finish("DATE"));
  db.tables.push_back(c.finish("CUSTOMER"));
  db.tables.push_back(s.finish("SUPPLIER"));
  db.tables.push_back(p.finish("PART"));
  return db;
}

}  // namespace

Schema tpch_schema() {
  Schema s;
  TableSchema lineitem{"LINEITEM",
                       {col("l_orderkey", ColumnType::int64()), col("l_partkey", ColumnType::int32()),
                        col("l_suppkey", ColumnType::int32()), col("l_linenumber", ColumnType::int32()),
                        col("l_quantity", ColumnType::int32()), col("l_extendedprice", ColumnType::decimal()),
                        col("l_discount", ColumnType::decimal()), col("l_tax", ColumnType::decimal()),
                        col("l_returnflag", ColumnType::fixed_char(1)), col("l_linestatus", ColumnType::fixed_char(1)),
                        col("l_shipdate", ColumnType::date()), col("l_commitdate", ColumnType::date()),
                        col("l_receiptdate", ColumnType::date()), col("l_shipmode", ColumnType::fixed_char(10)),
                        col("l_comment", ColumnType::varchar())},
                       "l_shipdate",
                       {own("l_shipdate"), own("l_discount"), own("l_quantity"),
                        ref("l_orderkey", "ORDERS", "o_orderkey", "o_orderdate")}};
  TableSchema orders{"ORDERS",
                     {col("o_orderkey", ColumnType::int64()), col("o_custkey", ColumnType::int32()),
                      col("o_orderstatus", ColumnType::fixed_char(1)), col("o_totalprice", ColumnType::decimal()),
                      col("o_orderdate", ColumnType::date()), col("o_orderpriority", ColumnType::fixed_char(15)),
                      col("o_shippriority", ColumnType::int32()), col("o_comment", ColumnType::varchar())},
                     "o_orderdate",
                     {own("o_orderdate")}};
  TableSchema customer{"CUSTOMER",
                       {col("c_custkey", ColumnType::int32()), col("c_name", ColumnType::varchar()),
                        col("c_nationkey", ColumnType::int32()), col("c_mktsegment", ColumnType::fixed_char(10)),
                        col("c_acctbal", ColumnType::decimal())},
                       "c_custkey",
                       {}};
  s.tables = {lineitem, orders, customer};
  return s;
}

Schema ssb_schema() {
  Schema s;
  TableSchema lineorder{"LINEORDER",
                        {col("lo_orderkey", ColumnType::int64()), col("lo_linenumber", ColumnType::int32()),
                         col("lo_custkey", ColumnType::int32()), col("lo_partkey", ColumnType::int32()),
                         col("lo_suppkey", ColumnType::int32()), col("lo_orderdate", ColumnType::int32()),
                         col("lo_quantity", ColumnType::int32()), col("lo_extendedprice", ColumnType::decimal()),
                         col("lo_discount", ColumnType::int32()), col("lo_revenue", ColumnType::decimal()),
                         col("lo_supplycost", ColumnType::decimal())},
                        "lo_orderdate",
                        {own("lo_orderdate"), own("lo_discount"), own("lo_quantity"),
                         ref("lo_orderdate", "DATE", "d_datekey", "d_year")}};
  TableSchema date{"DATE",
                   {col("d_datekey", ColumnType::int32()), col("d_year", ColumnType::int32()),
                    col("d_yearmonthnum", ColumnType::int32()), col("d_weeknuminyear", ColumnType::int32())},
                   "d_datekey",
                   {own("d_year")}};
  TableSchema customer{"CUSTOMER",
                       {col("c_custkey", ColumnType::int32()), col("c_name", ColumnType::varchar()),
                        col("c_nation", ColumnType::fixed_char(15)), col("c_region", ColumnType::fixed_char(12)),
                        col("c_mktsegment", ColumnType::fixed_char(10))},
                       "c_custkey",
                       {}};
  TableSchema supplier{"SUPPLIER",
                       {col("s_suppkey", ColumnType::int32()), col("s_name", ColumnType::varchar()),
                        col("s_nation", ColumnType::fixed_char(15)), col("s_region", ColumnType::fixed_char(12))},
                       "s_suppkey",
                       {}};
  TableSchema part{"PART",
                   {col("p_partkey", ColumnType::int32()), col("p_mfgr", ColumnType::fixed_char(6)),
                    col("p_category", ColumnType::fixed_char(7)), col("p_brand1", ColumnType::fixed_char(9)),
                    col("p_color", ColumnType::varchar())},
                   "p_partkey",
                   {}};
  s.tables = {lineorder, date, customer, supplier, part};
  return s;
}

Schema benchmark_schema(Benchmark b) { return b == Benchmark::Tpch ? tpch_schema() : ssb_schema(); }

const TableData& Database::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw Error("no table " + name);
}

Database generate(Benchmark b, double scale_factor, std::uint64_t seed) {
  if (!(scale_factor >= kMinScaleFactor && scale_factor <= kMaxScaleFactor)) {
    throw Error("scale factor must be within [0.001, 1]");
  }
  return b == Benchmark::Tpch ? generate_tpch(scale_factor, seed) : generate_ssb(scale_factor, seed);
}

void write_database(const Database& db, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  db.schema.save(dir / "schema.json");
  for (const auto& t : db.tables) write_row_file(dir / (t.name + ".tbl"), t, db.schema.table(t.name));
}

Database read_database(const std::filesystem::path& dir) {
  Database db;
  db.schema = Schema::load(dir / "schema.json");
  for (const auto& ts : db.schema.tables) db.tables.push_back(read_row_file(dir / (ts.name + ".tbl"), ts));
  return db;
}

}  // namespace colfuse
