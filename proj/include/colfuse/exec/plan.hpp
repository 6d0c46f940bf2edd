#pragma once

// Physical pipeline plans and query results.
//
// Slots: a pipeline's input columns occupy slots 0..n-1 in plan order; every
// HashProbe appends its payload values as further slots.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "colfuse/catalog.hpp"

namespace colfuse {

enum class ExecMode : std::uint8_t { Fused, Staged };
const char* to_string(ExecMode mode);
ExecMode parse_exec_mode(const std::string& text);

/// Integer expression over slots; arithmetic is overflow-checked.
struct Expr {
  enum class Op : std::uint8_t { Col, Const, Add, Sub, Mul };

  Op op = Op::Const;
  std::uint32_t slot = 0;
  std::int64_t value = 0;
  std::shared_ptr<const Expr> lhs;
  std::shared_ptr<const Expr> rhs;

  static Expr col(std::uint32_t slot);
  static Expr lit(std::int64_t value);
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);

struct Predicate {
  enum class Kind : std::uint8_t { IntCompare, StrEq, Like };

  Kind kind = Kind::IntCompare;
  std::uint32_t slot = 0;
  CmpOp op = CmpOp::Eq;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::string text;  // StrEq value or LIKE pattern
  bool negate = false;

  static Predicate compare(std::uint32_t slot, CmpOp op, std::int64_t lo, std::int64_t hi = 0);
  static Predicate between(std::uint32_t slot, std::int64_t lo, std::int64_t hi);
  static Predicate str_eq(std::uint32_t slot, std::string value, bool negate = false);
  static Predicate like(std::uint32_t slot, std::string pattern, bool negate = false);
};

/// Conjunction.
struct FilterOp {
  std::vector<Predicate> predicates;
};

struct HashBuildOp {
  std::uint32_t table_id = 0;
  std::uint32_t key_slot = 0;
  std::vector<std::uint32_t> payload_slots;
};

/// Inner join against a table built by an earlier pipeline.
struct HashProbeOp {
  std::uint32_t table_id = 0;
  std::uint32_t key_slot = 0;
};

enum class AggFn : std::uint8_t { Sum, Count, Min, Max, Avg };

/// How an integer result value is rendered.
enum class ValueKind : std::uint8_t { Int, Decimal, Date, Text, ShortChar };

struct OutputSpec {
  std::string name;
  ValueKind kind = ValueKind::Int;
  int scale = 0;            // Decimal
  std::uint32_t length = 0; // ShortChar
};

struct GroupKey {
  std::uint32_t slot = 0;
  OutputSpec output;
};

struct AggSpec {
  AggFn fn = AggFn::Sum;
  Expr expr;  // ignored by Count
  OutputSpec output;
};

struct AggregateOp {
  std::vector<GroupKey> keys;
  std::vector<AggSpec> aggs;
};

using Operator = std::variant<FilterOp, HashBuildOp, HashProbeOp, AggregateOp>;

/// Zone-map predicate resolved against the table's attribute names.
struct PrunePredicate {
  std::string attribute;
  CmpOp op = CmpOp::Eq;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct PipelinePlan {
  std::string table;
  std::vector<std::string> columns;
  std::vector<PrunePredicate> pruning;
  std::vector<Operator> ops;
};

struct QueryPlan {
  std::string id;
  std::vector<PipelinePlan> pipelines;
};

using Cell = std::variant<std::int64_t, std::string>;

/// Rows sorted by the group-key columns. AVG contributes a sum and a count column.
struct QueryResult {
  std::vector<OutputSpec> columns;
  std::vector<std::vector<Cell>> rows;

  friend bool operator==(const QueryResult& a, const QueryResult& b) { return a.rows == b.rows; }
};

std::string format_cell(const Cell& cell, const OutputSpec& spec);
/// Pipe-delimited rows with a header line.
std::string format_result(const QueryResult& result);

}  // namespace colfuse
