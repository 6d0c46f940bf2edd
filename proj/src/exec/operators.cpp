#include "colfuse/exec/operators.hpp"

#include <algorithm>

#include "colfuse/codec/types.hpp"
#include "colfuse/error.hpp"

namespace colfuse {

const char* to_string(ExecMode mode) { return mode == ExecMode::Fused ? "fused" : "staged"; }

ExecMode parse_exec_mode(const std::string& text) {
  if (text == "fused") return ExecMode::Fused;
  if (text == "staged") return ExecMode::Staged;
  throw PlanError("unknown execution mode '" + text + "'");
}

Expr Expr::col(std::uint32_t slot) {
  Expr e;
  e.op = Op::Col;
  e.slot = slot;
  return e;
}

Expr Expr::lit(std::int64_t value) {
  Expr e;
  e.op = Op::Const;
  e.value = value;
  return e;
}

namespace {

Expr binary(Expr::Op op, const Expr& a, const Expr& b) {
  Expr e;
  e.op = op;
  e.lhs = std::make_shared<const Expr>(a);
  e.rhs = std::make_shared<const Expr>(b);
  return e;
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return binary(Expr::Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return binary(Expr::Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return binary(Expr::Op::Mul, a, b); }

Predicate Predicate::compare(std::uint32_t slot, CmpOp op, std::int64_t lo, std::int64_t hi) {
  Predicate p;
  p.kind = Kind::IntCompare;
  p.slot = slot;
  p.op = op;
  p.lo = lo;
  p.hi = hi;
  return p;
}

Predicate Predicate::between(std::uint32_t slot, std::int64_t lo, std::int64_t hi) {
  return compare(slot, CmpOp::Between, lo, hi);
}

Predicate Predicate::str_eq(std::uint32_t slot, std::string value, bool negate) {
  Predicate p;
  p.kind = Kind::StrEq;
  p.slot = slot;
  p.text = std::move(value);
  p.negate = negate;
  return p;
}

Predicate Predicate::like(std::uint32_t slot, std::string pattern, bool negate) {
  Predicate p;
  p.kind = Kind::Like;
  p.slot = slot;
  p.text = std::move(pattern);
  p.negate = negate;
  return p;
}

std::string format_cell(const Cell& cell, const OutputSpec& spec) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  auto v = std::get<std::int64_t>(cell);
  switch (spec.kind) {
    case ValueKind::Decimal:
      return format_decimal(v, spec.scale);
    case ValueKind::Date:
      return format_date(v);
    default:
      return std::to_string(v);
  }
}

std::string format_result(const QueryResult& result) {
  std::string out;
  for (std::size_t c = 0; c < result.columns.size(); ++c) {
    out += result.columns[c].name;
    out += c + 1 < result.columns.size() ? "|" : "\n";
  }
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += format_cell(row[c], result.columns[c]);
      out += c + 1 < row.size() ? "|" : "\n";
    }
  }
  return out;
}

std::string parse_like_pattern(const std::string& pattern) {
  if (pattern.size() < 2 || pattern.front() != '%' || pattern.back() != '%') {
    throw PlanError("LIKE pattern '" + pattern + "' is not of the form %substring%");
  }
  std::string needle = pattern.substr(1, pattern.size() - 2);
  if (needle.find_first_of("%_") != std::string::npos) {
    throw PlanError("LIKE pattern '" + pattern + "' has wildcards inside the substring");
  }
  return needle;
}

KmpMatcher::KmpMatcher(std::string needle) : needle_(std::move(needle)), failure_(needle_.size(), 0) {
  std::uint32_t k = 0;
  for (std::size_t i = 1; i < needle_.size(); ++i) {
    while (k > 0 && needle_[i] != needle_[k]) k = failure_[k - 1];
    if (needle_[i] == needle_[k]) ++k;
    failure_[i] = k;
  }
}

bool KmpMatcher::matches(std::string_view haystack) const {
  if (needle_.empty()) return true;
  if (needle_.size() > haystack.size()) return false;
  std::uint32_t k = 0;
  for (char c : haystack) {
    while (k > 0 && c != needle_[k]) k = failure_[k - 1];
    if (c == needle_[k] && ++k == needle_.size()) return true;
  }
  return false;
}

std::int64_t StringPool::intern(std::string_view s) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = ids_.try_emplace(std::string(s), static_cast<std::int64_t>(strings_.size()));
  if (inserted) strings_.push_back(it->first);
  return it->second;
}

std::string StringPool::lookup(std::int64_t id) const {
  std::lock_guard lock(mu_);
  if (id < 0 || static_cast<std::size_t>(id) >= strings_.size()) throw Error("unknown string id");
  return strings_[static_cast<std::size_t>(id)];
}

std::size_t StringPool::size() const {
  std::lock_guard lock(mu_);
  return strings_.size();
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw ArithmeticOverflow("64-bit addition overflow");
  return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw ArithmeticOverflow("64-bit subtraction overflow");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw ArithmeticOverflow("64-bit multiplication overflow");
  return r;
}

std::int64_t eval_expr(const Expr& e, std::span<const ColumnView> slots, std::size_t row) {
  switch (e.op) {
    case Expr::Op::Col:
      return slots[e.slot].int_at(row);
    case Expr::Op::Const:
      return e.value;
    case Expr::Op::Add:
      return checked_add(eval_expr(*e.lhs, slots, row), eval_expr(*e.rhs, slots, row));
    case Expr::Op::Sub:
      return checked_sub(eval_expr(*e.lhs, slots, row), eval_expr(*e.rhs, slots, row));
    case Expr::Op::Mul:
      return checked_mul(eval_expr(*e.lhs, slots, row), eval_expr(*e.rhs, slots, row));
  }
  return 0;
}

CompiledFilter compile_filter(const FilterOp& op, const std::vector<bool>& slot_is_string) {
  CompiledFilter out;
  for (const auto& p : op.predicates) {
    if (p.slot >= slot_is_string.size()) throw PlanError("predicate on unknown slot " + std::to_string(p.slot));
    bool str = slot_is_string[p.slot];
    CompiledPredicate cp{p, nullptr};
    switch (p.kind) {
      case Predicate::Kind::IntCompare:
        if (str) throw PlanError("integer comparison on a string slot");
        break;
      case Predicate::Kind::StrEq:
        if (!str) throw PlanError("string equality on an integer slot");
        break;
      case Predicate::Kind::Like:
        if (!str) throw PlanError("LIKE on an integer slot");
        cp.kmp = std::make_shared<const KmpMatcher>(parse_like_pattern(p.text));
        break;
    }
    out.predicates.push_back(std::move(cp));
  }
  return out;
}

namespace {

bool eval_predicate(const CompiledPredicate& cp, const ColumnView& col, std::size_t row) {
  const auto& p = cp.pred;
  switch (p.kind) {
    case Predicate::Kind::IntCompare: {
      RangePredicate rp{0, p.op, p.lo, p.hi};
      return rp.matches(col.int_at(row));
    }
    case Predicate::Kind::StrEq:
      return (col.str_at(row) == p.text) != p.negate;
    case Predicate::Kind::Like:
      return cp.kmp->matches(col.str_at(row)) != p.negate;
  }
  return false;
}

}  // namespace

void filter_apply(const CompiledFilter& filter, std::span<const ColumnView> slots, Selection& sel) {
  for (const auto& cp : filter.predicates) {
    const auto& col = slots[cp.pred.slot];
    std::size_t kept = 0;
    for (auto r : sel) {
      if (eval_predicate(cp, col, r)) sel[kept++] = r;
    }
    sel.resize(kept);
  }
}

std::vector<bool> filter_bitmap(const CompiledFilter& filter, std::span<const ColumnView> slots, std::size_t n) {
  Selection sel(n);
  for (std::size_t i = 0; i < n; ++i) sel[i] = static_cast<std::uint32_t>(i);
  filter_apply(filter, slots, sel);
  std::vector<bool> bits(n, false);
  for (auto r : sel) bits[r] = true;
  return bits;
}

void hash_build_apply(const HashBuildOp& op, std::span<const ColumnView> slots, const Selection& sel,
                      const std::vector<bool>& slot_is_string, HashTable& table, StringPool& pool) {
  std::vector<std::int64_t> payload(op.payload_slots.size());
  for (auto r : sel) {
    for (std::size_t k = 0; k < op.payload_slots.size(); ++k) {
      auto s = op.payload_slots[k];
      payload[k] = slot_is_string[s] ? pool.intern(slots[s].str_at(r)) : slots[s].int_at(r);
    }
    table.insert(slots[op.key_slot].int_at(r), payload);
  }
}

void hash_probe_apply(const HashProbeOp& op, std::span<const ColumnView> slots, Selection& sel,
                      const HashTable& table, std::span<std::int64_t* const> payload) {
  const auto width = table.payload_width();
  const auto& key = slots[op.key_slot];
  std::size_t kept = 0;
  for (auto r : sel) {
    const auto* hit = table.probe(key.int_at(r));
    if (!hit) continue;
    for (std::size_t k = 0; k < width; ++k) payload[k][r] = hit[k];
    sel[kept++] = r;
  }
  sel.resize(kept);
}

std::size_t GroupKeyHash::operator()(const GroupKeyTuple& k) const noexcept {
  std::uint64_t h = 0;
  for (auto v : k.v) h = (h ^ static_cast<std::uint64_t>(v)) * kHashMultiplier + 0x632BE59BD9B4E019ull;
  return static_cast<std::size_t>(h ^ (h >> 29));
}

void AggregateState::consume(std::span<const ColumnView> slots, const Selection& sel,
                             const std::vector<bool>& slot_is_string, StringPool& pool) {
  const auto& op = *op_;
  for (auto r : sel) {
    GroupKeyTuple key;
    for (std::size_t k = 0; k < op.keys.size(); ++k) {
      auto s = op.keys[k].slot;
      key.v[k] = slot_is_string[s] ? pool.intern(slots[s].str_at(r)) : slots[s].int_at(r);
    }
    auto [it, inserted] = groups_.try_emplace(key);
    if (inserted) it->second.resize(op.aggs.size());
    for (std::size_t a = 0; a < op.aggs.size(); ++a) {
      auto& acc = it->second[a];
      ++acc.count;
      if (op.aggs[a].fn == AggFn::Count) continue;
      auto v = eval_expr(op.aggs[a].expr, slots, r);
      acc.sum = checked_add(acc.sum, v);
      acc.min = std::min(acc.min, v);
      acc.max = std::max(acc.max, v);
    }
  }
}

void AggregateState::merge(const AggregateState& other) {
  if (!op_) op_ = other.op_;
  for (const auto& [key, accs] : other.groups_) {
    auto [it, inserted] = groups_.try_emplace(key, accs);
    if (inserted) continue;
    for (std::size_t a = 0; a < accs.size(); ++a) {
      auto& dst = it->second[a];
      dst.sum = checked_add(dst.sum, accs[a].sum);
      dst.count += accs[a].count;
      dst.min = std::min(dst.min, accs[a].min);
      dst.max = std::max(dst.max, accs[a].max);
    }
  }
}

QueryResult AggregateState::finalize(const StringPool& pool) const {
  QueryResult out;
  if (!op_) return out;
  const auto& op = *op_;
  for (const auto& k : op.keys) out.columns.push_back(k.output);
  for (const auto& a : op.aggs) {
    if (a.fn == AggFn::Avg) {
      auto sum = a.output;
      sum.name += "_sum";
      OutputSpec count{a.output.name + "_count", ValueKind::Int, 0, 0};
      out.columns.push_back(sum);
      out.columns.push_back(count);
    } else {
      out.columns.push_back(a.output);
    }
  }
  for (const auto& [key, accs] : groups_) {
    std::vector<Cell> row;
    for (std::size_t k = 0; k < op.keys.size(); ++k) {
      const auto& spec = op.keys[k].output;
      if (spec.kind == ValueKind::Text) {
        row.emplace_back(pool.lookup(key.v[k]));
      } else if (spec.kind == ValueKind::ShortChar) {
        row.emplace_back(unpack_short_char(key.v[k], spec.length));
      } else {
        row.emplace_back(key.v[k]);
      }
    }
    for (std::size_t a = 0; a < op.aggs.size(); ++a) {
      const auto& acc = accs[a];
      switch (op.aggs[a].fn) {
        case AggFn::Sum:
          row.emplace_back(acc.sum);
          break;
        case AggFn::Count:
          row.emplace_back(acc.count);
          break;
        case AggFn::Min:
          row.emplace_back(acc.min);
          break;
        case AggFn::Max:
          row.emplace_back(acc.max);
          break;
        case AggFn::Avg:
          row.emplace_back(acc.sum);
          row.emplace_back(acc.count);
          break;
      }
    }
    out.rows.push_back(std::move(row));
  }
  const auto nkeys = op.keys.size();
  std::sort(out.rows.begin(), out.rows.end(), [nkeys](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(nkeys), b.begin(),
                                        b.begin() + static_cast<std::ptrdiff_t>(nkeys));
  });
  return out;
}

}  // namespace colfuse
