#pragma once

// Row-batch kernels shared by both execution modes.

#include <array>
#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "colfuse/exec/hash_table.hpp"
#include "colfuse/exec/plan.hpp"

namespace colfuse {

/// Substring of a '%needle%' pattern; PlanError for any other shape.
std::string parse_like_pattern(const std::string& pattern);

class KmpMatcher {
 public:
  explicit KmpMatcher(std::string needle);
  bool matches(std::string_view haystack) const;
  const std::string& needle() const { return needle_; }

 private:
  std::string needle_;
  std::vector<std::uint32_t> failure_;
};

/// Query-wide string interning. Ids depend on arrival order; contents do not.
class StringPool {
 public:
  std::int64_t intern(std::string_view s);
  std::string lookup(std::int64_t id) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::int64_t> ids_;
  std::deque<std::string> strings_;
};

/// One slot of a batch: integers or (bytes, offsets) strings starting at `base`.
struct ColumnView {
  const std::int64_t* ints = nullptr;
  const char* bytes = nullptr;
  const std::uint32_t* offsets = nullptr;
  std::size_t base = 0;

  bool is_string() const { return ints == nullptr; }
  std::int64_t int_at(std::size_t row) const { return ints[base + row]; }
  std::string_view str_at(std::size_t row) const {
    auto b = offsets[base + row];
    return {bytes + b, offsets[base + row + 1] - b};
  }
};

/// Selected row ordinals of a batch, ascending.
using Selection = std::vector<std::uint32_t>;

std::int64_t eval_expr(const Expr& e, std::span<const ColumnView> slots, std::size_t row);

struct CompiledPredicate {
  Predicate pred;
  std::shared_ptr<const KmpMatcher> kmp;
};
struct CompiledFilter {
  std::vector<CompiledPredicate> predicates;
};

/// Checks slot kinds and pattern shapes.
CompiledFilter compile_filter(const FilterOp& op, const std::vector<bool>& slot_is_string);

/// Keeps the rows of `sel` passing every predicate.
void filter_apply(const CompiledFilter& filter, std::span<const ColumnView> slots, Selection& sel);
/// Bitmap form over rows [0, n).
std::vector<bool> filter_bitmap(const CompiledFilter& filter, std::span<const ColumnView> slots, std::size_t n);

void hash_build_apply(const HashBuildOp& op, std::span<const ColumnView> slots, const Selection& sel,
                      const std::vector<bool>& slot_is_string, HashTable& table, StringPool& pool);

/// Drops rows without a match and writes the matched payload of row r to
/// payload[k][r] for each payload column k.
void hash_probe_apply(const HashProbeOp& op, std::span<const ColumnView> slots, Selection& sel,
                      const HashTable& table, std::span<std::int64_t* const> payload);

inline constexpr std::size_t kMaxGroupKeys = 4;

struct GroupKeyTuple {
  std::array<std::int64_t, kMaxGroupKeys> v{};
  friend bool operator==(const GroupKeyTuple&, const GroupKeyTuple&) = default;
};
struct GroupKeyHash {
  std::size_t operator()(const GroupKeyTuple& k) const noexcept;
};

struct Accumulator {
  std::int64_t sum = 0;
  std::int64_t count = 0;
  std::int64_t min = INT64_MAX;
  std::int64_t max = INT64_MIN;
};

/// Per-worker partial aggregation state.
class AggregateState {
 public:
  explicit AggregateState(const AggregateOp* op = nullptr) : op_(op) {}

  void consume(std::span<const ColumnView> slots, const Selection& sel, const std::vector<bool>& slot_is_string,
               StringPool& pool);
  void merge(const AggregateState& other);
  std::size_t group_count() const { return groups_.size(); }
  QueryResult finalize(const StringPool& pool) const;

 private:
  const AggregateOp* op_;
  std::unordered_map<GroupKeyTuple, std::vector<Accumulator>, GroupKeyHash> groups_;
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_sub(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

}  // namespace colfuse
