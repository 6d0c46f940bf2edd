#pragma once

// Canned physical plans: TPC-H-shaped Q1, Q3, Q6, a Q13-shaped LIKE query, and
// SSB-shaped Q1.1, Q2.1, Q3.1.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "colfuse/bench/generator.hpp"
#include "colfuse/exec/plan.hpp"

namespace colfuse {

struct QueryParams {
  /// Fraction in (0, 1] of the query's date window; only Q3 and Q6 accept it.
  std::optional<double> selectivity;
};

std::vector<std::string> canned_query_ids();
bool is_canned_query(const std::string& id);
Benchmark benchmark_of(const std::string& id);
bool supports_selectivity(const std::string& id);

/// Throws PlanError for an unknown id or an unsupported selectivity.
QueryPlan canned_query(const std::string& id, const QueryParams& params = {});

// Constants shared by the plans and the oracle.
struct Q1Constants {
  std::int64_t ship_le;
};
struct Q3Constants {
  std::string segment;
  std::int64_t cut_date;  // o_orderdate < cut, l_shipdate > cut
};
struct Q6Constants {
  std::int64_t ship_from;  // inclusive
  std::int64_t ship_to;    // exclusive
  std::int64_t disc_lo, disc_hi;
  std::int64_t qty_lt;
};
struct Q13Constants {
  std::string pattern;
};
struct Ssb11Constants {
  std::int64_t year;
  std::int64_t disc_lo, disc_hi;
  std::int64_t qty_lt;
};
struct Ssb21Constants {
  std::string category;
  std::string region;
};
struct Ssb31Constants {
  std::string region;
  std::int64_t year_lo, year_hi;
};

Q1Constants q1_constants();
Q3Constants q3_constants(const QueryParams& params = {});
Q6Constants q6_constants(const QueryParams& params = {});
Q13Constants q13_constants();
Ssb11Constants ssb11_constants();
Ssb21Constants ssb21_constants();
Ssb31Constants ssb31_constants();

}  // namespace colfuse
