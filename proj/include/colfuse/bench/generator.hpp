#pragma once

// Deterministic TPC-H-shaped and SSB-shaped data generator. Shapes only: key
// sparsity, date ranges and low-cardinality strings follow the benchmarks,
// exact value streams do not.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "colfuse/schema.hpp"

namespace colfuse {

enum class Benchmark : std::uint8_t { Tpch, Ssb };
const char* to_string(Benchmark b);
Benchmark parse_benchmark(const std::string& text);

/// mt19937_64 with an explicit, platform-independent integer mapping.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n), n > 0, by rejection.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

Schema tpch_schema();
Schema ssb_schema();
Schema benchmark_schema(Benchmark b);

struct Database {
  Schema schema;
  std::vector<TableData> tables;  // schema order

  const TableData& table(const std::string& name) const;
};

inline constexpr double kMinScaleFactor = 0.001;
inline constexpr double kMaxScaleFactor = 1.0;

Database generate(Benchmark b, double scale_factor, std::uint64_t seed);

/// schema.json plus <table>.tbl per table.
void write_database(const Database& db, const std::filesystem::path& dir);
Database read_database(const std::filesystem::path& dir);

extern const char* const kNations[25];
extern const char* const kRegions[5];
int region_of_nation(int nation);

}  // namespace colfuse
