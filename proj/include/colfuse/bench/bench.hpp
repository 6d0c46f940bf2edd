#pragma once

// Benchmark sweeps: every (page size, query, selectivity, mode) configuration
// runs `repetitions` times from a cold device cache. The report has one row per
// run, a mean row per configuration and a fused/staged ratio row.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "colfuse/bench/config.hpp"
#include "colfuse/bench/generator.hpp"
#include "colfuse/bench/queries.hpp"

namespace colfuse {

struct BenchSpec {
  std::vector<std::string> queries;
  std::vector<ExecMode> modes{ExecMode::Fused, ExecMode::Staged};
  std::vector<std::size_t> page_sizes{kDefaultPageSize};
  std::vector<std::optional<double>> selectivities{std::nullopt};
  std::size_t repetitions = 10;
};

struct BenchRow {
  std::string query;
  std::string mode;  // fused, staged, or fused/staged for ratio rows
  std::size_t page_size = 0;
  std::string selectivity;  // "-" when the query's default constants apply
  std::string rep;          // run number, "mean", or "ratio"
  double wall_ms = 0;
  double pass_launches = 0;
  double barrier_count = 0;
  double bytes_read = 0;
  double uncompressed_bytes = 0;
  double intermediate_bytes = 0;
};

const std::string& bench_header();
std::string format_bench_tsv(const std::vector<BenchRow>& rows);
/// Aligned table of the mean and ratio rows.
std::string format_bench_table(const std::vector<BenchRow>& rows);

/// Loads `db` once per page size (file-backed under `device_dir` when given,
/// in memory otherwise) and runs the sweep. Every query must belong to db's benchmark.
std::vector<BenchRow> run_bench(const BenchSpec& spec, const Database& db, const BenchConfig& config,
                                const std::optional<std::filesystem::path>& device_dir = std::nullopt);

}  // namespace colfuse
