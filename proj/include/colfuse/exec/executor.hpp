#pragma once

// Runs query plans in FUSED mode (one pass per pipeline; each worker takes a
// page group through IO, decode and the operator chain) or STAGED mode
// (separate IO, per-column decompression and per-operator passes over
// materialized intermediates).

#include <cstdint>
#include <string>
#include <vector>

#include "colfuse/catalog.hpp"
#include "colfuse/exec/operators.hpp"
#include "colfuse/exec/plan.hpp"
#include "colfuse/iosim.hpp"
#include "colfuse/parallel.hpp"

namespace colfuse {

inline constexpr std::size_t kDefaultScratchBytes = 192u << 10;
inline constexpr std::uint64_t kDefaultWorkMemory = 1ull << 30;

struct ExecOptions {
  ExecMode mode = ExecMode::Fused;
  std::size_t workers = default_worker_count();
  std::size_t io_workers = 1;  // queue pairs per worker
  std::uint32_t queue_depth = kDefaultQueueDepth;
  std::size_t scratch_bytes = kDefaultScratchBytes;
  std::uint64_t work_memory = kDefaultWorkMemory;  // STAGED intermediates
  std::size_t chunk_rows = 2048;
  bool prune = true;
  LatencyModel latency;
};

struct PipelineTrace {
  std::size_t pipeline = 0;
  ExecMode mode = ExecMode::Fused;
  std::uint64_t pass_launches = 0;
  std::uint64_t barrier_count = 0;
  std::uint64_t intermediate_bytes = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t uncompressed_bytes = 0;  // same pages in the uncompressed layout
  std::uint64_t pages_read = 0;
  std::uint64_t page_groups = 0;
  std::uint64_t scratch_spills = 0;  // page groups that outgrew the worker scratch
  std::uint64_t rows_scanned = 0;
  double wall_ms = 0;
};

struct QueryTrace {
  std::string query;
  ExecMode mode = ExecMode::Fused;
  std::uint64_t prune_launches = 0;
  std::vector<PipelineTrace> pipelines;
  IoCounters io;
  double wall_ms = 0;

  std::uint64_t pass_launches() const;
  std::uint64_t barrier_count() const;
  std::uint64_t intermediate_bytes() const;
  std::uint64_t bytes_read() const;
  std::uint64_t uncompressed_bytes() const;
};

struct QueryRun {
  QueryResult result;
  QueryTrace trace;
};

/// Pruned page lists of a pipeline's columns and the RID set they all cover.
struct PrunedInput {
  std::vector<PrunedPageList> lists;  // plan column order
  IntervalSet rids;
};

/// Zone-map pruning plus page-list intersection. With `prune` false every page
/// of every column is kept.
PrunedInput prune_pipeline(const PipelinePlan& plan, const TableCatalog& table, bool prune = true);

/// Checks slot references, operator placement and hash-table wiring.
void validate_plan(const QueryPlan& plan, const Catalog& catalog);

QueryRun run_query(const QueryPlan& plan, const Catalog& catalog, const DeviceArray& devices,
                   const ExecOptions& options = {});

/// Header line plus one tab-separated line per pipeline.
std::string format_trace(const QueryTrace& trace);

}  // namespace colfuse
