#pragma once

// key=value configuration for the CLI and benchmark runs. '#' starts a comment.
//
//   workers, io_workers, queue_depth, scratch_bytes, work_memory, chunk_rows,
//   latency_us, bandwidth_gbps, prune, page_size, devices, load_workers,
//   cardinality_gate, seed, scale_factor, repetitions

#include <cstdint>
#include <filesystem>
#include <string>

#include "colfuse/exec/executor.hpp"
#include "colfuse/loader.hpp"

namespace colfuse {

struct BenchConfig {
  ExecOptions exec;
  LoadConfig load;
  std::uint64_t seed = 42;
  double scale_factor = 0.01;
  std::size_t repetitions = 10;
};

/// Applies the settings in `text` on top of `base`. Throws Error naming the
/// line for unknown keys or malformed values.
BenchConfig parse_config(const std::string& text, BenchConfig base = {});
BenchConfig load_config(const std::filesystem::path& path, BenchConfig base = {});
std::string format_config(const BenchConfig& config);

}  // namespace colfuse
