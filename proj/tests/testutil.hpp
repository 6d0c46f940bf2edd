#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "colfuse/bench/generator.hpp"
#include "colfuse/catalog.hpp"
#include "colfuse/iosim.hpp"
#include "colfuse/loader.hpp"
#include "colfuse/page.hpp"

namespace colfuse::testing {

/// Generated once per (benchmark, scale factor, seed) and shared by a test binary.
const Database& shared_database(Benchmark b, double sf, std::uint64_t seed = 42);

struct LoadedDatabase {
  Catalog catalog;
  DeviceArray devices;
};

/// In-memory load of `db`; cached per (db address, page size, device count).
const LoadedDatabase& shared_load(const Database& db, std::size_t page_size = kDefaultPageSize,
                                  std::uint32_t devices = 2);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Bit-at-a-time reference packer: LSB-first within little-endian 64-bit
/// words, each block word aligned.
std::vector<std::uint8_t> reference_pack(const std::vector<std::int64_t>& values, std::int64_t base, unsigned width);
/// Smallest b with range < 2^b, found by counting.
unsigned reference_width(std::uint64_t range);

/// The fixed inputs behind tests/golden/*.bin.
std::vector<std::uint8_t> golden_fixed_page_bytes();
std::vector<std::uint8_t> golden_varlen_page_bytes();
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Every file in `dir` (non-recursive) mapped to its bytes.
std::map<std::string, std::vector<std::uint8_t>> read_dir_bytes(const std::filesystem::path& dir);

}  // namespace colfuse::testing
