#include "testutil.hpp"

#include <fstream>
#include <mutex>
#include <random>
#include <tuple>

#include "colfuse/codec/bytes.hpp"

namespace colfuse::testing {

namespace fs = std::filesystem;

const Database& shared_database(Benchmark b, double sf, std::uint64_t seed) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, std::uint64_t>, std::unique_ptr<Database>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{static_cast<int>(b), sf, seed}];
  if (!slot) slot = std::make_unique<Database>(generate(b, sf, seed));
  return *slot;
}

const LoadedDatabase& shared_load(const Database& db, std::size_t page_size, std::uint32_t devices) {
  static std::mutex mu;
  static std::map<std::tuple<const Database*, std::size_t, std::uint32_t>, std::unique_ptr<LoadedDatabase>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{&db, page_size, devices}];
  if (!slot) {
    auto array = DeviceArray::in_memory(devices);
    LoadConfig cfg;
    cfg.page_size = page_size;
    cfg.device_count = devices;
    auto catalog = load_tables(db.schema, db.tables, array, cfg);
    slot = std::make_unique<LoadedDatabase>(LoadedDatabase{std::move(catalog), std::move(array)});
  }
  return *slot;
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path_ = fs::temp_directory_path() / ("colfuse-" + tag + "-" + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<std::uint8_t> reference_pack(const std::vector<std::int64_t>& values, std::int64_t base, unsigned width) {
  std::size_t bits = values.size() * width;
  std::size_t words = (bits + 63) / 64;
  std::vector<std::uint8_t> out(words * 8, 0);
  std::size_t pos = 0;
  for (auto v : values) {
    auto delta = static_cast<std::uint64_t>(v) - static_cast<std::uint64_t>(base);
    for (unsigned b = 0; b < width; ++b, ++pos) {
      if ((delta >> b) & 1) {
        // bit pos of the stream lives in word pos/64 at bit pos%64, stored little-endian
        std::size_t word = pos / 64;
        std::size_t bit = pos % 64;
        out[word * 8 + bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
      }
    }
  }
  return out;
}

unsigned reference_width(std::uint64_t range) {
  unsigned b = 0;
  while (b < 64 && (range >> b) != 0) ++b;
  return b;
}

std::vector<std::uint8_t> golden_fixed_page_bytes() {
  IntValues values;
  for (std::int64_t i = 0; i < 300; ++i) values.push_back((i * 37) % 1000 - 200);
  PageOptions opt;
  opt.page_id = 17;
  opt.column_id = 3;
  opt.page_size = kMinPageSize;
  return serialize_page(encode_fixed_page(values, ColumnType::int32(), 1000, opt));
}

std::vector<std::uint8_t> golden_varlen_page_bytes() {
  std::vector<std::string> records;
  std::vector<std::uint64_t> rids;
  const char* words[] = {"furiously", "special", "requests", "deposits", "carefully", "ironic"};
  for (std::uint64_t i = 0; i < 120; ++i) {
    std::string r = "Customer#" + std::to_string(100000 + i * 7) + " " + words[i % 6] + " " + words[(i * 5) % 6];
    if (i % 17 == 0) r.clear();
    records.push_back(r);
    rids.push_back(500 + i * 3);
  }
  PageOptions opt;
  opt.page_id = 18;
  opt.column_id = 4;
  opt.page_size = kMinPageSize;
  opt.string_block_limit = 256;
  return serialize_page(encode_varlen_page(records, rids, opt));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::map<std::string, std::vector<std::uint8_t>> read_dir_bytes(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out[e.path().filename().string()] = read_file(e.path());
  }
  return out;
}

}  // namespace colfuse::testing
