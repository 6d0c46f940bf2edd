#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include "colfuse/codec/bytes.hpp"
#include "colfuse/error.hpp"
#include "colfuse/page.hpp"
#include "testutil.hpp"

using namespace colfuse;
namespace fs = std::filesystem;

namespace {

void check_golden(const std::string& name, const std::vector<std::uint8_t>& bytes) {
  fs::path path = fs::path(COLFUSE_GOLDEN_DIR) / name;
  if (std::getenv("COLFUSE_UPDATE_GOLDEN")) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  auto golden = colfuse::testing::read_file(path);
  ASSERT_FALSE(golden.empty()) << path;
  EXPECT_EQ(bytes, golden) << name;
}

}  // namespace

TEST(FixedPage, Int32Example) {
  auto page = encode_fixed_page(IntValues{1, 2, 3}, ColumnType::int32(), 0);
  ASSERT_EQ(page.metas.size(), 1u);
  EXPECT_EQ(page.metas[0].base, 1);
  EXPECT_EQ(page.metas[0].bit_width, 2);
  EXPECT_EQ(page.header.value_count, 3u);
  EXPECT_EQ(page.header.miniblock_count, 1u);
  EXPECT_EQ(decode_fixed_ints(page), (IntValues{1, 2, 3}));
  EXPECT_EQ(decode_fixed_ints(page, ValueRange{1, 2}), (IntValues{2}));
}

TEST(FixedPage, ShortCharExample) {
  auto type = ColumnType::fixed_char(2);
  auto page = encode_fixed_page(StrValues{"AB", "AC"}, type, 0);
  EXPECT_EQ(decode_fixed_ints(page), (IntValues{0x4142, 0x4143}));
  EXPECT_EQ(page.metas[0].bit_width, 1);
  EXPECT_EQ(std::get<StrValues>(decode_fixed_page(page, type)), (StrValues{"AB", "AC"}));
}

TEST(FixedPage, EmptyAndWrongLayoutRefused) {
  EXPECT_THROW(encode_fixed_page(IntValues{}, ColumnType::int32(), 0), Error);
  EXPECT_THROW(encode_fixed_page(StrValues{"abc"}, ColumnType::fixed_char(3), 0), WrongLayout);
  EXPECT_THROW(encode_fixed_page(StrValues{"abc"}, ColumnType::varchar(), 0), WrongLayout);
}

TEST(FixedPage, CorruptPayloadDetected) {
  auto bytes = serialize_page(encode_fixed_page(IntValues{10, 20, 30, 40}, ColumnType::int32(), 5));
  bytes[bytes.size() - 6] ^= 0x01;
  EXPECT_THROW(parse_page(bytes), CorruptPage);
}

TEST(FixedPage, OverflowReportsFittingPrefix) {
  std::mt19937_64 rng(1);
  IntValues v(40000);
  for (auto& x : v) x = static_cast<std::int64_t>(rng() >> 1);
  PageOptions opt;
  opt.page_size = kMinPageSize;
  try {
    encode_fixed_page(v, ColumnType::int64(), 0, opt);
    FAIL() << "expected PageOverflow";
  } catch (const PageOverflow& e) {
    ASSERT_GT(e.max_prefix(), 0u);
    ASSERT_LT(e.max_prefix(), v.size());
    IntValues prefix(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(e.max_prefix()));
    auto page = encode_fixed_page(prefix, ColumnType::int64(), 0, opt);
    EXPECT_LE(serialized_size(page), opt.page_size);
    IntValues more(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(e.max_prefix() + 1));
    EXPECT_THROW(encode_fixed_page(more, ColumnType::int64(), 0, opt), PageOverflow);
  }
}

TEST(FixedPage, RandomRoundtripAllTypes) {
  std::mt19937_64 rng(5);
  const ColumnType types[] = {ColumnType::int32(), ColumnType::int64(), ColumnType::decimal(), ColumnType::date(),
                              ColumnType::fixed_char(1), ColumnType::fixed_char(2)};
  for (int iter = 0; iter < 60; ++iter) {
    const auto& type = types[iter % 6];
    std::size_t n = 1 + rng() % 3000;
    ColumnValues values;
    if (type.kind == TypeKind::Char) {
      StrValues s(n);
      for (auto& x : s) {
        x.resize(type.length);
        for (auto& c : x) c = static_cast<char>('A' + rng() % 26);
      }
      values = s;
    } else {
      IntValues ints(n);
      for (auto& x : ints) {
        x = type.width_class() == 64 ? static_cast<std::int64_t>(rng()) : static_cast<std::int32_t>(rng());
      }
      values = ints;
    }
    auto page = encode_fixed_page(values, type, rng() % 1000);
    auto parsed = std::get<FixedPage>(parse_page(serialize_page(page)));
    ASSERT_EQ(parsed, page);
    ASSERT_EQ(decode_fixed_page(parsed, type), values);
  }
}

TEST(FixedPage, Int32AndInt64PathsDecodeAlike) {
  IntValues v{-5, 0, 7, 1 << 20, -(1 << 20), 3};
  auto a = encode_fixed_page(v, ColumnType::int32(), 0);
  auto b = encode_fixed_page(v, ColumnType::int64(), 0);
  EXPECT_EQ(decode_fixed_ints(a), decode_fixed_ints(b));
}

TEST(VarlenPage, RepeatedStringCompresses) {
  std::vector<std::string> records(100, "AUTOMOBILE");
  std::vector<std::uint64_t> rids(100);
  for (std::uint64_t i = 0; i < 100; ++i) rids[i] = i;
  auto page = encode_varlen_page(records, rids);
  EXPECT_EQ(page.string_blocks.size(), 1u);
  EXPECT_LT(page.string_blocks[0].bytes.size(), 100u * 10u);
  auto back = decode_varlen_page(page);
  ASSERT_EQ(back.size(), 100u);
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(back[i], std::make_pair(i, std::string("AUTOMOBILE")));
}

TEST(VarlenPage, SingleRecord) {
  std::vector<std::string> records{"x"};
  std::vector<std::uint64_t> rids{7};
  auto page = encode_varlen_page(records, rids);
  EXPECT_EQ(page.string_blocks.size(), 1u);
  auto strings = decode_varlen_strings(page);
  EXPECT_EQ(strings.rids, (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(strings.offsets.front(), 0u);
  EXPECT_EQ(strings.at(0), "x");
}

TEST(VarlenPage, OversizedRecordRefused) {
  std::mt19937_64 rng(9);
  std::string big(20 * 1024, '\0');
  for (auto& c : big) c = static_cast<char>(rng() & 0xff);
  std::vector<std::string> records{"ok", big};
  std::vector<std::uint64_t> rids{0, 1};
  try {
    encode_varlen_page(records, rids);
    FAIL() << "expected OversizedRecord";
  } catch (const OversizedRecord& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(VarlenPage, RidsMustIncrease) {
  std::vector<std::string> records{"a", "b"};
  std::vector<std::uint64_t> rids{4, 4};
  EXPECT_THROW(encode_varlen_page(records, rids), Error);
}

TEST(VarlenPage, RecordOffsetsArePrefixSums) {
  std::vector<std::uint32_t> lengths{4, 2, 5};
  EXPECT_EQ(record_offsets(lengths), (std::vector<std::uint32_t>{0, 4, 6}));
  std::vector<std::uint32_t> one{9};
  EXPECT_EQ(record_offsets(one), (std::vector<std::uint32_t>{0}));
}

TEST(VarlenPage, RandomRoundtripBlocksRespectLimit) {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 20; ++iter) {
    std::size_t n = 1 + rng() % 2000;
    std::vector<std::string> records(n);
    std::vector<std::uint64_t> rids(n);
    std::uint64_t rid = rng() % 100;
    for (std::size_t i = 0; i < n; ++i) {
      records[i].resize(rng() % 120);
      for (auto& c : records[i]) c = rng() % 3 ? static_cast<char>('a' + rng() % 6) : static_cast<char>(rng() & 0xff);
      rids[i] = rid;
      rid += 1 + rng() % 3;
    }
    PageOptions opt;
    opt.page_size = kMaxPageSize;
    auto page = encode_varlen_page(records, rids, opt);
    std::uint32_t total = 0;
    for (const auto& b : page.string_blocks) {
      ASSERT_LE(b.bytes.size(), kStringBlockLimit);
      total += b.record_count;
    }
    ASSERT_EQ(total, page.header.value_count);
    auto bytes = serialize_page(page);
    ASSERT_LE(bytes.size(), opt.page_size);
    auto parsed = std::get<VarlenPage>(parse_page(bytes));
    ASSERT_EQ(parsed, page);
    auto back = decode_varlen_page(parsed);
    ASSERT_EQ(back.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(back[i].first, rids[i]);
      ASSERT_EQ(back[i].second, records[i]);
    }
  }
}

TEST(PageFormat, HeaderFieldOffsets) {
  auto bytes = colfuse::testing::golden_fixed_page_bytes();
  EXPECT_EQ(load_le<std::uint64_t>(bytes.data()), 17u);
  EXPECT_EQ(load_le<std::uint32_t>(bytes.data() + 8), 3u);
  EXPECT_EQ(bytes[12], 0);
  EXPECT_EQ(load_le<std::uint32_t>(bytes.data() + 13), 300u);
  EXPECT_EQ(load_le<std::uint32_t>(bytes.data() + 17), 3u);
  EXPECT_EQ(load_le<std::uint64_t>(bytes.data() + 21), 1000u);
  auto header = parse_page_header(bytes);
  EXPECT_EQ(header.first_rid, 1000u);
  EXPECT_EQ(header.layout, PageLayout::Fixed);
}

TEST(PageFormat, GoldenFixedPage) { check_golden("fixed_page.bin", colfuse::testing::golden_fixed_page_bytes()); }

TEST(PageFormat, GoldenVarlenPage) { check_golden("varlen_page.bin", colfuse::testing::golden_varlen_page_bytes()); }

TEST(PageFormat, GoldenPagesReparse) {
  auto fixed = colfuse::testing::golden_fixed_page_bytes();
  EXPECT_EQ(serialize_page(std::get<FixedPage>(parse_page(fixed))), fixed);
  auto varlen = colfuse::testing::golden_varlen_page_bytes();
  auto page = std::get<VarlenPage>(parse_page(varlen));
  EXPECT_GT(page.string_blocks.size(), 1u);
  EXPECT_EQ(serialize_page(page), varlen);
}

TEST(PageFormat, UncompressedSizeModel) {
  auto page = encode_fixed_page(IntValues{1, 2, 3}, ColumnType::int32(), 0);
  EXPECT_EQ(uncompressed_page_bytes(page.header, ColumnType::int32()), kPageHeaderBytes + 3 * 4 + 4);
}
