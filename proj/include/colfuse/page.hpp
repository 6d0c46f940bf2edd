#pragma once

// Compressed page formats.
//
// Fixed-length page (integer-backed types):
//   header | mini-block directory | u32 payload_len | packed payload | u32 crc32
// Variable-length page (VARCHAR and CHAR(n > 2)):
//   header | symbol table | string blocks | RID block | u32 crc32
//
// See docs/FORMAT.md for the byte-exact layout.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "colfuse/codec/for_codec.hpp"
#include "colfuse/codec/fsst.hpp"
#include "colfuse/codec/types.hpp"

namespace colfuse {

inline constexpr std::size_t kDefaultPageSize = 1u << 20;
inline constexpr std::size_t kMinPageSize = 64u << 10;
inline constexpr std::size_t kMaxPageSize = 2u << 20;
inline constexpr std::size_t kStringBlockLimit = 9216;
inline constexpr std::size_t kPageHeaderBytes = 29;
inline constexpr std::size_t kMiniBlockMetaBytes = 17;

enum class PageLayout : std::uint8_t { Fixed = 0, Varlen = 1 };

struct PageHeader {
  std::uint64_t page_id = 0;
  std::uint32_t column_id = 0;
  PageLayout layout = PageLayout::Fixed;
  std::uint32_t value_count = 0;
  std::uint32_t miniblock_count = 0;
  std::uint64_t first_rid = 0;

  friend bool operator==(const PageHeader&, const PageHeader&) = default;
};

struct FixedPage {
  PageHeader header;
  std::vector<MiniBlockMeta> metas;
  std::vector<std::uint8_t> payload;
  std::uint32_t footer_checksum = 0;

  friend bool operator==(const FixedPage&, const FixedPage&) = default;
};

/// A run of whole encoded records. `bytes` holds `record_count` u16 end offsets
/// followed by the encoded records; its size is the block's byte_len.
struct StringBlock {
  std::uint32_t record_count = 0;
  std::string bytes;

  friend bool operator==(const StringBlock&, const StringBlock&) = default;
};

struct VarlenPage {
  PageHeader header;
  SymbolTable symbol_table;
  std::vector<StringBlock> string_blocks;
  ForBlocks rid_block;  // 64-bit FOR over the page's RIDs
  std::uint32_t footer_checksum = 0;

  friend bool operator==(const VarlenPage& a, const VarlenPage& b) {
    return a.header == b.header && a.symbol_table == b.symbol_table && a.string_blocks == b.string_blocks &&
           a.rid_block.metas == b.rid_block.metas && a.rid_block.payload == b.rid_block.payload &&
           a.footer_checksum == b.footer_checksum;
  }
};

using Page = std::variant<FixedPage, VarlenPage>;

struct PageOptions {
  std::uint64_t page_id = 0;
  std::uint32_t column_id = 0;
  std::size_t page_size = kDefaultPageSize;
  std::size_t block_values = kDefaultMiniBlockValues;
  std::size_t string_block_limit = kStringBlockLimit;
};

/// Half-open value-index range within a page.
struct ValueRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class PageCheck { Verify, Trusted };

/// Integer-backed types only. CHAR(1..2) arrives as strings and is packed
/// big-endian. Throws WrongLayout for VARCHAR/CHAR(n > 2), PageOverflow when
/// the serialized page would exceed `page_size`.
FixedPage encode_fixed_page(const ColumnValues& values, const ColumnType& type, std::uint64_t first_rid,
                            const PageOptions& options = {});

/// Integer view of the page (DECIMAL widened, CHAR(1..2) still packed).
IntValues decode_fixed_ints(const FixedPage& page, std::optional<ValueRange> range = std::nullopt,
                            PageCheck check = PageCheck::Verify);
void decode_fixed_ints_into(const FixedPage& page, ValueRange range, std::int64_t* out);
/// Typed decode; CHAR(1..2) comes back as strings.
ColumnValues decode_fixed_page(const FixedPage& page, const ColumnType& type,
                               std::optional<ValueRange> range = std::nullopt, PageCheck check = PageCheck::Verify);

/// Records never span string blocks. Throws OversizedRecord when one encoded
/// record cannot fit a block, PageOverflow when the page exceeds `page_size`.
VarlenPage encode_varlen_page(std::span<const std::string> records, std::span<const std::uint64_t> rids,
                              const PageOptions& options = {});

/// Decoded records stored contiguously; record i is bytes[offsets[i], offsets[i+1]).
struct DecodedStrings {
  std::vector<std::uint64_t> rids;
  std::vector<std::uint32_t> offsets;
  std::string bytes;

  std::size_t size() const { return rids.size(); }
  std::string_view at(std::size_t i) const {
    return std::string_view(bytes).substr(offsets[i], offsets[i + 1] - offsets[i]);
  }
};

/// Exclusive prefix sum of record lengths: output start offset of each record.
std::vector<std::uint32_t> record_offsets(std::span<const std::uint32_t> lengths);

/// Two passes per string block: record lengths and output offsets, then bytes.
DecodedStrings decode_varlen_strings(const VarlenPage& page, PageCheck check = PageCheck::Verify);
std::vector<std::pair<std::uint64_t, std::string>> decode_varlen_page(const VarlenPage& page,
                                                                      PageCheck check = PageCheck::Verify);

std::vector<std::uint8_t> serialize_page(const FixedPage& page);
std::vector<std::uint8_t> serialize_page(const VarlenPage& page);
std::size_t serialized_size(const FixedPage& page);
std::size_t serialized_size(const VarlenPage& page);

std::uint32_t compute_checksum(const FixedPage& page);
std::uint32_t compute_checksum(const VarlenPage& page);

/// Parses and checksum-verifies serialized bytes. Throws CorruptPage.
Page parse_page(std::span<const std::uint8_t> bytes);
PageHeader parse_page_header(std::span<const std::uint8_t> bytes);

/// Size of the same rows in the uncompressed layout (header, plain values and
/// RIDs for variable-length pages, footer).
std::size_t uncompressed_page_bytes(const PageHeader& header, const ColumnType& type,
                                    std::size_t varlen_payload_bytes = 0);

}  // namespace colfuse
