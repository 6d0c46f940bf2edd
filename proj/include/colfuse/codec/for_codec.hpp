#pragma once

// Frame-of-reference bit packing over mini blocks.
//
// Each block stores its minimum as a signed 64-bit base and packs the unsigned
// deltas (value - base) with the smallest width b such that max - min < 2^b.
// Deltas are packed LSB-first into little-endian 64-bit words; every block's
// payload starts on a word boundary. A value may straddle one word boundary,
// so decoding reads a 128-bit window of two adjacent words.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "colfuse/codec/bytes.hpp"
#include "colfuse/codec/types.hpp"
#include "colfuse/error.hpp"

namespace colfuse {

inline constexpr std::size_t kDefaultMiniBlockValues = 128;

struct MiniBlockMeta {
  std::int64_t base = 0;
  std::uint8_t bit_width = 0;
  std::uint32_t byte_offset = 0;  // into the page's packed payload; multiple of 8
  std::uint32_t value_count = 0;

  friend bool operator==(const MiniBlockMeta&, const MiniBlockMeta&) = default;
};

struct ForBlocks {
  std::vector<MiniBlockMeta> metas;
  std::vector<std::uint8_t> payload;
};

/// Bytes occupied by a block of `count` values at width `bit_width`, word padded.
constexpr std::size_t for_packed_bytes(std::size_t count, unsigned bit_width) {
  return (count * bit_width + 63) / 64 * 8;
}

namespace detail {

inline bool fits_width(std::int64_t v, int width_class) {
  return width_class == 64 ||
         (v >= std::numeric_limits<std::int32_t>::min() && v <= std::numeric_limits<std::int32_t>::max());
}

inline std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace detail

/// Packs one block of values with a known base and bit width, appending to `out`.
inline void for_pack_block(std::span<const std::int64_t> values, std::int64_t base, unsigned bit_width,
                           std::vector<std::uint8_t>& out) {
  std::size_t nbytes = for_packed_bytes(values.size(), bit_width);
  std::vector<std::uint64_t> words(nbytes / 8, 0);
  for (std::size_t i = 0; i < values.size() && bit_width > 0; ++i) {
    std::uint64_t delta = static_cast<std::uint64_t>(values[i]) - static_cast<std::uint64_t>(base);
    std::size_t bit = i * bit_width;
    std::size_t w = bit >> 6;
    unsigned shift = bit & 63;
    words[w] |= delta << shift;
    if (shift + bit_width > 64) words[w + 1] |= delta >> (64 - shift);
  }
  std::size_t at = out.size();
  out.resize(at + nbytes);
  for (std::size_t w = 0; w < words.size(); ++w) store_le<std::uint64_t>(out.data() + at + w * 8, words[w]);
}

/// Splits `values` into consecutive blocks of at most `block_size` values and packs them.
/// Throws EncodeError naming the first value that does not fit `width_class` (32 or 64).
inline ForBlocks for_compress(std::span<const std::int64_t> values, int width_class,
                              std::size_t block_size = kDefaultMiniBlockValues) {
  if (width_class != 32 && width_class != 64) throw Error("width class must be 32 or 64");
  if (block_size == 0) throw Error("block size must be positive");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!detail::fits_width(values[i], width_class)) throw EncodeError("value outside 32-bit range", i);
  }
  ForBlocks out;
  for (std::size_t start = 0; start < values.size(); start += block_size) {
    auto block = values.subspan(start, std::min(block_size, values.size() - start));
    auto [lo, hi] = std::minmax_element(block.begin(), block.end());
    std::uint64_t range = static_cast<std::uint64_t>(*hi) - static_cast<std::uint64_t>(*lo);
    MiniBlockMeta meta;
    meta.base = *lo;
    meta.bit_width = static_cast<std::uint8_t>(std::bit_width(range));
    meta.byte_offset = static_cast<std::uint32_t>(out.payload.size());
    meta.value_count = static_cast<std::uint32_t>(block.size());
    for_pack_block(block, meta.base, meta.bit_width, out.payload);
    out.metas.push_back(meta);
  }
  return out;
}

/// Decodes values [begin, end) of one block into `out`. Any sub-range decodes on its own.
template <typename T>
void for_decode_range(const MiniBlockMeta& meta, std::span<const std::uint8_t> payload, std::size_t begin,
                      std::size_t end, T* out) {
  static_assert(std::is_same_v<T, std::int32_t> || std::is_same_v<T, std::int64_t>);
  if (begin > end || end > meta.value_count) throw DecodeError("decode range outside mini block");
  if (meta.bit_width > 64) throw DecodeError("bit width above 64");
  std::size_t need = for_packed_bytes(meta.value_count, meta.bit_width);
  if (payload.size() < meta.byte_offset || payload.size() - meta.byte_offset < need) {
    throw DecodeError("truncated mini block payload: need " + std::to_string(need) + " bytes at offset " +
                      std::to_string(meta.byte_offset));
  }
  const std::uint8_t* words = payload.data() + meta.byte_offset;
  const unsigned b = meta.bit_width;
  const std::uint64_t mask = detail::low_mask(b);
  const auto ubase = static_cast<std::uint64_t>(meta.base);
  for (std::size_t i = begin; i < end; ++i) {
    std::uint64_t delta = 0;
    if (b > 0) {
      std::size_t bit = i * b;
      std::size_t w = bit >> 6;
      unsigned shift = bit & 63;
      unsigned __int128 window = load_le<std::uint64_t>(words + w * 8);
      if (shift + b > 64) window |= static_cast<unsigned __int128>(load_le<std::uint64_t>(words + w * 8 + 8)) << 64;
      delta = static_cast<std::uint64_t>(window >> shift) & mask;
    }
    auto v = static_cast<std::int64_t>(ubase + delta);
    if constexpr (std::is_same_v<T, std::int32_t>) {
      if (!detail::fits_width(v, 32)) throw DecodeError("decoded value does not fit 32 bits");
    }
    out[i - begin] = static_cast<T>(v);
  }
}

/// Full decode of one block, widened to int64 regardless of `out_width`.
/// `out_width` 32 additionally rejects values that do not fit 32 bits.
inline IntValues for_decompress(const MiniBlockMeta& meta, std::span<const std::uint8_t> payload,
                                int out_width = 64) {
  IntValues out(meta.value_count);
  if (out_width == 32) {
    std::vector<std::int32_t> narrow(meta.value_count);
    for_decode_range(meta, payload, 0, meta.value_count, narrow.data());
    std::copy(narrow.begin(), narrow.end(), out.begin());
  } else {
    for_decode_range(meta, payload, 0, meta.value_count, out.data());
  }
  return out;
}

/// Decodes values [begin, end) counted across a sequence of blocks.
inline void for_decode_blocks(std::span<const MiniBlockMeta> metas, std::span<const std::uint8_t> payload,
                              std::size_t begin, std::size_t end, std::int64_t* out) {
  std::size_t block_start = 0;
  for (const auto& m : metas) {
    std::size_t block_end = block_start + m.value_count;
    if (block_end > begin && block_start < end) {
      std::size_t lo = std::max(begin, block_start);
      std::size_t hi = std::min(end, block_end);
      for_decode_range(m, payload, lo - block_start, hi - block_start, out + (lo - begin));
    }
    if (block_end >= end) return;
    block_start = block_end;
  }
  if (block_start < end) throw DecodeError("decode range exceeds mini block values");
}

}  // namespace colfuse
