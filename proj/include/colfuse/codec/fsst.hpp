#pragma once

// Static symbol-table string compression.
//
// A table maps codes 0..254 to symbols of 1..8 bytes. Code 255 escapes one
// literal byte. Encoding is greedy longest-match, so every record decodes
// without context from any other record.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colfuse/codec/bytes.hpp"

namespace colfuse {

inline constexpr std::uint8_t kEscapeCode = 255;
inline constexpr std::size_t kMaxSymbols = 255;
inline constexpr std::size_t kMaxSymbolLength = 8;
inline constexpr std::size_t kMaxSerializedTable = 1 + kMaxSymbols * (1 + kMaxSymbolLength);  // 2296
inline constexpr std::size_t kDefaultSampleCap = 16 * 1024;
inline constexpr int kDefaultBuildIterations = 5;

class SymbolTable {
 public:
  SymbolTable() = default;
  /// Throws Error if there are more than 255 symbols, a symbol is empty or
  /// longer than 8 bytes, or a symbol repeats.
  explicit SymbolTable(std::vector<std::string> symbols);

  const std::vector<std::string>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }

  /// Count byte, then per symbol a length byte and the symbol bytes.
  std::size_t serialized_len() const;
  void serialize(std::vector<std::uint8_t>& out) const;
  static SymbolTable deserialize(ByteReader<CorruptPage>& in);

  /// Longest symbol matching at `p`; returns its length (0 if none) and sets `code`.
  std::size_t longest_match(const char* p, std::size_t remaining, std::uint8_t& code) const;

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<std::string> symbols_;
  // Codes grouped by first byte, longest symbol first.
  std::array<std::vector<std::uint8_t>, 256> by_first_byte_;
};

/// Builds a table by iterated greedy gain (occurrences x length) over a sample
/// made of the leading records up to `sample_cap` bytes. Deterministic for a
/// fixed record order.
SymbolTable fsst_build_table(std::span<const std::string> records, int iterations = kDefaultBuildIterations,
                             std::size_t sample_cap = kDefaultSampleCap);

void fsst_encode_append(const SymbolTable& table, std::string_view record, std::string& out);
std::string fsst_encode(const SymbolTable& table, std::string_view record);

/// Length pass: decoded size of an encoded record without producing bytes.
/// Throws DecodeError on a trailing escape or an unknown code.
std::size_t fsst_decoded_length(const SymbolTable& table, std::string_view encoded);
/// Decode pass into a caller-sized buffer of fsst_decoded_length() bytes.
void fsst_decode_into(const SymbolTable& table, std::string_view encoded, char* out);
std::string fsst_decode_record(const SymbolTable& table, std::string_view encoded);

}  // namespace colfuse
