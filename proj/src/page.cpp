#include "colfuse/page.hpp"

#include <zlib.h>

#include <algorithm>
#include <functional>

#include "colfuse/error.hpp"

namespace colfuse {

namespace {

void write_header(ByteWriter& w, const PageHeader& h) {
  w.put<std::uint64_t>(h.page_id);
  w.put<std::uint32_t>(h.column_id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(h.layout));
  w.put<std::uint32_t>(h.value_count);
  w.put<std::uint32_t>(h.miniblock_count);
  w.put<std::uint64_t>(h.first_rid);
}

PageHeader read_header(ByteReader<CorruptPage>& r) {
  PageHeader h;
  h.page_id = r.get<std::uint64_t>();
  h.column_id = r.get<std::uint32_t>();
  auto layout = r.get<std::uint8_t>();
  if (layout > 1) throw CorruptPage("unknown page layout " + std::to_string(layout));
  h.layout = static_cast<PageLayout>(layout);
  h.value_count = r.get<std::uint32_t>();
  h.miniblock_count = r.get<std::uint32_t>();
  h.first_rid = r.get<std::uint64_t>();
  return h;
}

void write_metas(ByteWriter& w, std::span<const MiniBlockMeta> metas) {
  for (const auto& m : metas) {
    w.put<std::int64_t>(m.base);
    w.put<std::uint8_t>(m.bit_width);
    w.put<std::uint32_t>(m.byte_offset);
    w.put<std::uint32_t>(m.value_count);
  }
}

std::vector<MiniBlockMeta> read_metas(ByteReader<CorruptPage>& r, std::size_t count) {
  std::vector<MiniBlockMeta> metas(count);
  for (auto& m : metas) {
    m.base = r.get<std::int64_t>();
    m.bit_width = r.get<std::uint8_t>();
    m.byte_offset = r.get<std::uint32_t>();
    m.value_count = r.get<std::uint32_t>();
  }
  return metas;
}

// Directory must be word aligned, ascending, within the payload and add up to `expected` values.
void check_directory(std::span<const MiniBlockMeta> metas, std::size_t payload_len, std::size_t expected) {
  std::size_t total = 0;
  std::size_t next_free = 0;
  for (const auto& m : metas) {
    if (m.bit_width > 64) throw CorruptPage("mini block bit width above 64");
    if (m.byte_offset % 8 != 0) throw CorruptPage("mini block offset not word aligned");
    if (m.byte_offset < next_free) throw CorruptPage("mini block directory out of order");
    next_free = m.byte_offset + for_packed_bytes(m.value_count, m.bit_width);
    if (next_free > payload_len) throw CorruptPage("mini block extends past payload");
    total += m.value_count;
  }
  if (total != expected) throw CorruptPage("mini block value counts do not match header");
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; pages are far below 4 GiB.
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void write_fixed_body(std::vector<std::uint8_t>& out, const FixedPage& p) {
  ByteWriter w(out);
  write_header(w, p.header);
  write_metas(w, p.metas);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.payload.size()));
  w.put_bytes(p.payload);
}

void write_varlen_body(std::vector<std::uint8_t>& out, const VarlenPage& p) {
  ByteWriter w(out);
  write_header(w, p.header);
  p.symbol_table.serialize(out);
  for (const auto& b : p.string_blocks) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(b.bytes.size()));
    w.put<std::uint32_t>(b.record_count);
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(b.bytes.data()), b.bytes.size()});
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.rid_block.metas.size()));
  write_metas(w, p.rid_block.metas);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.rid_block.payload.size()));
  w.put_bytes(p.rid_block.payload);
}

IntValues to_ints(const ColumnValues& values, const ColumnType& type) {
  if (type.kind == TypeKind::Char) {
    const auto* strs = std::get_if<StrValues>(&values);
    if (strs == nullptr) throw Error("CHAR column expects string values");
    IntValues out;
    out.reserve(strs->size());
    for (const auto& s : *strs) out.push_back(pack_short_char(s, type.length));
    return out;
  }
  const auto* ints = std::get_if<IntValues>(&values);
  if (ints == nullptr) throw Error(type.to_string() + " column expects integer values");
  return *ints;
}

FixedPage build_fixed(std::span<const std::int64_t> ints, const ColumnType& type, std::uint64_t first_rid,
                      const PageOptions& o) {
  auto blocks = for_compress(ints, type.width_class(), o.block_values);
  FixedPage page;
  page.header = {o.page_id, o.column_id, PageLayout::Fixed, static_cast<std::uint32_t>(ints.size()),
                 static_cast<std::uint32_t>(blocks.metas.size()), first_rid};
  page.metas = std::move(blocks.metas);
  page.payload = std::move(blocks.payload);
  page.footer_checksum = compute_checksum(page);
  return page;
}

// Largest prefix length for which `size_of(k)` stays within `limit`; size_of is monotone in k.
std::size_t max_fitting_prefix(std::size_t n, std::size_t limit, const std::function<std::size_t(std::size_t)>& size_of) {
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo + 1) / 2;
    if (size_of(mid) <= limit) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

void verify(const FixedPage& page) {
  if (compute_checksum(page) != page.footer_checksum) throw CorruptPage("page checksum mismatch");
}

void verify(const VarlenPage& page) {
  if (compute_checksum(page) != page.footer_checksum) throw CorruptPage("page checksum mismatch");
}

}  // namespace

std::uint32_t compute_checksum(const FixedPage& page) {
  std::vector<std::uint8_t> body;
  body.reserve(serialized_size(page));
  write_fixed_body(body, page);
  return crc_of(body);
}

std::uint32_t compute_checksum(const VarlenPage& page) {
  std::vector<std::uint8_t> body;
  write_varlen_body(body, page);
  return crc_of(body);
}

std::size_t serialized_size(const FixedPage& page) {
  return kPageHeaderBytes + page.metas.size() * kMiniBlockMetaBytes + 4 + page.payload.size() + 4;
}

std::size_t serialized_size(const VarlenPage& page) {
  std::size_t n = kPageHeaderBytes + page.symbol_table.serialized_len();
  for (const auto& b : page.string_blocks) n += 8 + b.bytes.size();
  n += 4 + page.rid_block.metas.size() * kMiniBlockMetaBytes + 4 + page.rid_block.payload.size();
  return n + 4;
}

std::vector<std::uint8_t> serialize_page(const FixedPage& page) {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_size(page));
  write_fixed_body(out, page);
  ByteWriter(out).put<std::uint32_t>(page.footer_checksum);
  return out;
}

std::vector<std::uint8_t> serialize_page(const VarlenPage& page) {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_size(page));
  write_varlen_body(out, page);
  ByteWriter(out).put<std::uint32_t>(page.footer_checksum);
  return out;
}

FixedPage encode_fixed_page(const ColumnValues& values, const ColumnType& type, std::uint64_t first_rid,
                            const PageOptions& options) {
  if (!type.is_integer_backed()) {
    throw WrongLayout(type.to_string() + " is stored in variable-length pages");
  }
  if (value_count(values) == 0) throw Error("refusing to encode an empty page");
  IntValues ints = to_ints(values, type);
  FixedPage page = build_fixed(ints, type, first_rid, options);
  if (serialized_size(page) <= options.page_size) return page;

  std::span<const std::int64_t> all(ints);
  auto fit = max_fitting_prefix(ints.size(), options.page_size, [&](std::size_t k) {
    if (k == 0) return std::size_t{0};
    return serialized_size(build_fixed(all.first(k), type, first_rid, options));
  });
  throw PageOverflow("fixed page exceeds " + std::to_string(options.page_size) + " bytes", fit);
}

void decode_fixed_ints_into(const FixedPage& page, ValueRange range, std::int64_t* out) {
  for_decode_blocks(page.metas, page.payload, range.begin, range.end, out);
}

IntValues decode_fixed_ints(const FixedPage& page, std::optional<ValueRange> range, PageCheck check) {
  if (check == PageCheck::Verify) verify(page);
  ValueRange r = range.value_or(ValueRange{0, page.header.value_count});
  if (r.begin > r.end || r.end > page.header.value_count) throw DecodeError("value range outside page");
  IntValues out(r.end - r.begin);
  decode_fixed_ints_into(page, r, out.data());
  return out;
}

ColumnValues decode_fixed_page(const FixedPage& page, const ColumnType& type, std::optional<ValueRange> range,
                               PageCheck check) {
  if (!type.is_integer_backed()) throw WrongLayout(type.to_string() + " is not a fixed-length type");
  IntValues ints = decode_fixed_ints(page, range, check);
  if (type.kind != TypeKind::Char) return ints;
  StrValues strs;
  strs.reserve(ints.size());
  for (auto v : ints) strs.push_back(unpack_short_char(v, type.length));
  return strs;
}

namespace {

VarlenPage build_varlen(std::span<const std::string> records, std::span<const std::uint64_t> rids,
                        const SymbolTable& table, const PageOptions& o) {
  VarlenPage page;
  page.symbol_table = table;
  StringBlock current;
  std::string encoded_area;
  std::vector<std::uint16_t> ends;
  auto flush = [&] {
    if (ends.empty()) return;
    current.record_count = static_cast<std::uint32_t>(ends.size());
    current.bytes.clear();
    current.bytes.reserve(ends.size() * 2 + encoded_area.size());
    for (auto e : ends) {
      char le[2];
      store_le<std::uint16_t>(reinterpret_cast<std::uint8_t*>(le), e);
      current.bytes.append(le, 2);
    }
    current.bytes += encoded_area;
    page.string_blocks.push_back(std::move(current));
    current = StringBlock{};
    encoded_area.clear();
    ends.clear();
  };

  std::string enc;
  for (std::size_t i = 0; i < records.size(); ++i) {
    enc.clear();
    fsst_encode_append(table, records[i], enc);
    if (enc.size() + 2 > o.string_block_limit) {
      throw OversizedRecord("record " + std::to_string(i) + " encodes to " + std::to_string(enc.size()) +
                                " bytes, above the " + std::to_string(o.string_block_limit) + "-byte block limit",
                            i);
    }
    if ((ends.size() + 1) * 2 + encoded_area.size() + enc.size() > o.string_block_limit) flush();
    encoded_area += enc;
    ends.push_back(static_cast<std::uint16_t>(encoded_area.size()));
  }
  flush();

  std::vector<std::int64_t> rid_values(rids.begin(), rids.end());
  page.rid_block = for_compress(rid_values, 64, o.block_values);
  page.header = {o.page_id,
                 o.column_id,
                 PageLayout::Varlen,
                 static_cast<std::uint32_t>(records.size()),
                 static_cast<std::uint32_t>(page.string_blocks.size()),
                 rids.empty() ? 0 : rids.front()};
  page.footer_checksum = compute_checksum(page);
  return page;
}

}  // namespace

VarlenPage encode_varlen_page(std::span<const std::string> records, std::span<const std::uint64_t> rids,
                              const PageOptions& options) {
  if (records.size() != rids.size()) throw Error("record and RID counts differ");
  if (records.empty()) throw Error("refusing to encode an empty page");
  for (std::size_t i = 1; i < rids.size(); ++i) {
    if (rids[i] <= rids[i - 1]) throw Error("RIDs must be strictly increasing");
  }
  if (rids.back() > static_cast<std::uint64_t>(INT64_MAX)) throw Error("RID above 2^63");

  SymbolTable table = fsst_build_table(records);
  VarlenPage page = build_varlen(records, rids, table, options);
  if (serialized_size(page) <= options.page_size) return page;

  auto fit = max_fitting_prefix(records.size(), options.page_size, [&](std::size_t k) {
    if (k == 0) return std::size_t{0};
    return serialized_size(build_varlen(records.first(k), rids.first(k), table, options));
  });
  throw PageOverflow("variable-length page exceeds " + std::to_string(options.page_size) + " bytes", fit);
}

std::vector<std::uint32_t> record_offsets(std::span<const std::uint32_t> lengths) {
  std::vector<std::uint32_t> out(lengths.size());
  std::uint32_t running = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    out[i] = running;
    running += lengths[i];
  }
  return out;
}

DecodedStrings decode_varlen_strings(const VarlenPage& page, PageCheck check) {
  if (check == PageCheck::Verify) verify(page);
  DecodedStrings out;
  const auto n = page.header.value_count;

  // Split every block into its encoded records.
  std::vector<std::string_view> encoded;
  encoded.reserve(n);
  for (const auto& block : page.string_blocks) {
    std::string_view bytes = block.bytes;
    std::size_t table_len = std::size_t{block.record_count} * 2;
    if (bytes.size() < table_len) throw CorruptPage("string block shorter than its offset table");
    std::string_view area = bytes.substr(table_len);
    std::size_t start = 0;
    for (std::uint32_t i = 0; i < block.record_count; ++i) {
      auto end = load_le<std::uint16_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()) + 2 * i);
      if (end < start || end > area.size()) throw CorruptPage("string block offsets out of order");
      encoded.push_back(area.substr(start, end - start));
      start = end;
    }
    if (start != area.size()) throw CorruptPage("string block has trailing bytes");
  }
  if (encoded.size() != n) throw CorruptPage("string block record counts do not match header");

  try {
    // Pass 1: lengths, then output offsets.
    std::vector<std::uint32_t> lengths(n);
    for (std::size_t i = 0; i < n; ++i) {
      lengths[i] = static_cast<std::uint32_t>(fsst_decoded_length(page.symbol_table, encoded[i]));
    }
    out.offsets = record_offsets(lengths);
    std::uint32_t total = n == 0 ? 0 : out.offsets.back() + lengths.back();
    out.offsets.push_back(total);
    // Pass 2: bytes.
    out.bytes.resize(total);
    for (std::size_t i = 0; i < n; ++i) {
      fsst_decode_into(page.symbol_table, encoded[i], out.bytes.data() + out.offsets[i]);
    }
  } catch (const DecodeError& e) {
    throw CorruptPage(e.what());
  }

  out.rids.resize(n);
  try {
    std::vector<std::int64_t> rids(n);
    for_decode_blocks(page.rid_block.metas, page.rid_block.payload, 0, n, rids.data());
    for (std::size_t i = 0; i < n; ++i) out.rids[i] = static_cast<std::uint64_t>(rids[i]);
  } catch (const DecodeError& e) {
    throw CorruptPage(std::string("RID block: ") + e.what());
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (out.rids[i] <= out.rids[i - 1]) throw CorruptPage("RIDs not strictly increasing");
  }
  return out;
}

std::vector<std::pair<std::uint64_t, std::string>> decode_varlen_page(const VarlenPage& page, PageCheck check) {
  auto decoded = decode_varlen_strings(page, check);
  std::vector<std::pair<std::uint64_t, std::string>> out;
  out.reserve(decoded.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) out.emplace_back(decoded.rids[i], std::string(decoded.at(i)));
  return out;
}

PageHeader parse_page_header(std::span<const std::uint8_t> bytes) {
  ByteReader<CorruptPage> r(bytes);
  return read_header(r);
}

Page parse_page(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPageHeaderBytes + 4) throw CorruptPage("page shorter than header and footer");
  auto body = bytes.first(bytes.size() - 4);
  auto stored = load_le<std::uint32_t>(bytes.data() + bytes.size() - 4);
  if (crc_of(body) != stored) throw CorruptPage("page checksum mismatch");

  ByteReader<CorruptPage> r(body);
  PageHeader header = read_header(r);
  if (header.value_count == 0 || header.miniblock_count == 0) throw CorruptPage("empty page");

  if (header.layout == PageLayout::Fixed) {
    FixedPage page;
    page.header = header;
    page.metas = read_metas(r, header.miniblock_count);
    auto payload_len = r.get<std::uint32_t>();
    auto payload = r.get_bytes(payload_len);
    page.payload.assign(payload.begin(), payload.end());
    if (r.remaining() != 0) throw CorruptPage("trailing bytes after fixed page payload");
    check_directory(page.metas, page.payload.size(), header.value_count);
    page.footer_checksum = stored;
    return page;
  }

  VarlenPage page;
  page.header = header;
  page.symbol_table = SymbolTable::deserialize(r);
  page.string_blocks.resize(header.miniblock_count);
  for (auto& block : page.string_blocks) {
    auto len = r.get<std::uint32_t>();
    block.record_count = r.get<std::uint32_t>();
    auto bytes = r.get_bytes(len);
    block.bytes.assign(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }
  auto meta_count = r.get<std::uint32_t>();
  if (meta_count > header.value_count) throw CorruptPage("RID directory larger than value count");
  page.rid_block.metas = read_metas(r, meta_count);
  auto payload_len = r.get<std::uint32_t>();
  auto payload = r.get_bytes(payload_len);
  page.rid_block.payload.assign(payload.begin(), payload.end());
  if (r.remaining() != 0) throw CorruptPage("trailing bytes after RID block");
  check_directory(page.rid_block.metas, page.rid_block.payload.size(), header.value_count);
  page.footer_checksum = stored;
  return page;
}

std::size_t uncompressed_page_bytes(const PageHeader& header, const ColumnType& type,
                                    std::size_t varlen_payload_bytes) {
  std::size_t n = kPageHeaderBytes + 4;
  if (header.layout == PageLayout::Fixed) return n + std::size_t{header.value_count} * type.fixed_width();
  // Interleaved (length, string, RID) records.
  return n + varlen_payload_bytes + std::size_t{header.value_count} * (4 + 8);
}

}  // namespace colfuse
