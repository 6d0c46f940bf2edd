#include "colfuse/codec/fsst.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include "colfuse/error.hpp"

namespace colfuse {

SymbolTable::SymbolTable(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() > kMaxSymbols) throw Error("symbol table holds at most 255 symbols");
  std::unordered_set<std::string_view> seen;
  for (std::size_t code = 0; code < symbols_.size(); ++code) {
    const auto& s = symbols_[code];
    if (s.empty() || s.size() > kMaxSymbolLength) throw Error("symbol length must be 1..8 bytes");
    if (!seen.insert(s).second) throw Error("duplicate symbol in table");
    by_first_byte_[static_cast<std::uint8_t>(s[0])].push_back(static_cast<std::uint8_t>(code));
  }
  for (auto& codes : by_first_byte_) {
    std::stable_sort(codes.begin(), codes.end(),
                     [&](std::uint8_t a, std::uint8_t b) { return symbols_[a].size() > symbols_[b].size(); });
  }
}

std::size_t SymbolTable::serialized_len() const {
  std::size_t n = 1;
  for (const auto& s : symbols_) n += 1 + s.size();
  return n;
}

void SymbolTable::serialize(std::vector<std::uint8_t>& out) const {
  out.push_back(static_cast<std::uint8_t>(symbols_.size()));
  for (const auto& s : symbols_) {
    out.push_back(static_cast<std::uint8_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
}

SymbolTable SymbolTable::deserialize(ByteReader<CorruptPage>& in) {
  auto count = in.get<std::uint8_t>();
  std::vector<std::string> symbols;
  symbols.reserve(count);
  for (unsigned i = 0; i < count; ++i) {
    auto len = in.get<std::uint8_t>();
    if (len == 0 || len > kMaxSymbolLength) throw CorruptPage("symbol table entry has bad length");
    auto bytes = in.get_bytes(len);
    symbols.emplace_back(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }
  try {
    return SymbolTable(std::move(symbols));
  } catch (const CorruptPage&) {
    throw;
  } catch (const Error& e) {
    throw CorruptPage(std::string("symbol table: ") + e.what());
  }
}

std::size_t SymbolTable::longest_match(const char* p, std::size_t remaining, std::uint8_t& code) const {
  for (std::uint8_t c : by_first_byte_[static_cast<std::uint8_t>(*p)]) {
    const auto& s = symbols_[c];
    if (s.size() <= remaining && std::memcmp(s.data(), p, s.size()) == 0) {
      code = c;
      return s.size();
    }
  }
  return 0;
}

namespace {

std::vector<std::string_view> take_sample(std::span<const std::string> records, std::size_t cap) {
  std::vector<std::string_view> sample;
  std::size_t used = 0;
  for (const auto& r : records) {
    if (used >= cap) break;
    std::string_view v = r;
    if (v.size() > cap - used) v = v.substr(0, cap - used);
    sample.push_back(v);
    used += v.size();
  }
  return sample;
}

struct Candidate {
  std::string symbol;
  std::uint64_t gain;
};

}  // namespace

SymbolTable fsst_build_table(std::span<const std::string> records, int iterations, std::size_t sample_cap) {
  auto sample = take_sample(records, sample_cap);
  SymbolTable table;
  for (int iter = 0; iter < iterations; ++iter) {
    std::unordered_map<std::string, std::uint64_t> gain;
    for (std::string_view r : sample) {
      std::size_t pos = 0;
      std::string_view prev;
      while (pos < r.size()) {
        std::uint8_t code = 0;
        std::size_t len = table.longest_match(r.data() + pos, r.size() - pos, code);
        if (len == 0) len = 1;
        std::string_view sym = r.substr(pos, len);
        gain[std::string(sym)] += sym.size();
        if (!prev.empty() && prev.size() + sym.size() <= kMaxSymbolLength) {
          // prev and sym are adjacent in r, so their concatenation is a view too.
          std::string_view joined(prev.data(), prev.size() + sym.size());
          gain[std::string(joined)] += joined.size();
        }
        prev = sym;
        pos += len;
      }
    }

    std::vector<Candidate> ranked;
    ranked.reserve(gain.size());
    for (auto& [sym, g] : gain) ranked.push_back({sym, g});
    std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
      return a.gain != b.gain ? a.gain > b.gain : a.symbol < b.symbol;
    });
    if (ranked.size() > kMaxSymbols) ranked.resize(kMaxSymbols);

    std::vector<std::string> next;
    std::unordered_set<std::string> chosen;
    for (auto& c : ranked) {
      chosen.insert(c.symbol);
      next.push_back(std::move(c.symbol));
    }
    // Symbols superseded by longer ones keep their slot while capacity remains.
    for (const auto& s : table.symbols()) {
      if (next.size() >= kMaxSymbols) break;
      if (!chosen.contains(s)) next.push_back(s);
    }
    table = SymbolTable(std::move(next));
  }
  return table;
}

void fsst_encode_append(const SymbolTable& table, std::string_view record, std::string& out) {
  std::size_t pos = 0;
  while (pos < record.size()) {
    std::uint8_t code = 0;
    std::size_t len = table.empty() ? 0 : table.longest_match(record.data() + pos, record.size() - pos, code);
    if (len > 0) {
      out.push_back(static_cast<char>(code));
      pos += len;
    } else {
      out.push_back(static_cast<char>(kEscapeCode));
      out.push_back(record[pos]);
      ++pos;
    }
  }
}

std::string fsst_encode(const SymbolTable& table, std::string_view record) {
  std::string out;
  out.reserve(record.size());
  fsst_encode_append(table, record, out);
  return out;
}

std::size_t fsst_decoded_length(const SymbolTable& table, std::string_view encoded) {
  std::size_t n = 0;
  const auto& symbols = table.symbols();
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    auto code = static_cast<std::uint8_t>(encoded[i]);
    if (code == kEscapeCode) {
      if (++i == encoded.size()) throw DecodeError("malformed record: trailing escape byte");
      ++n;
    } else if (code < symbols.size()) {
      n += symbols[code].size();
    } else {
      throw DecodeError("malformed record: unknown symbol code " + std::to_string(code));
    }
  }
  return n;
}

void fsst_decode_into(const SymbolTable& table, std::string_view encoded, char* out) {
  const auto& symbols = table.symbols();
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    auto code = static_cast<std::uint8_t>(encoded[i]);
    if (code == kEscapeCode) {
      if (++i == encoded.size()) throw DecodeError("malformed record: trailing escape byte");
      *out++ = encoded[i];
    } else if (code < symbols.size()) {
      const auto& s = symbols[code];
      std::memcpy(out, s.data(), s.size());
      out += s.size();
    } else {
      throw DecodeError("malformed record: unknown symbol code " + std::to_string(code));
    }
  }
}

std::string fsst_decode_record(const SymbolTable& table, std::string_view encoded) {
  std::string out(fsst_decoded_length(table, encoded), '\0');
  fsst_decode_into(table, encoded, out.data());
  return out;
}

}  // namespace colfuse
