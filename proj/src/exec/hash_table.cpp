#include "colfuse/exec/hash_table.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "colfuse/error.hpp"

namespace colfuse {

std::uint64_t hash_capacity_for(std::uint64_t bound) {
  auto need = static_cast<std::uint64_t>(std::ceil(static_cast<double>(bound) / kMaxLoadFactor));
  return std::bit_ceil(std::max<std::uint64_t>(need + 1, 2));
}

HashTable::HashTable(std::uint32_t table_id, std::uint64_t capacity, std::size_t payload_width)
    : table_id_(table_id),
      capacity_(capacity),
      max_size_(static_cast<std::uint64_t>(static_cast<double>(capacity) * kMaxLoadFactor)),
      shift_(64 - static_cast<unsigned>(std::countr_zero(capacity))),
      payload_width_(payload_width),
      state_(new std::atomic<std::uint8_t>[capacity]),
      keys_(capacity),
      payloads_(capacity * payload_width) {
  if (capacity < 2 || !std::has_single_bit(capacity)) {
    throw Error("hash table capacity must be a power of two >= 2");
  }
  for (std::uint64_t i = 0; i < capacity; ++i) state_[i].store(kEmpty, std::memory_order_relaxed);
}

void HashTable::insert(std::int64_t key, std::span<const std::int64_t> payload) {
  if (payload.size() != payload_width_) throw Error("payload width mismatch");
  if (size_.fetch_add(1, std::memory_order_acq_rel) + 1 > max_size_) {
    throw HashTableOverflow(table_id_);
  }
  const std::uint64_t mask = capacity_ - 1;
  std::uint64_t slot = slot_of(key);
  for (std::uint64_t step = 0; step < capacity_; ++step, slot = (slot + 1) & mask) {
    auto& st = state_[slot];
    std::uint8_t expected = kEmpty;
    if (st.compare_exchange_strong(expected, kWriting, std::memory_order_acq_rel)) {
      keys_[slot] = key;
      std::copy(payload.begin(), payload.end(), payloads_.begin() + static_cast<std::ptrdiff_t>(slot * payload_width_));
      st.store(kReady, std::memory_order_release);
      return;
    }
    while (expected == kWriting) expected = st.load(std::memory_order_acquire);
    if (keys_[slot] == key) {
      size_.fetch_sub(1, std::memory_order_acq_rel);
      throw Error("duplicate key " + std::to_string(key) + " in hash table " + std::to_string(table_id_));
    }
  }
  throw HashTableOverflow(table_id_);
}

const std::int64_t* HashTable::probe(std::int64_t key) const {
  const std::uint64_t mask = capacity_ - 1;
  std::uint64_t slot = slot_of(key);
  for (std::uint64_t step = 0; step < capacity_; ++step, slot = (slot + 1) & mask) {
    if (state_[slot].load(std::memory_order_acquire) != kReady) return nullptr;
    if (keys_[slot] == key) {
      return payload_width_ == 0 ? &keys_[slot] : payloads_.data() + slot * payload_width_;
    }
  }
  return nullptr;
}

std::optional<std::vector<std::int64_t>> HashTable::find(std::int64_t key) const {
  const auto* p = probe(key);
  if (!p) return std::nullopt;
  return std::vector<std::int64_t>(p, p + payload_width_);
}

}  // namespace colfuse
