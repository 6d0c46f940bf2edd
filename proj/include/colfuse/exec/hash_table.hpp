#pragma once

// Fixed-capacity open-addressing hash table with linear probing. Inserts may
// run concurrently from many workers; probes start after the build completes.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace colfuse {

inline constexpr std::uint64_t kHashMultiplier = 0x9E3779B97F4A7C15ull;
inline constexpr double kMaxLoadFactor = 0.7;

/// Smallest power of two whose 0.7 load holds `bound` keys (at least 2).
std::uint64_t hash_capacity_for(std::uint64_t bound);

class HashTable {
 public:
  HashTable(std::uint32_t table_id, std::uint64_t capacity, std::size_t payload_width);

  std::uint32_t table_id() const { return table_id_; }
  std::uint64_t capacity() const { return capacity_; }
  std::size_t payload_width() const { return payload_width_; }
  std::uint64_t size() const { return size_.load(std::memory_order_acquire); }

  std::uint64_t slot_of(std::int64_t key) const {
    return (static_cast<std::uint64_t>(key) * kHashMultiplier) >> shift_;
  }

  /// Throws HashTableOverflow past the load-factor limit, Error on a duplicate key.
  void insert(std::int64_t key, std::span<const std::int64_t> payload);
  /// Pointer to the payload_width() values stored for key, or nullptr. Never
  /// null on a hit, even with no payload.
  const std::int64_t* probe(std::int64_t key) const;
  std::optional<std::vector<std::int64_t>> find(std::int64_t key) const;

 private:
  enum : std::uint8_t { kEmpty = 0, kWriting = 1, kReady = 2 };

  std::uint32_t table_id_;
  std::uint64_t capacity_;
  std::uint64_t max_size_;
  unsigned shift_;
  std::size_t payload_width_;
  std::unique_ptr<std::atomic<std::uint8_t>[]> state_;
  std::vector<std::int64_t> keys_;
  std::vector<std::int64_t> payloads_;
  std::atomic<std::uint64_t> size_{0};
};

}  // namespace colfuse
