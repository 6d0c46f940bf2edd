#pragma once

// Simulated device array with queue-pair IO. Pages are striped across devices
// round-robin by page id. IO workers submit reads to queue pairs they own and
// poll for completions; a completion becomes visible once the latency model
// says the device would have delivered it.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace colfuse {

struct Catalog;

class DeviceStore {
 public:
  virtual ~DeviceStore() = default;
  virtual void write(std::uint64_t offset, std::span<const std::uint8_t> bytes) = 0;
  /// Reads exactly out.size() bytes; throws IoError on a short read.
  virtual void read(std::uint64_t offset, std::span<std::uint8_t> out) const = 0;
  virtual void drop_cache() {}
  virtual void flush() {}
};

class DeviceArray {
 public:
  static DeviceArray in_memory(std::uint32_t device_count, std::uint64_t capacity = UINT64_MAX);
  /// Devices are dir/device<N>.bin. `truncate` starts them empty.
  static DeviceArray file_backed(const std::filesystem::path& dir, std::uint32_t device_count,
                                 std::uint64_t capacity = UINT64_MAX, bool truncate = false);

  std::uint32_t device_count() const { return static_cast<std::uint32_t>(devices_.size()); }
  std::uint64_t capacity() const { return capacity_; }
  std::uint32_t device_of(std::uint64_t page_id) const {
    return static_cast<std::uint32_t>(page_id % devices_.size());
  }

  void write(std::uint32_t device, std::uint64_t offset, std::span<const std::uint8_t> bytes);
  void read(std::uint32_t device, std::uint64_t offset, std::span<std::uint8_t> out) const;
  std::vector<std::uint8_t> read(std::uint32_t device, std::uint64_t offset, std::uint32_t length) const;
  /// Cold start: drop whatever the backing store caches.
  void drop_caches();
  void flush();

 private:
  std::vector<std::unique_ptr<DeviceStore>> devices_;
  std::uint64_t capacity_ = UINT64_MAX;
};

struct PageLocation {
  std::uint32_t device = 0;
  std::uint64_t offset = 0;
  std::uint32_t length = 0;

  friend bool operator==(const PageLocation&, const PageLocation&) = default;
};

/// page_id -> (device, offset, length) from a column's .offsets/.sizes side-files.
PageLocation resolve_page(std::uint64_t page_id, std::uint64_t first_page_id, std::span<const std::uint64_t> offsets,
                          std::span<const std::uint32_t> sizes, std::uint32_t device_count);
PageLocation resolve_page(const Catalog& catalog, std::uint64_t page_id);

struct LatencyModel {
  std::chrono::nanoseconds service_time{std::chrono::microseconds(50)};
  double bytes_per_second = 3e9;  // per device

  static LatencyModel instant() { return {std::chrono::nanoseconds(0), 0.0}; }
};

struct IoCounters {
  std::uint64_t requests_issued = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t pass_launches = 0;
  std::uint64_t barrier_count = 0;

  friend bool operator==(const IoCounters&, const IoCounters&) = default;
};

class IoStats {
 public:
  void add_request() { requests_.fetch_add(1, std::memory_order_relaxed); }
  void add_bytes(std::uint64_t n) { bytes_.fetch_add(n, std::memory_order_relaxed); }
  void add_pass_launch() { launches_.fetch_add(1, std::memory_order_relaxed); }
  void add_barriers(std::uint64_t n = 1) { barriers_.fetch_add(n, std::memory_order_relaxed); }
  IoCounters snapshot() const;
  void reset();

 private:
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> bytes_{0};
  std::atomic<std::uint64_t> launches_{0};
  std::atomic<std::uint64_t> barriers_{0};
};

/// "requests_issued 12\nbytes_read ..." style flat report.
std::string format_counters(const IoCounters& c);
/// "requests_issued=12 bytes_read=..." single line.
std::string format_counters_kv(const IoCounters& c);

using SimClock = std::function<std::chrono::nanoseconds()>;
SimClock steady_sim_clock();

/// Devices, latency model, per-device transfer timelines and counters shared
/// by every queue pair of one query.
class IoSystem {
 public:
  IoSystem(const DeviceArray& devices, LatencyModel latency, SimClock clock = steady_sim_clock());

  const DeviceArray& devices() const { return devices_; }
  IoStats& stats() { return stats_; }
  const IoStats& stats() const { return stats_; }
  std::chrono::nanoseconds now() const { return clock_(); }

  /// Books the transfer on the device timeline and returns when it completes.
  std::chrono::nanoseconds schedule(std::uint32_t device, std::uint32_t length);

 private:
  const DeviceArray& devices_;
  LatencyModel latency_;
  SimClock clock_;
  std::vector<std::chrono::nanoseconds> device_free_at_;
  std::unique_ptr<std::mutex[]> device_locks_;
  IoStats stats_;
};

struct IoRequest {
  std::uint32_t device = 0;
  std::uint64_t offset = 0;
  std::uint32_t length = 0;
  std::uint64_t tag = 0;  // caller's cookie, typically the page id
};

struct IoCompletion {
  std::uint64_t ticket = 0;
  std::uint64_t tag = 0;
  std::vector<std::uint8_t> data;
};

inline constexpr std::uint32_t kDefaultQueueDepth = 64;

/// Bounded submission/completion queue pair owned by a single IO worker.
class QueuePair {
 public:
  QueuePair(IoSystem& io, std::uint32_t id, std::uint32_t depth = kDefaultQueueDepth);

  std::uint32_t id() const { return id_; }
  std::uint32_t depth() const { return depth_; }
  std::size_t in_flight() const { return submitted_.size() + completed_.size(); }
  bool full() const { return in_flight() >= depth_; }

  /// Ticket, or nullopt when the queue is full (poll, then retry).
  std::optional<std::uint64_t> submit(const IoRequest& request);
  /// One completion whose latency has elapsed, or nullopt. Each ticket is returned once.
  std::optional<IoCompletion> poll();

 private:
  struct Pending {
    std::uint64_t ticket;
    IoRequest request;
    std::chrono::nanoseconds ready_at;
  };

  IoSystem& io_;
  std::uint32_t id_;
  std::uint32_t depth_;
  std::uint64_t next_ticket_ = 0;
  std::deque<Pending> submitted_;
  std::deque<IoCompletion> completed_;
};

/// queues[w] are the queue pairs owned by worker w: one per IO lane, fixed for the pass.
struct QueueAssignment {
  std::vector<std::vector<std::unique_ptr<QueuePair>>> queues;

  std::size_t queue_pair_count() const;
};

QueueAssignment configure_queues(IoSystem& io, std::size_t worker_count, std::size_t io_worker_count,
                                 std::uint32_t depth = kDefaultQueueDepth);

/// Submits every request over `queues` round-robin, polling under backpressure,
/// and returns the completions ordered like `requests`.
std::vector<IoCompletion> read_all(std::span<const std::unique_ptr<QueuePair>> queues,
                                   std::span<const IoRequest> requests);

}  // namespace colfuse
