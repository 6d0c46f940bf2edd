#include "colfuse/iosim.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <thread>

#include "colfuse/catalog.hpp"
#include "colfuse/error.hpp"

namespace colfuse {

namespace {

// Extents are written once by the loader and then only read.
class MemoryStore final : public DeviceStore {
 public:
  void write(std::uint64_t offset, std::span<const std::uint8_t> bytes) override {
    std::lock_guard lock(mu_);
    extents_[offset].assign(bytes.begin(), bytes.end());
  }

  void read(std::uint64_t offset, std::span<std::uint8_t> out) const override {
    std::lock_guard lock(mu_);
    auto it = extents_.upper_bound(offset);
    if (it == extents_.begin()) throw IoError("read of unwritten offset " + std::to_string(offset));
    --it;
    std::uint64_t rel = offset - it->first;
    if (rel + out.size() > it->second.size()) {
      throw IoError("read of " + std::to_string(out.size()) + " bytes at " + std::to_string(offset) +
                    " crosses a written extent");
    }
    std::memcpy(out.data(), it->second.data() + rel, out.size());
  }

 private:
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::vector<std::uint8_t>> extents_;
};

class FileStore final : public DeviceStore {
 public:
  FileStore(const std::filesystem::path& path, bool truncate) : path_(path) {
    int flags = O_RDWR | O_CREAT | (truncate ? O_TRUNC : 0);
    fd_ = ::open(path.c_str(), flags, 0644);
    if (fd_ < 0) throw IoError("cannot open device " + path.string() + ": " + std::strerror(errno));
  }
  ~FileStore() override {
    if (fd_ >= 0) ::close(fd_);
  }
  FileStore(const FileStore&) = delete;
  FileStore& operator=(const FileStore&) = delete;

  void write(std::uint64_t offset, std::span<const std::uint8_t> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      auto n = ::pwrite(fd_, bytes.data() + done, bytes.size() - done, static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("write to " + path_.string() + " failed: " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  void read(std::uint64_t offset, std::span<std::uint8_t> out) const override {
    std::size_t done = 0;
    while (done < out.size()) {
      auto n = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("read from " + path_.string() + " failed: " + std::strerror(errno));
      }
      if (n == 0) throw IoError("short read from " + path_.string() + " at " + std::to_string(offset));
      done += static_cast<std::size_t>(n);
    }
  }

  void drop_cache() override { ::posix_fadvise(fd_, 0, 0, POSIX_FADV_DONTNEED); }
  void flush() override { ::fsync(fd_); }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace

DeviceArray DeviceArray::in_memory(std::uint32_t device_count, std::uint64_t capacity) {
  if (device_count == 0) throw IoError("device count must be positive");
  DeviceArray a;
  a.capacity_ = capacity;
  for (std::uint32_t d = 0; d < device_count; ++d) a.devices_.push_back(std::make_unique<MemoryStore>());
  return a;
}

DeviceArray DeviceArray::file_backed(const std::filesystem::path& dir, std::uint32_t device_count,
                                     std::uint64_t capacity, bool truncate) {
  if (device_count == 0) throw IoError("device count must be positive");
  std::filesystem::create_directories(dir);
  DeviceArray a;
  a.capacity_ = capacity;
  for (std::uint32_t d = 0; d < device_count; ++d) {
    a.devices_.push_back(std::make_unique<FileStore>(dir / ("device" + std::to_string(d) + ".bin"), truncate));
  }
  return a;
}

void DeviceArray::write(std::uint32_t device, std::uint64_t offset, std::span<const std::uint8_t> bytes) {
  if (device >= devices_.size()) throw IoError("no device " + std::to_string(device));
  if (offset + bytes.size() > capacity_) throw IoError("write past device capacity");
  devices_[device]->write(offset, bytes);
}

void DeviceArray::read(std::uint32_t device, std::uint64_t offset, std::span<std::uint8_t> out) const {
  if (device >= devices_.size()) throw IoError("no device " + std::to_string(device));
  devices_[device]->read(offset, out);
}

std::vector<std::uint8_t> DeviceArray::read(std::uint32_t device, std::uint64_t offset, std::uint32_t length) const {
  std::vector<std::uint8_t> out(length);
  read(device, offset, out);
  return out;
}

void DeviceArray::drop_caches() {
  for (auto& d : devices_) d->drop_cache();
}

void DeviceArray::flush() {
  for (auto& d : devices_) d->flush();
}

PageLocation resolve_page(std::uint64_t page_id, std::uint64_t first_page_id, std::span<const std::uint64_t> offsets,
                          std::span<const std::uint32_t> sizes, std::uint32_t device_count) {
  if (page_id < first_page_id || page_id - first_page_id >= offsets.size() || offsets.size() != sizes.size()) {
    throw IoError("unknown page " + std::to_string(page_id));
  }
  if (device_count == 0) throw IoError("device count must be positive");
  auto ordinal = page_id - first_page_id;
  return {static_cast<std::uint32_t>(page_id % device_count), offsets[ordinal], sizes[ordinal]};
}

PageLocation resolve_page(const Catalog& catalog, std::uint64_t page_id) {
  try {
    const auto& col = catalog.column_of_page(page_id);
    return resolve_page(page_id, col.first_page_id, col.offsets, col.sizes, catalog.device_count);
  } catch (const CatalogError& e) {
    throw IoError(e.what());
  }
}

IoCounters IoStats::snapshot() const {
  return {requests_.load(), bytes_.load(), launches_.load(), barriers_.load()};
}

void IoStats::reset() {
  requests_ = 0;
  bytes_ = 0;
  launches_ = 0;
  barriers_ = 0;
}

std::string format_counters(const IoCounters& c) {
  return "requests_issued " + std::to_string(c.requests_issued) + "\nbytes_read " + std::to_string(c.bytes_read) +
         "\npass_launches " + std::to_string(c.pass_launches) + "\nbarrier_count " +
         std::to_string(c.barrier_count) + "\n";
}

std::string format_counters_kv(const IoCounters& c) {
  return "requests_issued=" + std::to_string(c.requests_issued) + " bytes_read=" + std::to_string(c.bytes_read) +
         " pass_launches=" + std::to_string(c.pass_launches) + " barrier_count=" + std::to_string(c.barrier_count);
}

SimClock steady_sim_clock() {
  auto origin = std::chrono::steady_clock::now();
  return [origin] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - origin);
  };
}

IoSystem::IoSystem(const DeviceArray& devices, LatencyModel latency, SimClock clock)
    : devices_(devices),
      latency_(latency),
      clock_(std::move(clock)),
      device_free_at_(devices.device_count(), std::chrono::nanoseconds(0)),
      device_locks_(new std::mutex[devices.device_count()]) {}

std::chrono::nanoseconds IoSystem::schedule(std::uint32_t device, std::uint32_t length) {
  auto now = clock_();
  std::chrono::nanoseconds transfer{0};
  if (latency_.bytes_per_second > 0) {
    transfer = std::chrono::nanoseconds(static_cast<std::int64_t>(length * 1e9 / latency_.bytes_per_second));
  }
  // Service latency overlaps across requests; transfers share the device's bandwidth.
  std::lock_guard lock(device_locks_[device]);
  auto start = std::max(now, device_free_at_[device]);
  device_free_at_[device] = start + transfer;
  return start + transfer + latency_.service_time;
}

QueuePair::QueuePair(IoSystem& io, std::uint32_t id, std::uint32_t depth) : io_(io), id_(id), depth_(depth) {
  if (depth == 0) throw IoError("queue depth must be positive");
}

std::optional<std::uint64_t> QueuePair::submit(const IoRequest& request) {
  if (full()) return std::nullopt;
  if (request.device >= io_.devices().device_count()) throw IoError("no device " + std::to_string(request.device));
  auto ticket = next_ticket_++;
  submitted_.push_back({ticket, request, io_.schedule(request.device, request.length)});
  io_.stats().add_request();
  return ticket;
}

std::optional<IoCompletion> QueuePair::poll() {
  if (!submitted_.empty()) {
    auto now = io_.now();
    for (auto it = submitted_.begin(); it != submitted_.end();) {
      if (it->ready_at <= now) {
        IoCompletion c{it->ticket, it->request.tag, {}};
        c.data.resize(it->request.length);
        io_.devices().read(it->request.device, it->request.offset, c.data);
        io_.stats().add_bytes(it->request.length);
        completed_.push_back(std::move(c));
        it = submitted_.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (completed_.empty()) return std::nullopt;
  IoCompletion c = std::move(completed_.front());
  completed_.pop_front();
  return c;
}

std::size_t QueueAssignment::queue_pair_count() const {
  std::size_t n = 0;
  for (const auto& w : queues) n += w.size();
  return n;
}

QueueAssignment configure_queues(IoSystem& io, std::size_t worker_count, std::size_t io_worker_count,
                                 std::uint32_t depth) {
  if (io_worker_count == 0) throw IoError("at least one IO worker is required");
  QueueAssignment out;
  out.queues.resize(std::max<std::size_t>(worker_count, 1));
  std::uint32_t id = 0;
  for (auto& w : out.queues) {
    for (std::size_t q = 0; q < io_worker_count; ++q) w.push_back(std::make_unique<QueuePair>(io, id++, depth));
  }
  return out;
}

std::vector<IoCompletion> read_all(std::span<const std::unique_ptr<QueuePair>> queues,
                                   std::span<const IoRequest> requests) {
  if (queues.empty()) throw IoError("no queue pairs");
  std::vector<IoCompletion> out(requests.size());
  // ticket -> request index, per queue
  std::vector<std::vector<std::pair<std::uint64_t, std::size_t>>> owners(queues.size());
  std::size_t next = 0;
  std::size_t done = 0;
  std::size_t lane = 0;
  auto drain = [&](std::size_t q) {
    while (auto c = queues[q]->poll()) {
      auto& own = owners[q];
      auto it = std::find_if(own.begin(), own.end(), [&](const auto& p) { return p.first == c->ticket; });
      out[it->second] = std::move(*c);
      own.erase(it);
      ++done;
    }
  };
  while (done < requests.size()) {
    bool progressed = false;
    while (next < requests.size()) {
      auto q = lane % queues.size();
      auto ticket = queues[q]->submit(requests[next]);
      if (!ticket) break;
      owners[q].emplace_back(*ticket, next);
      ++next;
      ++lane;
      progressed = true;
    }
    std::size_t before = done;
    for (std::size_t q = 0; q < queues.size(); ++q) drain(q);
    if (done == before && !progressed) std::this_thread::yield();
  }
  return out;
}

}  // namespace colfuse
