#include "colfuse/bench/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "colfuse/error.hpp"

namespace colfuse {

namespace {

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& v, const std::string& where) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      out = static_cast<T>(std::stod(v, &used));
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw Error(where + ": '" + v + "' is not a number");
    }
  } else {
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw Error(where + ": '" + v + "' is not an integer");
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(where + ": '" + v + "' is not a boolean");
}

}  // namespace

BenchConfig parse_config(const std::string& text, BenchConfig c) {
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    std::string where = "config line " + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(where + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key == "workers") {
      c.exec.workers = parse_number<std::size_t>(value, where);
    } else if (key == "io_workers") {
      c.exec.io_workers = parse_number<std::size_t>(value, where);
    } else if (key == "queue_depth") {
      c.exec.queue_depth = parse_number<std::uint32_t>(value, where);
    } else if (key == "scratch_bytes") {
      c.exec.scratch_bytes = parse_number<std::size_t>(value, where);
    } else if (key == "work_memory") {
      c.exec.work_memory = parse_number<std::uint64_t>(value, where);
    } else if (key == "chunk_rows") {
      c.exec.chunk_rows = parse_number<std::size_t>(value, where);
    } else if (key == "latency_us") {
      c.exec.latency.service_time =
          std::chrono::nanoseconds(static_cast<std::int64_t>(parse_number<double>(value, where) * 1000));
    } else if (key == "bandwidth_gbps") {
      c.exec.latency.bytes_per_second = parse_number<double>(value, where) * 1e9;
    } else if (key == "prune") {
      c.exec.prune = parse_bool(value, where);
    } else if (key == "page_size") {
      c.load.page_size = parse_number<std::size_t>(value, where);
    } else if (key == "devices") {
      c.load.device_count = parse_number<std::uint32_t>(value, where);
    } else if (key == "load_workers") {
      c.load.workers = parse_number<std::size_t>(value, where);
    } else if (key == "cardinality_gate") {
      c.load.cardinality_gate = parse_number<std::size_t>(value, where);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(value, where);
    } else if (key == "scale_factor") {
      c.scale_factor = parse_number<double>(value, where);
    } else if (key == "repetitions") {
      c.repetitions = parse_number<std::size_t>(value, where);
    } else {
      throw Error(where + ": unknown key '" + key + "'");
    }
  }
  if (c.exec.workers == 0 || c.exec.io_workers == 0 || c.exec.queue_depth == 0 || c.load.device_count == 0 ||
      c.load.workers == 0) {
    throw Error("worker, queue and device counts must be positive");
  }
  return c;
}

BenchConfig load_config(const std::filesystem::path& path, BenchConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const BenchConfig& c) {
  std::ostringstream out;
  out << "workers=" << c.exec.workers << "\n"
      << "io_workers=" << c.exec.io_workers << "\n"
      << "queue_depth=" << c.exec.queue_depth << "\n"
      << "scratch_bytes=" << c.exec.scratch_bytes << "\n"
      << "work_memory=" << c.exec.work_memory << "\n"
      << "chunk_rows=" << c.exec.chunk_rows << "\n"
      << "latency_us=" << std::chrono::duration<double, std::micro>(c.exec.latency.service_time).count() << "\n"
      << "bandwidth_gbps=" << c.exec.latency.bytes_per_second / 1e9 << "\n"
      << "prune=" << (c.exec.prune ? "true" : "false") << "\n"
      << "page_size=" << c.load.page_size << "\n"
      << "devices=" << c.load.device_count << "\n"
      << "load_workers=" << c.load.workers << "\n"
      << "cardinality_gate=" << c.load.cardinality_gate << "\n"
      << "seed=" << c.seed << "\n"
      << "scale_factor=" << c.scale_factor << "\n"
      << "repetitions=" << c.repetitions << "\n";
  return out.str();
}

}  // namespace colfuse
