#include "colfuse/bench/bench.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "colfuse/error.hpp"

namespace colfuse {

namespace {

std::string num(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4f", v);
  }
  return buf;
}

std::vector<std::string> fields(const BenchRow& r) {
  return {r.query,        r.mode,          std::to_string(r.page_size), r.selectivity,
          r.rep,          num(r.wall_ms),  num(r.pass_launches),        num(r.barrier_count),
          num(r.bytes_read), num(r.uncompressed_bytes), num(r.intermediate_bytes)};
}

double ratio(double a, double b) { return b == 0 ? (a == 0 ? 1.0 : INFINITY) : a / b; }

}  // namespace

const std::string& bench_header() {
  static const std::string h =
      "query\tmode\tpage_size\tselectivity\trep\twall_ms\tpass_launches\tbarrier_count\tbytes_read\t"
      "uncompressed_bytes\tintermediate_bytes";
  return h;
}

std::string format_bench_tsv(const std::vector<BenchRow>& rows) {
  std::string out = bench_header() + "\n";
  for (const auto& r : rows) {
    auto f = fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) out += f[i] + (i + 1 < f.size() ? "\t" : "\n");
  }
  return out;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head;
  {
    std::string h = bench_header();
    std::size_t pos = 0;
    while (true) {
      auto tab = h.find('\t', pos);
      head.push_back(h.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
  }
  cells.push_back(head);
  for (const auto& r : rows) {
    if (r.rep == "mean" || r.rep == "ratio") cells.push_back(fields(r));
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

std::vector<BenchRow> run_bench(const BenchSpec& spec, const Database& db, const BenchConfig& config,
                                const std::optional<std::filesystem::path>& device_dir) {
  if (spec.queries.empty()) throw PlanError("no queries to benchmark");
  if (spec.repetitions == 0) throw PlanError("repetitions must be positive");
  for (const auto& q : spec.queries) {
    if (!is_canned_query(q)) throw PlanError("unknown query '" + q + "'");
    if (db.schema.tables.empty() || benchmark_schema(benchmark_of(q)).tables.front().name != db.schema.tables.front().name) {
      throw PlanError("query " + q + " does not run on this database");
    }
  }
  std::vector<BenchRow> rows;
  for (auto page_size : spec.page_sizes) {
    LoadConfig load = config.load;
    load.page_size = page_size;
    auto devices = device_dir ? DeviceArray::file_backed(*device_dir / ("page" + std::to_string(page_size)),
                                                         load.device_count, UINT64_MAX, true)
                              : DeviceArray::in_memory(load.device_count);
    auto catalog = load_tables(db.schema, db.tables, devices, load);
    for (const auto& q : spec.queries) {
      for (const auto& sel : spec.selectivities) {
        if (sel && !supports_selectivity(q)) continue;
        QueryParams params{sel};
        auto plan = canned_query(q, params);
        std::string sel_text = "-";
        if (sel) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%g", *sel);
          sel_text = buf;
        }
        std::map<ExecMode, BenchRow> means;
        for (auto mode : spec.modes) {
          ExecOptions opt = config.exec;
          opt.mode = mode;
          BenchRow mean{q, to_string(mode), page_size, sel_text, "mean"};
          for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
            devices.drop_caches();
            auto run = run_query(plan, catalog, devices, opt);
            const auto& t = run.trace;
            BenchRow row{q,
                         to_string(mode),
                         page_size,
                         sel_text,
                         std::to_string(rep + 1),
                         t.wall_ms,
                         static_cast<double>(t.pass_launches()),
                         static_cast<double>(t.barrier_count()),
                         static_cast<double>(t.bytes_read()),
                         static_cast<double>(t.uncompressed_bytes()),
                         static_cast<double>(t.intermediate_bytes())};
            rows.push_back(row);
            mean.wall_ms += row.wall_ms;
            mean.pass_launches += row.pass_launches;
            mean.barrier_count += row.barrier_count;
            mean.bytes_read += row.bytes_read;
            mean.uncompressed_bytes += row.uncompressed_bytes;
            mean.intermediate_bytes += row.intermediate_bytes;
          }
          auto n = static_cast<double>(spec.repetitions);
          mean.wall_ms /= n;
          mean.pass_launches /= n;
          mean.barrier_count /= n;
          mean.bytes_read /= n;
          mean.uncompressed_bytes /= n;
          mean.intermediate_bytes /= n;
          rows.push_back(mean);
          means[mode] = mean;
        }
        if (means.count(ExecMode::Fused) && means.count(ExecMode::Staged)) {
          const auto& f = means[ExecMode::Fused];
          const auto& s = means[ExecMode::Staged];
          rows.push_back({q, "fused/staged", page_size, sel_text, "ratio", ratio(f.wall_ms, s.wall_ms),
                          ratio(f.pass_launches, s.pass_launches), ratio(f.barrier_count, s.barrier_count),
                          ratio(f.bytes_read, s.bytes_read), ratio(f.uncompressed_bytes, s.uncompressed_bytes),
                          ratio(f.intermediate_bytes, s.intermediate_bytes)});
        }
      }
    }
  }
  return rows;
}

}  // namespace colfuse
