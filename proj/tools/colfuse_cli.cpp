// colfuse: generate, load, query, bench and verify.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "colfuse/bench/bench.hpp"
#include "colfuse/bench/config.hpp"
#include "colfuse/bench/generator.hpp"
#include "colfuse/bench/oracle.hpp"
#include "colfuse/bench/queries.hpp"
#include "colfuse/error.hpp"
#include "colfuse/exec/executor.hpp"
#include "colfuse/loader.hpp"

namespace fs = std::filesystem;
using namespace colfuse;

namespace {

constexpr const char* kDeviceDir = "devices";

void emit(const std::string& text, const std::string& output) {
  std::cout << text;
  if (!output.empty()) {
    std::ofstream out(output);
    out << text;
    if (!out) throw Error("cannot write " + output);
  }
}

BenchConfig config_from(const std::string& path) {
  BenchConfig c;
  if (!path.empty()) c = load_config(path, c);
  return c;
}

struct OpenDatabase {
  Catalog catalog;
  DeviceArray devices;
};

OpenDatabase open_database(const fs::path& dir) {
  auto catalog = Catalog::open(dir);
  auto devices = DeviceArray::file_backed(dir / kDeviceDir, catalog.device_count);
  return {std::move(catalog), std::move(devices)};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_cluster_keys(Schema& schema, const std::vector<std::string>& keys) {
  for (const auto& k : keys) {
    auto eq = k.find('=');
    if (eq != std::string::npos) {
      auto& t = schema.tables[schema.table_index(k.substr(0, eq))];
      t.cluster_key = k.substr(eq + 1);
      t.column_index(t.cluster_key);
      continue;
    }
    bool found = false;
    for (auto& t : schema.tables) {
      for (const auto& c : t.columns) {
        if (c.name == k) {
          t.cluster_key = k;
          found = true;
        }
      }
    }
    if (!found) throw LoadError("cluster key " + k + " is not a column of any table");
  }
}

int run_generate(const std::string& bench, double sf, std::uint64_t seed, const std::string& out) {
  auto db = generate(parse_benchmark(bench), sf, seed);
  write_database(db, out);
  for (const auto& t : db.tables) std::cout << t.name << "\t" << t.row_count() << "\n";
  return 0;
}

int run_load(const std::string& schema_path, const std::string& input, const std::string& out,
             std::size_t page_size, std::uint32_t devices, const std::vector<std::string>& cluster_keys,
             const std::string& config_path) {
  auto cfg = config_from(config_path);
  LoadConfig load = cfg.load;
  if (page_size) load.page_size = page_size;
  if (devices) load.device_count = devices;
  auto schema = Schema::load(schema_path.empty() ? fs::path(input) / "schema.json" : fs::path(schema_path));
  apply_cluster_keys(schema, cluster_keys);
  auto tables = read_input_dir(input, schema);
  fs::create_directories(out);
  auto array = DeviceArray::file_backed(fs::path(out) / kDeviceDir, load.device_count, UINT64_MAX, true);
  auto catalog = load_tables(schema, tables, array, load);
  catalog.save(out);
  for (const auto& t : catalog.tables) {
    std::uint64_t pages = 0, bytes = 0;
    for (const auto& c : t.columns) {
      pages += c.page_count();
      for (auto s : c.sizes) bytes += s;
    }
    std::cout << t.name << "\trows=" << t.row_count << "\tpages=" << pages << "\tbytes=" << bytes << "\n";
  }
  return 0;
}

QueryParams params_from(const std::optional<double>& selectivity) { return QueryParams{selectivity}; }

int run_query_cmd(const std::string& id, const std::string& db_dir, const std::string& mode,
                  const std::optional<double>& selectivity, bool no_prune, bool trace, const std::string& config_path,
                  const std::string& output) {
  auto cfg = config_from(config_path);
  auto db = open_database(db_dir);
  ExecOptions opt = cfg.exec;
  opt.mode = parse_exec_mode(mode);
  if (no_prune) opt.prune = false;
  db.devices.drop_caches();
  auto run = run_query(canned_query(id, params_from(selectivity)), db.catalog, db.devices, opt);
  std::string text = format_result(run.result);
  if (trace) text += "\n" + format_trace(run.trace) + format_counters(run.trace.io);
  emit(text, output);
  return 0;
}

int run_bench_cmd(const std::vector<std::string>& ids, const std::string& data, const std::string& modes,
                  const std::string& page_sizes, const std::string& selectivities, std::size_t reps,
                  const std::string& config_path, const std::string& work_dir, const std::string& output) {
  auto cfg = config_from(config_path);
  BenchSpec spec;
  spec.queries = ids;
  spec.repetitions = reps ? reps : cfg.repetitions;
  spec.modes.clear();
  for (const auto& m : split(modes, ',')) spec.modes.push_back(parse_exec_mode(m));
  if (!page_sizes.empty()) {
    spec.page_sizes.clear();
    for (const auto& p : split(page_sizes, ',')) spec.page_sizes.push_back(std::stoull(p));
  } else {
    spec.page_sizes = {cfg.load.page_size};
  }
  if (!selectivities.empty()) {
    spec.selectivities.clear();
    for (const auto& s : split(selectivities, ',')) spec.selectivities.emplace_back(std::stod(s));
  }
  auto db = read_database(data);
  std::optional<fs::path> dir;
  if (!work_dir.empty()) dir = fs::path(work_dir);
  auto rows = run_bench(spec, db, cfg, dir);
  std::cout << format_bench_table(rows);
  if (!output.empty()) {
    std::ofstream out(output);
    out << format_bench_tsv(rows);
    if (!out) throw Error("cannot write " + output);
  } else {
    std::cout << "\n" << format_bench_tsv(rows);
  }
  return 0;
}

int run_verify(const std::vector<std::string>& ids, const std::string& db_dir, const std::string& data,
               const std::optional<double>& selectivity, const std::string& config_path) {
  auto cfg = config_from(config_path);
  auto db = open_database(db_dir);
  auto raw = read_database(data);
  int failures = 0;
  for (const auto& id : ids) {
    auto params = params_from(selectivity);
    auto expected = oracle_eval(id, raw, params);
    for (auto mode : {ExecMode::Fused, ExecMode::Staged}) {
      ExecOptions opt = cfg.exec;
      opt.mode = mode;
      auto run = run_query(canned_query(id, params), db.catalog, db.devices, opt);
      bool ok = run.result == expected;
      failures += !ok;
      std::cout << id << "\t" << to_string(mode) << "\t" << (ok ? "ok" : "MISMATCH") << "\trows=" << run.result.rows.size()
                << "\texpected_rows=" << expected.rows.size() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Columnar scan engine with fused and staged execution over a simulated device array"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write TPC-H-shaped or SSB-shaped row files");
  std::string gen_bench = "tpch", gen_out;
  double gen_sf = 0.01;
  std::uint64_t gen_seed = 42;
  gen->add_option("--bench", gen_bench, "tpch or ssb")->capture_default_str();
  gen->add_option("--sf", gen_sf, "Scale factor in [0.001, 1]")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* load = app.add_subcommand("load", "Sort, compress and write tables onto the device array");
  std::string load_schema, load_input, load_out, load_config_path;
  std::size_t load_page = 0;
  std::uint32_t load_devices = 0;
  std::vector<std::string> load_keys;
  load->add_option("--schema", load_schema, "Schema JSON (default <input>/schema.json)");
  load->add_option("--input", load_input, "Directory of <table>.tbl files")->required();
  load->add_option("--out", load_out, "Database directory")->required();
  load->add_option("--page-size", load_page, "Page size in bytes (65536..2097152)");
  load->add_option("--devices", load_devices, "Number of simulated devices");
  load->add_option("--cluster-key", load_keys, "Cluster key column, or TABLE=column");
  load->add_option("--config", load_config_path, "key=value config file");

  auto* query = app.add_subcommand("query", "Run a canned query");
  std::string q_id, q_db, q_mode = "fused", q_config, q_output;
  std::optional<double> q_sel;
  bool q_no_prune = false, q_trace = false;
  query->add_option("id", q_id, "Query id (Q1, Q3, Q6, Q13, SSB1.1, SSB2.1, SSB3.1)")->required();
  query->add_option("--db", q_db, "Database directory")->required();
  query->add_option("--mode", q_mode, "fused or staged")->capture_default_str();
  query->add_option("--selectivity", q_sel, "Date-window fraction for Q3 and Q6");
  query->add_flag("--no-prune", q_no_prune, "Read every page");
  query->add_flag("--trace", q_trace, "Print the execution trace and IO counters");
  query->add_option("--config", q_config, "key=value config file");
  query->add_option("--output", q_output, "Also write the output to this file");

  auto* bench = app.add_subcommand("bench", "Time canned queries across modes, page sizes and selectivities");
  std::vector<std::string> b_ids;
  std::string b_data, b_modes = "fused,staged", b_pages, b_sels, b_config, b_work, b_output;
  std::size_t b_reps = 0;
  bench->add_option("ids", b_ids, "Query ids")->required();
  bench->add_option("--data", b_data, "Directory written by generate")->required();
  bench->add_option("--modes", b_modes, "Comma-separated modes")->capture_default_str();
  bench->add_option("--page-sizes", b_pages, "Comma-separated page sizes in bytes");
  bench->add_option("--selectivities", b_sels, "Comma-separated selectivities");
  bench->add_option("--reps", b_reps, "Repetitions per configuration (default from config, 10)");
  bench->add_option("--config", b_config, "key=value config file");
  bench->add_option("--work-dir", b_work, "Directory for file-backed devices (in memory when omitted)");
  bench->add_option("--output", b_output, "Write the TSV report here");

  auto* verify = app.add_subcommand("verify", "Compare both modes against the reference evaluator");
  std::vector<std::string> v_ids;
  std::string v_db, v_data, v_config;
  std::optional<double> v_sel;
  verify->add_option("ids", v_ids, "Query ids")->required();
  verify->add_option("--db", v_db, "Database directory")->required();
  verify->add_option("--data", v_data, "Directory written by generate")->required();
  verify->add_option("--selectivity", v_sel, "Date-window fraction for Q3 and Q6");
  verify->add_option("--config", v_config, "key=value config file");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_generate(gen_bench, gen_sf, gen_seed, gen_out);
    if (*load) return run_load(load_schema, load_input, load_out, load_page, load_devices, load_keys, load_config_path);
    if (*query) return run_query_cmd(q_id, q_db, q_mode, q_sel, q_no_prune, q_trace, q_config, q_output);
    if (*bench) return run_bench_cmd(b_ids, b_data, b_modes, b_pages, b_sels, b_reps, b_config, b_work, b_output);
    if (*verify) return run_verify(v_ids, v_db, v_data, v_sel, v_config);
  } catch (const PlanError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
