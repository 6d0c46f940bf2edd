#include "colfuse/exec/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <memory>

#include "colfuse/error.hpp"
#include "colfuse/page.hpp"

namespace colfuse {

std::uint64_t QueryTrace::pass_launches() const {
  std::uint64_t n = prune_launches;
  for (const auto& p : pipelines) n += p.pass_launches;
  return n;
}

std::uint64_t QueryTrace::barrier_count() const {
  std::uint64_t n = 0;
  for (const auto& p : pipelines) n += p.barrier_count;
  return n;
}

std::uint64_t QueryTrace::intermediate_bytes() const {
  std::uint64_t n = 0;
  for (const auto& p : pipelines) n += p.intermediate_bytes;
  return n;
}

std::uint64_t QueryTrace::bytes_read() const {
  std::uint64_t n = 0;
  for (const auto& p : pipelines) n += p.bytes_read;
  return n;
}

std::uint64_t QueryTrace::uncompressed_bytes() const {
  std::uint64_t n = 0;
  for (const auto& p : pipelines) n += p.uncompressed_bytes;
  return n;
}

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
}

struct CompiledOp {
  const Operator* op = nullptr;
  CompiledFilter filter;
  std::uint32_t first_payload_slot = 0;
  std::size_t payload_width = 0;
};

struct CompiledPipeline {
  const PipelinePlan* plan = nullptr;
  const TableCatalog* table = nullptr;
  std::vector<const ColumnCatalog*> columns;
  std::vector<bool> slot_is_string;
  std::vector<CompiledOp> ops;
  const HashBuildOp* build = nullptr;
  const AggregateOp* aggregate = nullptr;
};

void check_expr(const Expr& e, const std::vector<bool>& slot_is_string) {
  switch (e.op) {
    case Expr::Op::Col:
      if (e.slot >= slot_is_string.size()) throw PlanError("expression uses unknown slot " + std::to_string(e.slot));
      if (slot_is_string[e.slot]) throw PlanError("arithmetic on string slot " + std::to_string(e.slot));
      return;
    case Expr::Op::Const:
      return;
    default:
      if (!e.lhs || !e.rhs) throw PlanError("binary expression with a missing operand");
      check_expr(*e.lhs, slot_is_string);
      check_expr(*e.rhs, slot_is_string);
  }
}

void check_int_slot(std::uint32_t slot, const std::vector<bool>& slot_is_string, const char* what) {
  if (slot >= slot_is_string.size()) throw PlanError(std::string(what) + " uses unknown slot " + std::to_string(slot));
  if (slot_is_string[slot]) throw PlanError(std::string(what) + " needs an integer slot");
}

CompiledPipeline compile_pipeline(const PipelinePlan& plan, const Catalog& catalog,
                                  std::map<std::uint32_t, std::size_t>& built_widths) {
  CompiledPipeline cp;
  cp.plan = &plan;
  try {
    cp.table = &catalog.table(plan.table);
  } catch (const CatalogError& e) {
    throw PlanError(e.what());
  }
  if (plan.columns.empty()) throw PlanError("pipeline over " + plan.table + " reads no columns");
  for (const auto& name : plan.columns) {
    try {
      cp.columns.push_back(&cp.table->column(name));
    } catch (const CatalogError& e) {
      throw PlanError(e.what());
    }
    cp.slot_is_string.push_back(!cp.columns.back()->type.is_integer_backed());
  }
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const auto& op = plan.ops[i];
    bool last = i + 1 == plan.ops.size();
    CompiledOp co;
    co.op = &op;
    if (const auto* f = std::get_if<FilterOp>(&op)) {
      co.filter = compile_filter(*f, cp.slot_is_string);
    } else if (const auto* b = std::get_if<HashBuildOp>(&op)) {
      if (!last) throw PlanError("hash build must end its pipeline");
      check_int_slot(b->key_slot, cp.slot_is_string, "hash build key");
      for (auto s : b->payload_slots) {
        if (s >= cp.slot_is_string.size()) throw PlanError("hash build payload uses unknown slot");
      }
      if (built_widths.count(b->table_id)) throw PlanError("hash table " + std::to_string(b->table_id) + " built twice");
      built_widths[b->table_id] = b->payload_slots.size();
      cp.build = b;
    } else if (const auto* p = std::get_if<HashProbeOp>(&op)) {
      check_int_slot(p->key_slot, cp.slot_is_string, "hash probe key");
      auto it = built_widths.find(p->table_id);
      if (it == built_widths.end()) {
        throw PlanError("probe of hash table " + std::to_string(p->table_id) + " before it is built");
      }
      co.first_payload_slot = static_cast<std::uint32_t>(cp.slot_is_string.size());
      co.payload_width = it->second;
      cp.slot_is_string.resize(cp.slot_is_string.size() + it->second, false);
    } else {
      const auto& a = std::get<AggregateOp>(op);
      if (!last) throw PlanError("aggregate must end its pipeline");
      if (a.keys.size() > kMaxGroupKeys) throw PlanError("at most 4 group keys are supported");
      for (const auto& k : a.keys) {
        if (k.slot >= cp.slot_is_string.size()) throw PlanError("group key uses unknown slot");
      }
      for (const auto& s : a.aggs) {
        if (s.fn != AggFn::Count) check_expr(s.expr, cp.slot_is_string);
      }
      cp.aggregate = &a;
    }
    cp.ops.push_back(std::move(co));
  }
  return cp;
}

std::vector<CompiledPipeline> compile_query(const QueryPlan& plan, const Catalog& catalog) {
  if (plan.pipelines.empty()) throw PlanError("query " + plan.id + " has no pipelines");
  std::map<std::uint32_t, std::size_t> widths;
  std::vector<CompiledPipeline> out;
  for (const auto& p : plan.pipelines) out.push_back(compile_pipeline(p, catalog, widths));
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (out[i].aggregate) throw PlanError("only the last pipeline may aggregate");
  }
  return out;
}

struct QueryContext {
  const Catalog& catalog;
  const DeviceArray& devices;
  const ExecOptions& options;
  IoSystem io;
  StringPool pool;
  std::map<std::uint32_t, std::unique_ptr<HashTable>> tables;
};

IoRequest page_request(const ColumnCatalog& col, std::size_t ordinal, std::uint32_t device_count, std::uint64_t tag) {
  auto loc = resolve_page(col.first_page_id + ordinal, col.first_page_id, col.offsets, col.sizes, device_count);
  return {loc.device, loc.offset, loc.length, tag};
}

Page parse_expected(std::span<const std::uint8_t> bytes, const ColumnCatalog& col, std::size_t ordinal) {
  auto page = parse_page(bytes);
  const auto& header = std::visit([](const auto& p) -> const PageHeader& { return p.header; }, page);
  if (header.page_id != col.first_page_id + ordinal || header.column_id != col.column_id) {
    throw CorruptPage("page " + std::to_string(col.first_page_id + ordinal) + " holds page " +
                      std::to_string(header.page_id) + " of column " + std::to_string(header.column_id));
  }
  return page;
}

std::size_t ordinal_of(const ColumnCatalog& col, std::uint64_t page_id) { return col.dictionary.ordinal_of(page_id); }

/// Runs the operator chain on one batch. `payload` holds the probe output
/// arrays (one per payload slot, at least batch-sized).
void run_ops(const CompiledPipeline& cp, QueryContext& ctx, std::vector<ColumnView>& views, Selection& sel,
             std::vector<std::vector<std::int64_t>>& payload, AggregateState& agg, HashTable* build) {
  for (const auto& co : cp.ops) {
    if (sel.empty()) return;
    if (std::holds_alternative<FilterOp>(*co.op)) {
      filter_apply(co.filter, views, sel);
    } else if (const auto* p = std::get_if<HashProbeOp>(co.op)) {
      std::vector<std::int64_t*> out(co.payload_width);
      for (std::size_t k = 0; k < co.payload_width; ++k) {
        out[k] = payload[co.first_payload_slot + k].data();
        views[co.first_payload_slot + k] = ColumnView{out[k], nullptr, nullptr, 0};
      }
      hash_probe_apply(*p, views, sel, *ctx.tables.at(p->table_id), out);
    } else if (const auto* b = std::get_if<HashBuildOp>(co.op)) {
      hash_build_apply(*b, views, sel, cp.slot_is_string, *build, ctx.pool);
    } else {
      agg.consume(views, sel, cp.slot_is_string, ctx.pool);
    }
  }
}

struct PageGroup {
  RidSpan window;
  std::vector<std::vector<std::size_t>> pages;  // per column, ascending ordinals
};

/// RID-connected components of the pruned pages: no page belongs to two groups.
std::vector<PageGroup> make_groups(const CompiledPipeline& cp, const PrunedInput& input) {
  struct Ref {
    RidSpan span;
    std::size_t column;
    std::size_t ordinal;
  };
  std::vector<Ref> refs;
  for (std::size_t c = 0; c < cp.columns.size(); ++c) {
    const auto& col = *cp.columns[c];
    for (auto id : input.lists[c].page_ids) {
      auto ord = ordinal_of(col, id);
      refs.push_back({col.rids.page_span(ord), c, ord});
    }
  }
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.span.begin < b.span.begin; });
  std::vector<PageGroup> groups;
  for (const auto& r : refs) {
    if (groups.empty() || r.span.begin >= groups.back().window.end) {
      PageGroup g;
      g.window = r.span;
      g.pages.resize(cp.columns.size());
      groups.push_back(std::move(g));
    }
    auto& g = groups.back();
    g.window.end = std::max(g.window.end, r.span.end);
    g.pages[r.column].push_back(r.ordinal);
  }
  for (auto& g : groups) {
    for (auto& p : g.pages) std::sort(p.begin(), p.end());
  }
  return groups;
}

struct FusedWorker {
  std::vector<std::vector<FixedPage>> fixed;         // [column][page in group]
  std::vector<IntValues> chunk_ints;                 // [column], decoded per chunk
  std::vector<std::vector<DecodedStrings>> strings;  // [column][page in group]
  std::vector<std::vector<RidSpan>> spans;
  std::vector<std::vector<std::int64_t>> payload;
  std::vector<ColumnView> views;
  Selection sel;
  AggregateState agg;
  std::uint64_t uncompressed = 0;
  std::uint64_t spills = 0;
  std::uint64_t rows = 0;
};

void run_fused(const CompiledPipeline& cp, QueryContext& ctx, const PrunedInput& input, HashTable* build,
               AggregateState& result, PipelineTrace& trace) {
  const auto& opt = ctx.options;
  auto groups = make_groups(cp, input);
  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, groups.size()));
  auto queues = configure_queues(ctx.io, workers, opt.io_workers, opt.queue_depth);
  const std::size_t ncols = cp.columns.size();
  const std::size_t nslots = cp.slot_is_string.size();
  const std::size_t chunk = std::max<std::size_t>(1, opt.chunk_rows);

  std::vector<FusedWorker> ws(workers);
  for (auto& w : ws) {
    w.fixed.resize(ncols);
    w.chunk_ints.resize(ncols);
    w.strings.resize(ncols);
    w.spans.resize(ncols);
    w.payload.assign(nslots, {});
    for (std::size_t s = ncols; s < nslots; ++s) w.payload[s].resize(chunk);
    w.views.resize(nslots);
    w.sel.reserve(chunk);
    w.agg = AggregateState(cp.aggregate);
    for (std::size_t c = 0; c < ncols; ++c) {
      if (!cp.slot_is_string[c]) w.chunk_ints[c].resize(chunk);
    }
  }

  std::atomic<std::uint64_t> barriers{0};
  ctx.io.stats().add_pass_launch();
  trace.pass_launches = 1;
  parallel_for(groups.size(), workers, [&](std::size_t gi, std::size_t wi) {
    auto& w = ws[wi];
    const auto& g = groups[gi];

    std::vector<IoRequest> requests;
    for (std::size_t c = 0; c < ncols; ++c) {
      for (auto ord : g.pages[c]) {
        requests.push_back(page_request(*cp.columns[c], ord, ctx.catalog.device_count, requests.size()));
      }
    }
    auto completions = read_all(queues.queues[wi], requests);
    barriers.fetch_add(1);
    ctx.io.stats().add_barriers();

    std::size_t idx = 0;
    std::size_t decoded_bytes = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto& col = *cp.columns[c];
      const auto np = g.pages[c].size();
      w.spans[c].resize(np);
      if (cp.slot_is_string[c]) {
        if (w.strings[c].size() < np) w.strings[c].resize(np);
      } else if (w.fixed[c].size() < np) {
        w.fixed[c].resize(np);
      }
      for (std::size_t k = 0; k < np; ++k, ++idx) {
        auto ord = g.pages[c][k];
        auto page = parse_expected(completions[idx].data, col, ord);
        w.spans[c][k] = col.rids.page_span(ord);
        if (auto* fp = std::get_if<FixedPage>(&page)) {
          decoded_bytes += fp->header.value_count * sizeof(std::int64_t);
          w.uncompressed += uncompressed_page_bytes(fp->header, col.type);
          w.fixed[c][k] = std::move(*fp);
        } else {
          auto& vp = std::get<VarlenPage>(page);
          w.strings[c][k] = decode_varlen_strings(vp);
          decoded_bytes += w.strings[c][k].bytes.size() + w.strings[c][k].offsets.size() * 4;
          w.uncompressed += uncompressed_page_bytes(vp.header, col.type, w.strings[c][k].bytes.size());
        }
      }
    }
    if (decoded_bytes > opt.scratch_bytes) ++w.spills;
    barriers.fetch_add(1);
    ctx.io.stats().add_barriers();

    std::vector<std::size_t> cursor(ncols);
    const auto live = input.rids.clip(g.window);
    for (const auto& span : live.spans()) {
      std::fill(cursor.begin(), cursor.end(), 0);
      for (std::uint64_t r = span.begin; r < span.end;) {
        std::uint64_t stop = std::min<std::uint64_t>(span.end, r + chunk);
        for (std::size_t c = 0; c < ncols; ++c) {
          auto& k = cursor[c];
          while (k < w.spans[c].size() && w.spans[c][k].end <= r) ++k;
          if (k == w.spans[c].size() || w.spans[c][k].begin > r) {
            throw Error("page group misses RID " + std::to_string(r) + " of column " + cp.columns[c]->name);
          }
          stop = std::min(stop, w.spans[c][k].end);
        }
        const auto n = static_cast<std::size_t>(stop - r);
        for (std::size_t c = 0; c < ncols; ++c) {
          auto k = cursor[c];
          if (cp.slot_is_string[c]) {
            const auto& ds = w.strings[c][k];
            auto it = std::lower_bound(ds.rids.begin(), ds.rids.end(), r);
            auto base = static_cast<std::size_t>(it - ds.rids.begin());
            if (base + n > ds.rids.size() || ds.rids[base] != r || ds.rids[base + n - 1] != stop - 1) {
              throw CorruptPage("record RIDs of column " + cp.columns[c]->name + " are not contiguous");
            }
            w.views[c] = ColumnView{nullptr, ds.bytes.data(), ds.offsets.data(), base};
          } else {
            auto first = static_cast<std::size_t>(r - w.spans[c][k].begin);
            decode_fixed_ints_into(w.fixed[c][k], {first, first + n}, w.chunk_ints[c].data());
            w.views[c] = ColumnView{w.chunk_ints[c].data(), nullptr, nullptr, 0};
          }
        }
        w.sel.resize(n);
        for (std::size_t i = 0; i < n; ++i) w.sel[i] = static_cast<std::uint32_t>(i);
        run_ops(cp, ctx, w.views, w.sel, w.payload, w.agg, build);
        w.rows += n;
        r = stop;
      }
    }
  });

  trace.barrier_count = barriers.load();
  trace.page_groups = groups.size();
  for (auto& w : ws) {
    trace.uncompressed_bytes += w.uncompressed;
    trace.scratch_spills += w.spills;
    trace.rows_scanned += w.rows;
    if (cp.aggregate) result.merge(w.agg);
  }
}

/// A materialized column of the STAGED relation.
struct MatColumn {
  bool is_string = false;
  IntValues ints;
  std::string bytes;
  std::vector<std::uint32_t> offsets;

  std::uint64_t byte_size() const {
    return is_string ? bytes.size() + offsets.size() * sizeof(std::uint32_t) : ints.size() * sizeof(std::int64_t);
  }
  ColumnView view(std::size_t base) const {
    if (is_string) return {nullptr, bytes.data(), offsets.data(), base};
    return {ints.data(), nullptr, nullptr, base};
  }
};

class WorkMemory {
 public:
  WorkMemory(std::uint64_t budget, PipelineTrace& trace) : budget_(budget), trace_(trace) {}
  void charge(std::uint64_t bytes) {
    live_ += bytes;
    trace_.intermediate_bytes += bytes;
    if (live_ > budget_) {
      throw BudgetExceeded("intermediates need " + std::to_string(live_) + " bytes, work-memory budget is " +
                           std::to_string(budget_));
    }
  }
  void release(std::uint64_t bytes) { live_ -= std::min(live_, bytes); }

 private:
  std::uint64_t budget_;
  std::uint64_t live_ = 0;
  PipelineTrace& trace_;
};

void launch(QueryContext& ctx, PipelineTrace& trace) {
  ctx.io.stats().add_pass_launch();
  ++trace.pass_launches;
}

void end_pass(QueryContext& ctx, PipelineTrace& trace) {
  ctx.io.stats().add_barriers();
  ++trace.barrier_count;
}

void run_staged(const CompiledPipeline& cp, QueryContext& ctx, const PrunedInput& input, HashTable* build,
                AggregateState& result, PipelineTrace& trace) {
  const auto& opt = ctx.options;
  const std::size_t workers = std::max<std::size_t>(1, opt.workers);
  const std::size_t ncols = cp.columns.size();
  const std::size_t nslots = cp.slot_is_string.size();
  WorkMemory memory(opt.work_memory, trace);

  // IO pass.
  struct Ref {
    std::size_t column;
    std::size_t ordinal;
  };
  std::vector<Ref> refs;
  std::vector<IoRequest> requests;
  for (std::size_t c = 0; c < ncols; ++c) {
    for (auto id : input.lists[c].page_ids) {
      auto ord = ordinal_of(*cp.columns[c], id);
      refs.push_back({c, ord});
      requests.push_back(page_request(*cp.columns[c], ord, ctx.catalog.device_count, requests.size()));
    }
  }
  launch(ctx, trace);
  std::vector<std::vector<std::uint8_t>> buffers(requests.size());
  {
    const std::size_t io_workers = std::max<std::size_t>(1, std::min(workers, requests.size()));
    auto queues = configure_queues(ctx.io, io_workers, opt.io_workers, opt.queue_depth);
    parallel_for(io_workers, io_workers, [&](std::size_t w, std::size_t) {
      auto lo = w * requests.size() / io_workers;
      auto hi = (w + 1) * requests.size() / io_workers;
      auto done = read_all(queues.queues[w], std::span(requests).subspan(lo, hi - lo));
      for (std::size_t i = 0; i < done.size(); ++i) buffers[lo + i] = std::move(done[i].data);
    });
  }
  end_pass(ctx, trace);

  // One decompression pass per column, materializing the rows of the RID set.
  const std::uint64_t m = input.rids.cardinality();
  trace.rows_scanned = m;
  std::vector<MatColumn> rel(nslots);
  std::atomic<std::uint64_t> uncompressed{0};
  std::size_t ref_begin = 0;
  for (std::size_t c = 0; c < ncols; ++c) {
    launch(ctx, trace);
    const auto& col = *cp.columns[c];
    std::size_t ref_end = ref_begin;
    while (ref_end < refs.size() && refs[ref_end].column == c) ++ref_end;
    const std::size_t np = ref_end - ref_begin;
    std::vector<std::vector<RidSpan>> clips(np);
    std::vector<std::uint64_t> out_pos(np + 1, 0);
    for (std::size_t k = 0; k < np; ++k) {
      auto span = col.rids.page_span(refs[ref_begin + k].ordinal);
      clips[k] = input.rids.clip(span).spans();
      std::uint64_t rows = 0;
      for (const auto& s : clips[k]) rows += s.size();
      out_pos[k + 1] = out_pos[k] + rows;
    }
    if (out_pos[np] != m) throw Error("pruned pages of " + col.name + " do not cover the RID set");
    auto& mat = rel[c];
    mat.is_string = cp.slot_is_string[c];
    if (!mat.is_string) {
      memory.charge(m * sizeof(std::int64_t));
      mat.ints.resize(m);
      parallel_for(np, workers, [&](std::size_t k, std::size_t) {
        auto page = parse_expected(buffers[ref_begin + k], col, refs[ref_begin + k].ordinal);
        const auto& fp = std::get<FixedPage>(page);
        auto first = fp.header.first_rid;
        auto pos = out_pos[k];
        for (const auto& s : clips[k]) {
          decode_fixed_ints_into(fp, {static_cast<std::size_t>(s.begin - first), static_cast<std::size_t>(s.end - first)},
                                 mat.ints.data() + pos);
          pos += s.size();
        }
        uncompressed.fetch_add(uncompressed_page_bytes(fp.header, col.type));
      });
    } else {
      std::vector<DecodedStrings> decoded(np);
      std::vector<std::vector<std::pair<std::size_t, std::size_t>>> ranges(np);  // record index ranges
      std::vector<std::uint64_t> byte_pos(np + 1, 0);
      parallel_for(np, workers, [&](std::size_t k, std::size_t) {
        auto page = parse_expected(buffers[ref_begin + k], col, refs[ref_begin + k].ordinal);
        const auto& vp = std::get<VarlenPage>(page);
        decoded[k] = decode_varlen_strings(vp);
        uncompressed.fetch_add(uncompressed_page_bytes(vp.header, col.type, decoded[k].bytes.size()));
        const auto& ds = decoded[k];
        for (const auto& s : clips[k]) {
          auto lo = static_cast<std::size_t>(std::lower_bound(ds.rids.begin(), ds.rids.end(), s.begin) - ds.rids.begin());
          auto hi = static_cast<std::size_t>(std::lower_bound(ds.rids.begin(), ds.rids.end(), s.end) - ds.rids.begin());
          if (hi - lo != s.size()) throw CorruptPage("record RIDs of column " + col.name + " are not contiguous");
          ranges[k].emplace_back(lo, hi);
        }
      });
      for (std::size_t k = 0; k < np; ++k) {
        std::uint64_t bytes = 0;
        for (auto [lo, hi] : ranges[k]) bytes += decoded[k].offsets[hi] - decoded[k].offsets[lo];
        byte_pos[k + 1] = byte_pos[k] + bytes;
      }
      if (byte_pos[np] > UINT32_MAX) throw BudgetExceeded("string column " + col.name + " exceeds 4 GiB");
      memory.charge(byte_pos[np] + (m + 1) * sizeof(std::uint32_t));
      mat.bytes.resize(byte_pos[np]);
      mat.offsets.resize(m + 1);
      mat.offsets[m] = static_cast<std::uint32_t>(byte_pos[np]);
      parallel_for(np, workers, [&](std::size_t k, std::size_t) {
        const auto& ds = decoded[k];
        auto row = out_pos[k];
        auto at = byte_pos[k];
        for (auto [lo, hi] : ranges[k]) {
          for (auto i = lo; i < hi; ++i, ++row) {
            auto rec = ds.at(i);
            mat.offsets[row] = static_cast<std::uint32_t>(at);
            std::copy(rec.begin(), rec.end(), mat.bytes.begin() + static_cast<std::ptrdiff_t>(at));
            at += rec.size();
          }
        }
      });
    }
    ref_begin = ref_end;
    end_pass(ctx, trace);
  }
  trace.uncompressed_bytes = uncompressed.load();
  std::vector<std::vector<std::uint8_t>>().swap(buffers);

  // One pass per operator over the materialized relation.
  std::uint64_t rows = m;
  std::size_t live_slots = ncols;
  const std::size_t chunk = std::max<std::size_t>(1, opt.chunk_rows) * 32;
  std::vector<AggregateState> partials(workers, AggregateState(cp.aggregate));
  for (const auto& co : cp.ops) {
    launch(ctx, trace);
    const std::size_t nchunks = (rows + chunk - 1) / chunk;
    auto chunk_views = [&](std::size_t ci) {
      std::vector<ColumnView> views(nslots);
      for (std::size_t s = 0; s < live_slots; ++s) views[s] = rel[s].view(ci * chunk);
      return views;
    };
    auto chunk_size = [&](std::size_t ci) { return static_cast<std::size_t>(std::min<std::uint64_t>(chunk, rows - ci * chunk)); };
    auto all_rows = [](std::size_t n) {
      Selection sel(n);
      for (std::size_t i = 0; i < n; ++i) sel[i] = static_cast<std::uint32_t>(i);
      return sel;
    };

    const bool is_filter = std::holds_alternative<FilterOp>(*co.op);
    const auto* probe = std::get_if<HashProbeOp>(co.op);
    if (is_filter || probe) {
      const std::size_t new_slots = live_slots + co.payload_width;
      std::vector<Selection> sels(nchunks);
      std::vector<std::vector<std::vector<std::int64_t>>> payloads(nchunks);
      parallel_for(nchunks, workers, [&](std::size_t ci, std::size_t) {
        auto views = chunk_views(ci);
        auto n = chunk_size(ci);
        sels[ci] = all_rows(n);
        if (is_filter) {
          filter_apply(co.filter, views, sels[ci]);
        } else {
          payloads[ci].assign(co.payload_width, std::vector<std::int64_t>(n));
          std::vector<std::int64_t*> out;
          for (auto& p : payloads[ci]) out.push_back(p.data());
          hash_probe_apply(*probe, views, sels[ci], *ctx.tables.at(probe->table_id), out);
        }
      });
      std::vector<std::uint64_t> pos(nchunks + 1, 0);
      for (std::size_t ci = 0; ci < nchunks; ++ci) pos[ci + 1] = pos[ci] + sels[ci].size();
      const std::uint64_t kept = pos[nchunks];

      // Compaction: every live column plus the probe payloads is rewritten.
      std::vector<MatColumn> next(nslots);
      for (std::size_t s = 0; s < new_slots; ++s) {
        auto& dst = next[s];
        dst.is_string = s < live_slots && rel[s].is_string;
        if (!dst.is_string) {
          memory.charge(kept * sizeof(std::int64_t));
          dst.ints.resize(kept);
          continue;
        }
        std::vector<std::uint64_t> bpos(nchunks + 1, 0);
        for (std::size_t ci = 0; ci < nchunks; ++ci) {
          std::uint64_t b = 0;
          auto v = rel[s].view(ci * chunk);
          for (auto r : sels[ci]) b += v.str_at(r).size();
          bpos[ci + 1] = bpos[ci] + b;
        }
        if (bpos[nchunks] > UINT32_MAX) throw BudgetExceeded("string intermediate exceeds 4 GiB");
        memory.charge(bpos[nchunks] + (kept + 1) * sizeof(std::uint32_t));
        dst.bytes.resize(bpos[nchunks]);
        dst.offsets.resize(kept + 1);
        dst.offsets[kept] = static_cast<std::uint32_t>(bpos[nchunks]);
        parallel_for(nchunks, workers, [&](std::size_t ci, std::size_t) {
          auto v = rel[s].view(ci * chunk);
          auto row = pos[ci];
          auto at = bpos[ci];
          for (auto r : sels[ci]) {
            auto rec = v.str_at(r);
            dst.offsets[row++] = static_cast<std::uint32_t>(at);
            std::copy(rec.begin(), rec.end(), dst.bytes.begin() + static_cast<std::ptrdiff_t>(at));
            at += rec.size();
          }
        });
      }
      parallel_for(nchunks, workers, [&](std::size_t ci, std::size_t) {
        for (std::size_t s = 0; s < new_slots; ++s) {
          if (next[s].is_string) continue;
          auto* out = next[s].ints.data() + pos[ci];
          if (s < live_slots) {
            auto v = rel[s].view(ci * chunk);
            for (auto r : sels[ci]) *out++ = v.int_at(r);
          } else {
            const auto& src = payloads[ci][s - live_slots];
            for (auto r : sels[ci]) *out++ = src[r];
          }
        }
      });
      for (std::size_t s = 0; s < live_slots; ++s) memory.release(rel[s].byte_size());
      rel = std::move(next);
      rows = kept;
      live_slots = new_slots;
    } else if (const auto* b = std::get_if<HashBuildOp>(co.op)) {
      parallel_for(nchunks, workers, [&](std::size_t ci, std::size_t) {
        auto views = chunk_views(ci);
        hash_build_apply(*b, views, all_rows(chunk_size(ci)), cp.slot_is_string, *build, ctx.pool);
      });
    } else {
      parallel_for(nchunks, workers, [&](std::size_t ci, std::size_t wi) {
        auto views = chunk_views(ci);
        partials[wi].consume(views, all_rows(chunk_size(ci)), cp.slot_is_string, ctx.pool);
      });
      for (const auto& p : partials) result.merge(p);
    }
    end_pass(ctx, trace);
  }
}

}  // namespace

PrunedInput prune_pipeline(const PipelinePlan& plan, const TableCatalog& table, bool prune_pages) {
  std::vector<RangePredicate> preds;
  if (prune_pages) {
    for (const auto& p : plan.pruning) {
      if (auto id = table.attribute_id(p.attribute)) preds.push_back({*id, p.op, p.lo, p.hi});
    }
  }
  std::vector<PrunedPageList> lists;
  std::vector<const ColumnCatalog*> cols;
  for (const auto& name : plan.columns) {
    const auto& col = table.column(name);
    cols.push_back(&col);
    if (prune_pages) {
      lists.push_back(prune(col.zone_map, col.dictionary, preds));
    } else {
      lists.push_back({col.column_id, col.dictionary.page_ids});
    }
  }
  std::vector<ColumnPages> inputs;
  for (std::size_t c = 0; c < cols.size(); ++c) inputs.push_back({&lists[c], &cols[c]->rids, &cols[c]->dictionary});
  auto inter = intersect_page_lists(inputs);
  return {std::move(inter.lists), std::move(inter.rids)};
}

void validate_plan(const QueryPlan& plan, const Catalog& catalog) { compile_query(plan, catalog); }

QueryRun run_query(const QueryPlan& plan, const Catalog& catalog, const DeviceArray& devices,
                   const ExecOptions& options) {
  auto t0 = SteadyClock::now();
  auto compiled = compile_query(plan, catalog);
  if (options.io_workers == 0) throw PlanError("io_workers must be at least 1");
  QueryContext ctx{catalog, devices, options, IoSystem(devices, options.latency), {}, {}};
  QueryRun run;
  run.trace.query = plan.id;
  run.trace.mode = options.mode;

  // Pruning pass over every pipeline.
  ctx.io.stats().add_pass_launch();
  run.trace.prune_launches = 1;
  std::vector<PrunedInput> inputs;
  for (const auto& cp : compiled) inputs.push_back(prune_pipeline(*cp.plan, *cp.table, options.prune));

  AggregateState result;
  for (std::size_t i = 0; i < compiled.size(); ++i) {
    const auto& cp = compiled[i];
    auto tp = SteadyClock::now();
    PipelineTrace trace;
    trace.pipeline = i;
    trace.mode = options.mode;
    HashTable* build = nullptr;
    if (cp.build) {
      auto capacity = hash_capacity_for(inputs[i].rids.cardinality());
      auto table = std::make_unique<HashTable>(cp.build->table_id, capacity, cp.build->payload_slots.size());
      build = table.get();
      ctx.tables[cp.build->table_id] = std::move(table);
    }
    auto before = ctx.io.stats().snapshot();
    trace.pages_read = 0;
    for (const auto& l : inputs[i].lists) trace.pages_read += l.page_ids.size();
    AggregateState* agg = cp.aggregate ? &result : nullptr;
    AggregateState scratch_agg;
    if (options.mode == ExecMode::Fused) {
      run_fused(cp, ctx, inputs[i], build, agg ? *agg : scratch_agg, trace);
    } else {
      run_staged(cp, ctx, inputs[i], build, agg ? *agg : scratch_agg, trace);
    }
    trace.bytes_read = ctx.io.stats().snapshot().bytes_read - before.bytes_read;
    trace.wall_ms = ms_since(tp);
    run.trace.pipelines.push_back(trace);
  }
  if (compiled.back().aggregate) {
    if (result.group_count() == 0) result = AggregateState(compiled.back().aggregate);
    run.result = result.finalize(ctx.pool);
  }
  run.trace.io = ctx.io.stats().snapshot();
  run.trace.wall_ms = ms_since(t0);
  return run;
}

std::string format_trace(const QueryTrace& trace) {
  std::string out = "query\tpipeline\tmode\tpass_launches\tbarrier_count\tbytes_read\tintermediate_bytes\twall_ms\n";
  char ms[32];
  for (const auto& p : trace.pipelines) {
    std::snprintf(ms, sizeof ms, "%.3f", p.wall_ms);
    out += trace.query + "\t" + std::to_string(p.pipeline) + "\t" + to_string(p.mode) + "\t" +
           std::to_string(p.pass_launches) + "\t" + std::to_string(p.barrier_count) + "\t" +
           std::to_string(p.bytes_read) + "\t" + std::to_string(p.intermediate_bytes) + "\t" + ms + "\n";
  }
  std::snprintf(ms, sizeof ms, "%.3f", trace.wall_ms);
  out += trace.query + "\tprune\t" + to_string(trace.mode) + "\t" + std::to_string(trace.prune_launches) +
         "\t0\t0\t0\t-\n";
  out += trace.query + "\ttotal\t" + to_string(trace.mode) + "\t" + std::to_string(trace.pass_launches()) + "\t" +
         std::to_string(trace.barrier_count()) + "\t" + std::to_string(trace.bytes_read()) + "\t" +
         std::to_string(trace.intermediate_bytes()) + "\t" + ms + "\n";
  return out;
}

}  // namespace colfuse
