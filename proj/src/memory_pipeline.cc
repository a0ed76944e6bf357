#include "smsim/memory_pipeline.h"

#include <algorithm>
#include <bit>
#include <cassert>
#include <set>
#include <unordered_map>

namespace smsim {

coalesce_result coalesce_full(const instruction& inst, const gpu_config& cfg, uint64_t parent_seq) {
  coalesce_result out;
  out.comparators = comparator_count_full(cfg.warp_width);
  std::unordered_map<uint64_t, std::size_t> by_sector;
  for (unsigned lane = 0; lane < cfg.warp_width; ++lane) {
    if (!inst.lane_active(lane)) continue;
    const uint64_t sector = sector_of(inst.mem_addrs[lane], cfg.sector_bytes);
    auto [it, fresh] = by_sector.try_emplace(sector, out.requests.size());
    if (fresh) {
      mem_request r;
      r.sector_addr = sector;
      r.structure = mem_structure::L1D;
      r.bank = l1d_bank_of(sector, cfg.sector_bytes, cfg.l1d_banks);
      r.gen_index = static_cast<unsigned>(out.requests.size());
      r.parent_seq = parent_seq;
      out.requests.push_back(r);
    }
    out.requests[it->second].lane_mask |= 1u << lane;
  }
  return out;
}

std::optional<mem_request> coalesce_step(address_latch& latch, const gpu_config& cfg) {
  if (!latch.occupied() || latch.unprocessed == 0) return std::nullopt;
  const instruction& in = *latch.inst;
  const unsigned leader = static_cast<unsigned>(std::countr_zero(latch.unprocessed));
  const uint64_t sector = sector_of(in.mem_addrs[leader], cfg.sector_bytes);

  uint32_t mask = 0;
  for (unsigned lane = leader; lane < cfg.warp_width; ++lane)
    if (((latch.unprocessed >> lane) & 1u) && sector_of(in.mem_addrs[lane], cfg.sector_bytes) == sector)
      mask |= 1u << lane;

  mem_request r;
  r.sector_addr = sector;
  r.structure = mem_structure::L1D;
  r.bank = l1d_bank_of(sector, cfg.sector_bytes, cfg.l1d_banks);
  r.lane_mask = mask;
  r.gen_index = latch.emitted++;
  r.parent_seq = latch.parent_seq;
  latch.unprocessed &= ~mask;
  if (latch.unprocessed == 0) latch.clear();
  return r;
}

unsigned shared_mem_conflict_cycles(const instruction& inst, const gpu_config& cfg) {
  std::vector<std::set<uint64_t>> words(cfg.shared_mem_banks);
  for (unsigned lane = 0; lane < cfg.warp_width; ++lane) {
    if (!inst.lane_active(lane)) continue;
    const uint64_t word = inst.mem_addrs[lane] / cfg.shared_bank_width_bytes;
    words[word % cfg.shared_mem_banks].insert(word);
  }
  std::size_t worst = 0;
  for (const auto& w : words) worst = std::max(worst, w.size());
  return static_cast<unsigned>(std::max<std::size_t>(worst, 1));
}

std::optional<std::size_t> select_in_order(std::span<const mem_request> reqs, std::size_t next,
                                           const std::function<bool(const mem_request&)>& resource_free) {
  if (next < reqs.size() && resource_free(reqs[next])) return next;
  return std::nullopt;
}

std::optional<std::size_t> select_any(std::span<const mem_request> reqs,
                                      const std::function<bool(const mem_request&)>& resource_free) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    if (!resource_free(reqs[i])) continue;
    if (!best || reqs[i].gen_index < reqs[*best].gen_index) best = i;
  }
  return best;
}

memory_pipeline::memory_pipeline(const gpu_config& cfg)
    : m_cfg(cfg),
      m_model(cfg.mem_pipeline_model),
      m_l1d("L1D", cfg.l1d_size_bytes, cfg.cache_line_bytes, cfg.cache_assoc),
      m_bank_accepts(cfg.l1d_banks, 0),
      m_sub(cfg.num_sub_cores),
      m_req_arbiter(cfg.num_sub_cores),
      m_wb_arbiter(cfg.num_sub_cores) {}

bool memory_pipeline::can_accept(unsigned sub_core) const {
  if (m_model == hw_model::baseline) return !m_base.inst.has_value();
  return !m_sub[sub_core].dispatch.has_value();
}

void memory_pipeline::accept(const inflight_inst& inst, uint64_t /*now*/) {
  assert(can_accept(inst.sub_core));
  tracking t;
  t.inst = inst;
  t.structure = is_shared(inst.inst->op) ? mem_structure::SHARED : mem_structure::L1D;
  m_tracking.emplace(inst.seq, t);
  ++m_stats.dispatched;
  if (m_model == hw_model::baseline) {
    m_base = baseline_latch{};
    m_base.inst = inst;
  } else {
    m_sub[inst.sub_core].dispatch = inst;
  }
}

bool memory_pipeline::busy() const {
  if (!m_tracking.empty() || m_base.inst || !m_base_done.empty() || m_base_wb.occupant) return true;
  for (const auto& s : m_sub)
    if (s.dispatch || s.addr.occupied() || s.shared_inst || !s.buffer.empty() || !s.done.empty() || s.wb.occupant)
      return true;
  return false;
}

uint64_t memory_pipeline::service(const mem_request& r, bool is_store, uint64_t now) {
  if (r.structure == mem_structure::SHARED) return now + m_cfg.shared_mem_latency;
  if (is_store) {
    // Write-through, no allocate: the store is done once accepted.
    m_l1d.access(r.sector_addr, false);
    return now;
  }
  auto a = m_l1d.access(r.sector_addr, true);
  uint64_t line_ready = a.ready_cycle;
  if (!a.hit) {
    line_ready = now + m_cfg.l2_latency_cycles;
    m_l1d.schedule_fill(r.sector_addr, line_ready);
  }
  return std::max(now, line_ready) + m_cfg.l1d_hit_latency;
}

void memory_pipeline::on_granted(const mem_request& r, uint64_t now, std::vector<inflight_inst>& completed) {
  auto it = m_tracking.find(r.parent_seq);
  assert(it != m_tracking.end());
  auto& t = it->second;
  const bool store = !is_load(t.inst.inst->op);
  uint64_t ready = service(r, store, now);
  if (r.structure == mem_structure::SHARED && m_model == hw_model::baseline) {
    // Bank conflicts serialize inside shared memory in the baseline.
    const unsigned c = shared_mem_conflict_cycles(*t.inst.inst, m_cfg);
    ready += c - 1;
    m_shared_busy_until = now + c;
  }
  if (r.structure == mem_structure::L1D) ++m_bank_accepts[r.bank];
  else ++m_shared_accepts;
  ++m_stats.requests_granted;
  ++t.granted;
  t.last_ready = std::max(t.last_ready, ready);
  maybe_finish(r.parent_seq, completed);
}

void memory_pipeline::maybe_finish(uint64_t seq, std::vector<inflight_inst>& completed) {
  auto it = m_tracking.find(seq);
  if (it == m_tracking.end()) return;
  auto& t = it->second;
  if (!t.all_generated || t.granted != t.generated) return;
  if (is_load(t.inst.inst->op)) {
    completion c{t.inst, t.last_ready, t.structure, t.granted};
    if (m_model == hw_model::baseline)
      m_base_done.push_back(c);
    else
      m_sub[t.inst.sub_core].done.push_back(c);
  } else {
    m_stats.responses_consumed += t.granted;
    completed.push_back(t.inst);
  }
  m_tracking.erase(it);
}

bool memory_pipeline::try_register_write(wb_latch& latch, uint64_t now, std::span<register_file_ports* const> ports) {
  if (!latch.occupant || latch.entered >= now) return false;
  const auto& inst = latch.occupant->inst;
  if (inst.inst->dest_reg) {
    auto& rf = *ports[inst.sub_core];
    const unsigned bank = bank_of(*inst.inst->dest_reg, rf.banks());
    if (!rf.can_write(bank)) return false;
    rf.write(bank);
  }
  return true;
}

std::vector<inflight_inst> memory_pipeline::writeback_baseline(uint64_t now, std::span<register_file_ports* const> ports) {
  std::vector<inflight_inst> out;
  if (m_base_wb.occupant) {
    if (try_register_write(m_base_wb, now, ports)) {
      out.push_back(m_base_wb.occupant->inst);
      m_stats.responses_consumed += m_base_wb.occupant->requests;
      m_base_wb.occupant.reset();
      ++m_stats.writebacks;
    }
  }
  // One latch for the whole SM: L1D first, then shared, oldest first.
  auto pick = m_base_done.end();
  std::size_t ready_count = 0;
  for (auto it = m_base_done.begin(); it != m_base_done.end(); ++it) {
    if (it->ready > now) continue;
    ++ready_count;
    if (pick == m_base_done.end() || it->structure < pick->structure ||
        (it->structure == pick->structure && it->inst.seq < pick->inst.seq))
      pick = it;
  }
  if (pick != m_base_done.end() && !m_base_wb.occupant) {
    m_base_wb.occupant = *pick;
    m_base_wb.entered = now;
    m_base_done.erase(pick);
    --ready_count;
  }
  if (ready_count > 0) ++m_stats.wb_latch_stall_cycles;
  return out;
}

std::vector<inflight_inst> memory_pipeline::writeback_improved(uint64_t now, std::span<register_file_ports* const> ports) {
  std::vector<inflight_inst> out;
  const unsigned subs = m_cfg.num_sub_cores;
  for (auto& s : m_sub) {
    if (s.wb.occupant && try_register_write(s.wb, now, ports)) {
      out.push_back(s.wb.occupant->inst);
      m_stats.responses_consumed += s.wb.occupant->requests;
      s.wb.occupant.reset();
      ++m_stats.writebacks;
    }
  }
  // Each structure hands at most one completed access to write-back per
  // cycle; the SM-level arbiter rotates which sub-core goes first. Within a
  // sub-core, L1D has priority over shared memory.
  std::vector<bool> filled(subs, false);
  const std::size_t start = m_wb_arbiter.pointer();
  for (mem_structure st : {mem_structure::L1D, mem_structure::SHARED}) {
    for (unsigned k = 0; k < subs; ++k) {
      const unsigned s = static_cast<unsigned>((start + k) % subs);
      auto& sp = m_sub[s];
      if (sp.wb.occupant || filled[s]) continue;
      auto pick = sp.done.end();
      for (auto it = sp.done.begin(); it != sp.done.end(); ++it)
        if (it->structure == st && it->ready <= now && (pick == sp.done.end() || it->inst.seq < pick->inst.seq))
          pick = it;
      if (pick == sp.done.end()) continue;
      sp.wb.occupant = *pick;
      sp.wb.entered = now;
      sp.done.erase(pick);
      filled[s] = true;
      break;
    }
  }
  m_wb_arbiter.rotate();
  for (const auto& sp : m_sub)
    if (std::any_of(sp.done.begin(), sp.done.end(), [now](const completion& c) { return c.ready <= now; })) {
      ++m_stats.wb_latch_stall_cycles;
      break;
    }
  return out;
}

void memory_pipeline::cycle_baseline_requests(uint64_t now, std::vector<inflight_inst>& completed) {
  if (!m_base.inst) return;
  const instruction& in = *m_base.inst->inst;
  auto& t = m_tracking.at(m_base.inst->seq);
  if (!m_base.coalesced) {
    // Address calculation and full coalescing in the same cycle.
    if (is_global(in.op)) {
      m_base.requests = coalesce_full(in, m_cfg, m_base.inst->seq).requests;
      ++m_stats.coalescing_cycles;
      m_stats.comparators_full = comparator_count_full(m_cfg.warp_width);
    } else {
      mem_request r;
      r.structure = mem_structure::SHARED;
      r.sector_addr = sector_of(in.mem_addrs[std::countr_zero(in.active_mask)], m_cfg.sector_bytes);
      r.lane_mask = in.active_mask;
      r.parent_seq = m_base.inst->seq;
      m_base.requests.push_back(r);
      m_stats.shared_conflict_cycles += shared_mem_conflict_cycles(in, m_cfg) - 1;
    }
    m_base.coalesced = true;
    t.generated = static_cast<unsigned>(m_base.requests.size());
    t.all_generated = true;
    m_stats.requests_generated += m_base.requests.size();
  }
  auto free = [&](const mem_request& r) {
    if (r.structure == mem_structure::SHARED) return m_shared_accepts == 0 && m_shared_busy_until <= now;
    return m_bank_accepts[r.bank] == 0;
  };
  if (auto i = select_in_order(m_base.requests, m_base.next, free)) {
    const mem_request r = m_base.requests[*i];
    ++m_base.next;
    const bool last = m_base.next == m_base.requests.size();
    if (last) m_base = baseline_latch{};
    on_granted(r, now, completed);
  }
}

void memory_pipeline::cycle_improved_requests(uint64_t now, std::vector<inflight_inst>& completed) {
  const unsigned subs = m_cfg.num_sub_cores;

  // Arbitration: every free resource goes to some buffered request. The
  // sub-core priority rotates every cycle; inside a sub-core the lowest
  // (instruction, generation) order wins.
  const std::size_t start = m_req_arbiter.pointer();
  auto try_resource = [&](mem_structure st, unsigned bank) {
    for (unsigned k = 0; k < subs; ++k) {
      auto& buf = m_sub[(start + k) % subs].buffer;
      auto best = buf.end();
      for (auto it = buf.begin(); it != buf.end(); ++it) {
        if (it->structure != st || (st == mem_structure::L1D && it->bank != bank)) continue;
        if (best == buf.end() || it->parent_seq < best->parent_seq ||
            (it->parent_seq == best->parent_seq && it->gen_index < best->gen_index))
          best = it;
      }
      if (best == buf.end()) continue;
      const mem_request r = *best;
      buf.erase(best);
      on_granted(r, now, completed);
      return;
    }
  };
  for (unsigned b = 0; b < m_cfg.l1d_banks; ++b) try_resource(mem_structure::L1D, b);
  try_resource(mem_structure::SHARED, 0);
  m_req_arbiter.rotate();

  for (unsigned s = 0; s < subs; ++s) {
    auto& sp = m_sub[s];
    // Address latch: one coalescing step, or one cycle of a shared access.
    if (sp.addr.occupied()) {
      if (sp.buffer.size() < m_cfg.mem_request_buffer_entries) {
        const uint64_t seq = sp.addr.parent_seq;
        auto r = coalesce_step(sp.addr, m_cfg);
        assert(r);
        ++m_stats.coalescing_cycles;
        ++m_stats.requests_generated;
        m_stats.comparators_step = comparator_count_step(m_cfg.warp_width);
        sp.buffer.push_back(*r);
        auto& t = m_tracking.at(seq);
        ++t.generated;
        if (!sp.addr.occupied()) {
          t.all_generated = true;
          const auto expected = coalesce_full(*t.inst.inst, m_cfg).requests.size();
          if (expected != t.generated) ++m_stats.coalescing_mismatches;
        }
      } else {
        ++m_stats.request_buffer_full_cycles;
      }
    } else if (sp.shared_inst) {
      if (sp.shared_remaining > 1) {
        --sp.shared_remaining;
      } else if (sp.buffer.size() < m_cfg.mem_request_buffer_entries) {
        const instruction& in = *sp.shared_inst->inst;
        mem_request r;
        r.structure = mem_structure::SHARED;
        r.sector_addr = sector_of(in.mem_addrs[std::countr_zero(in.active_mask)], m_cfg.sector_bytes);
        r.lane_mask = in.active_mask;
        r.parent_seq = sp.shared_inst->seq;
        sp.buffer.push_back(r);
        ++m_stats.requests_generated;
        auto& t = m_tracking.at(r.parent_seq);
        t.generated = 1;
        t.all_generated = true;
        sp.shared_inst.reset();
        sp.shared_remaining = 0;
      } else {
        ++m_stats.request_buffer_full_cycles;
      }
    }

    // The dispatch latch hands over to an empty address latch; it starts
    // processing next cycle.
    if (sp.dispatch && !sp.addr.occupied() && !sp.shared_inst) {
      const inflight_inst d = *sp.dispatch;
      sp.dispatch.reset();
      if (is_global(d.inst->op)) {
        sp.addr.load(*d.inst, d.seq);
      } else {
        sp.shared_inst = d;
        sp.shared_remaining = shared_mem_conflict_cycles(*d.inst, m_cfg);
        m_stats.shared_conflict_cycles += sp.shared_remaining - 1;
      }
    }
  }
}

std::vector<inflight_inst> memory_pipeline::cycle(uint64_t now, std::span<register_file_ports* const> ports) {
  std::fill(m_bank_accepts.begin(), m_bank_accepts.end(), 0u);
  m_shared_accepts = 0;

  std::vector<inflight_inst> completed =
      m_model == hw_model::baseline ? writeback_baseline(now, ports) : writeback_improved(now, ports);

  if (m_model == hw_model::baseline)
    cycle_baseline_requests(now, completed);
  else
    cycle_improved_requests(now, completed);

  for (unsigned a : m_bank_accepts) m_stats.max_bank_accepts_per_cycle = std::max(m_stats.max_bank_accepts_per_cycle, a);
  m_stats.max_shared_accepts_per_cycle = std::max(m_stats.max_shared_accepts_per_cycle, m_shared_accepts);
  m_l1d.retire_fills(now);
  return completed;
}

}  // namespace smsim
