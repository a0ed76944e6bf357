#include "smsim/frontend.h"

#include <algorithm>
#include <cassert>
#include <string>

namespace smsim {

namespace {

uint64_t align_up(uint64_t x, uint64_t a) { return (x + a - 1) / a * a; }

}  // namespace

kernel_layout::kernel_layout(const trace_file& t, unsigned line_bytes) {
  std::vector<uint64_t> sizes;
  for (const auto& k : t.kernels) sizes.push_back(k.image_bytes());
  *this = kernel_layout(sizes, line_bytes);
}

kernel_layout::kernel_layout(std::span<const uint64_t> image_bytes, unsigned line_bytes) {
  uint64_t next = 0;
  for (uint64_t sz : image_bytes) {
    m_bases.push_back(next);
    next += align_up(std::max<uint64_t>(sz, 1), line_bytes);
  }
}

uint64_t effective_fetch_addr(const kernel_layout& layout, unsigned kernel_id, uint64_t pc, hw_model model) {
  if (model == hw_model::baseline) return pc;
  return layout.base(kernel_id) + pc;
}

std::size_t fetch_group(std::span<const instruction> stream, std::size_t next, unsigned free_slots,
                        unsigned line_bytes, hw_model model) {
  if (next >= stream.size() || free_slots == 0) return 0;
  const std::size_t limit = std::min<std::size_t>({2, free_slots, stream.size() - next});
  if (model == hw_model::baseline || limit < 2) return limit;

  const auto& first = stream[next];
  const auto& second = stream[next + 1];
  const bool sequential = second.pc == first.pc + instruction_bytes;
  const bool same_line = first.pc / line_bytes == second.pc / line_bytes;
  return sequential && same_line ? 2 : 1;
}

frontend::frontend(const gpu_config& cfg, kernel_layout layout)
    : m_cfg(cfg),
      m_model(cfg.frontend_model),
      m_layout(std::move(layout)),
      m_l1i("L1I", cfg.l1i_size_bytes, cfg.cache_line_bytes, cfg.cache_assoc),
      m_l1i_arbiter(cfg.num_sub_cores),
      m_sub(cfg.num_sub_cores) {
  if (m_model == hw_model::improved) {
    for (unsigned s = 0; s < cfg.num_sub_cores; ++s)
      m_l0i.emplace_back("L0I[" + std::to_string(s) + "]", cfg.l0i_size_bytes, cfg.cache_line_bytes,
                         cfg.cache_assoc);
  }
}

uint64_t frontend::fetch_addr(const warp_state& w) const {
  return effective_fetch_addr(m_layout, w.kernel_id, w.stream[w.next_fetch].pc, m_model);
}

void frontend::deliver(warp_state& w, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const bool ok = w.ibuf.push(&w.stream[w.next_fetch]);
    assert(ok);
    (void)ok;
    ++w.next_fetch;
  }
  w.fetch_pending = false;
  w.reserved_slots = 0;
  m_stats.decoded += count;
}

bool frontend::busy() const {
  if (!m_waiting.empty() || m_l1i.outstanding() != 0) return true;
  for (const auto& s : m_sub)
    if (!s.entries.empty() || !s.l1i_requests.empty()) return true;
  for (const auto& c : m_l0i)
    if (c.outstanding() != 0) return true;
  return false;
}

void frontend::cycle(uint64_t now, std::span<warp_state> warps) {
  if (m_model == hw_model::baseline)
    cycle_baseline(now, warps);
  else
    cycle_improved(now, warps);
}

void frontend::cycle_baseline(uint64_t now, std::span<warp_state> warps) {
  // Fetch + decode, up to one action per sub-core's worth of bandwidth,
  // all against the one shared instruction cache and all in this cycle.
  unsigned actions = 0;
  const std::size_t n = warps.size();
  for (std::size_t k = 0; k < n && actions < m_cfg.num_sub_cores; ++k) {
    const std::size_t idx = (m_rr + k) % n;
    warp_state& w = warps[idx];
    if (!w.active() || w.fetch_done() || w.fetch_pending || w.ibuf.free_slots() == 0) continue;

    const std::size_t count =
        fetch_group(w.stream, w.next_fetch, w.ibuf.free_slots(), m_cfg.cache_line_bytes, hw_model::baseline);
    const uint64_t addr = fetch_addr(w);
    auto r = m_l1i.access(addr);
    ++actions;
    ++m_stats.fetch_groups;
    m_stats.fetched += count;
    if (r.hit && r.ready_cycle <= now) {
      deliver(w, count);
    } else {
      if (!r.hit) m_l1i.schedule_fill(addr, now + m_cfg.l2_latency_cycles);
      w.fetch_pending = true;
      w.reserved_slots = static_cast<unsigned>(count);
      m_waiting.push_back({static_cast<unsigned>(idx), count, m_l1i.line_of(addr), entry_state::waiting_cache, 0, now});
    }
    m_rr = (idx + 1) % n;
  }
  m_stats.max_cache_accesses_per_cycle = std::max(m_stats.max_cache_accesses_per_cycle, actions);

  // Fills land at the end of the cycle; the warp can issue next cycle.
  for (const auto& f : m_l1i.retire_fills(now)) {
    auto it = m_waiting.begin();
    while (it != m_waiting.end()) {
      if (it->line_addr == f.line_addr) {
        deliver(warps[it->warp], it->count);
        it = m_waiting.erase(it);
      } else {
        ++it;
      }
    }
  }
}

void frontend::cycle_improved(uint64_t now, std::span<warp_state> warps) {
  const unsigned subs = m_cfg.num_sub_cores;
  const unsigned need_slots = std::min(2u, m_cfg.ibuffer_entries_per_warp);

  for (unsigned s = 0; s < subs; ++s) {
    auto& sc = m_sub[s];
    auto& l0 = m_l0i[s];

    // Decode: one ready entry per sub-core per cycle, oldest first.
    for (auto it = sc.entries.begin(); it != sc.entries.end(); ++it) {
      if (it->state == entry_state::ready_for_decode && it->decode_at <= now) {
        deliver(warps[it->warp], it->count);
        sc.entries.erase(it);
        break;
      }
    }

    // Fetch: one warp of this sub-core probes the private L0I.
    std::vector<std::size_t> mine;
    for (std::size_t i = s; i < warps.size(); i += subs) mine.push_back(i);
    unsigned l0_accesses = 0;
    bool blocked = false;
    for (std::size_t k = 0; k < mine.size(); ++k) {
      const std::size_t pos = (sc.rr + k) % mine.size();
      warp_state& w = warps[mine[pos]];
      if (!w.active() || w.fetch_done() || w.fetch_pending || w.ibuf.free_slots() < need_slots) continue;
      const uint64_t addr = fetch_addr(w);
      if (!l0.probe(addr) && l0.outstanding() >= m_cfg.l0i_max_outstanding) {
        blocked = true;
        continue;
      }
      const std::size_t count = fetch_group(w.stream, w.next_fetch, w.ibuf.free_slots(), m_cfg.cache_line_bytes,
                                            hw_model::improved);
      auto r = l0.access(addr);
      ++l0_accesses;
      ++m_stats.fetch_groups;
      m_stats.fetched += count;
      fetch_entry e{static_cast<unsigned>(mine[pos]), count, l0.line_of(addr), entry_state::waiting_cache, 0, now};
      if (r.hit && r.ready_cycle <= now) {
        e.state = entry_state::ready_for_decode;
        e.decode_at = now + 1;
      } else if (!r.hit) {
        sc.l1i_requests.push_back(e.line_addr);
      }
      w.fetch_pending = true;
      w.reserved_slots = static_cast<unsigned>(count);
      sc.entries.push_back(e);
      sc.rr = (pos + 1) % mine.size();
      break;
    }
    if (blocked && l0_accesses == 0) ++m_stats.l0i_blocked;
    m_stats.max_l0i_accesses_per_cycle = std::max(m_stats.max_l0i_accesses_per_cycle, l0_accesses);
    m_stats.max_l0i_outstanding =
        std::max(m_stats.max_l0i_outstanding, static_cast<unsigned>(l0.outstanding()));
  }

  // L1I: one L0I miss granted per cycle, round-robin between sub-cores.
  auto winner = m_l1i_arbiter.arbitrate([&](std::size_t s) { return !m_sub[s].l1i_requests.empty(); });
  unsigned grants = 0;
  if (winner) {
    const unsigned s = static_cast<unsigned>(*winner);
    auto& sc = m_sub[s];
    const uint64_t line = sc.l1i_requests.front();
    sc.l1i_requests.erase(sc.l1i_requests.begin());
    auto r = m_l1i.access(line);
    uint64_t l0_ready;
    if (r.hit) {
      l0_ready = std::max<uint64_t>(now + m_cfg.l1i_hit_latency, r.ready_cycle);
    } else {
      l0_ready = now + m_cfg.l2_latency_cycles;
      m_l1i.schedule_fill(line, l0_ready);
    }
    m_l0i[s].schedule_fill(line, l0_ready);
    ++grants;
    ++m_stats.l1i_grants;
    if (m_grant_observer) m_grant_observer(now, s);
  }
  m_stats.max_l1i_grants_per_cycle = std::max(m_stats.max_l1i_grants_per_cycle, grants);
  m_l1i.retire_fills(now);

  // L0I fills complete; waiting entries decode next cycle.
  for (unsigned s = 0; s < subs; ++s) {
    for (const auto& f : m_l0i[s].retire_fills(now)) {
      for (auto& e : m_sub[s].entries) {
        if (e.state == entry_state::waiting_cache && e.line_addr == f.line_addr) {
          e.state = entry_state::ready_for_decode;
          e.decode_at = now + 1;
        }
      }
    }
  }
}

}  // namespace smsim
