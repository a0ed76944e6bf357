#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "smsim/arbiter.h"
#include "smsim/cache.h"
#include "smsim/config.h"
#include "smsim/warp.h"

namespace smsim {

// Where each kernel's code lives in the instruction address space. Bases
// are line-aligned and each kernel gets at least its image size.
class kernel_layout {
 public:
  kernel_layout() = default;
  kernel_layout(const trace_file& t, unsigned line_bytes);
  // Explicit image sizes, one per kernel.
  kernel_layout(std::span<const uint64_t> image_bytes, unsigned line_bytes);

  uint64_t base(unsigned kernel_id) const { return kernel_id < m_bases.size() ? m_bases[kernel_id] : 0; }
  std::size_t size() const { return m_bases.size(); }

 private:
  std::vector<uint64_t> m_bases;
};

// Baseline feeds the raw pc to the cache, so every kernel aliases onto the
// same lines. Improved relocates each kernel to its own base.
uint64_t effective_fetch_addr(const kernel_layout& layout, unsigned kernel_id, uint64_t pc, hw_model model);

// Number of instructions a fetch starting at stream[next] delivers, at most
// two. Baseline takes the next two trace instructions whatever their
// addresses. Improved stops at the end of the cache line and after a
// control-flow discontinuity (taken branch).
std::size_t fetch_group(std::span<const instruction> stream, std::size_t next, unsigned free_slots,
                        unsigned line_bytes, hw_model model);

struct frontend_stats {
  uint64_t fetched = 0;
  uint64_t decoded = 0;
  uint64_t fetch_groups = 0;
  uint64_t l0i_blocked = 0;  // fetch candidates held back by a full L0I miss queue
  uint64_t l1i_grants = 0;
  unsigned max_cache_accesses_per_cycle = 0;   // baseline shared cache
  unsigned max_l0i_accesses_per_cycle = 0;     // improved, per sub-core
  unsigned max_l1i_grants_per_cycle = 0;       // improved
  unsigned max_l0i_outstanding = 0;            // improved, per sub-core
};

class frontend {
 public:
  frontend(const gpu_config& cfg, kernel_layout layout);

  // One cycle in reverse order: decode, fetch, L1I arbitration, fills.
  void cycle(uint64_t now, std::span<warp_state> warps);

  void set_layout(kernel_layout layout) { m_layout = std::move(layout); }

  // Called with (cycle, sub_core) on every L1I grant of the improved model.
  void set_grant_observer(std::function<void(uint64_t, unsigned)> f) { m_grant_observer = std::move(f); }

  // True while any fetch, fill or L1I request is in flight.
  bool busy() const;

  hw_model model() const { return m_model; }
  const frontend_stats& stats() const { return m_stats; }
  const cache_model& l1i() const { return m_l1i; }
  const cache_model& l0i(unsigned sub_core) const { return m_l0i[sub_core]; }
  std::size_t num_l0i() const { return m_l0i.size(); }

 private:
  enum class entry_state { waiting_cache, ready_for_decode };

  struct fetch_entry {
    unsigned warp = 0;  // index into the warp span
    std::size_t count = 0;
    uint64_t line_addr = 0;
    entry_state state = entry_state::waiting_cache;
    uint64_t decode_at = 0;
    uint64_t issue_cycle = 0;
  };

  struct sub_core_frontend {
    std::size_t rr = 0;  // position in the sub-core's warp list
    std::vector<fetch_entry> entries;  // oldest first
    std::vector<uint64_t> l1i_requests;  // queued L0I miss lines
  };

  void cycle_baseline(uint64_t now, std::span<warp_state> warps);
  void cycle_improved(uint64_t now, std::span<warp_state> warps);
  void deliver(warp_state& w, std::size_t count);
  uint64_t fetch_addr(const warp_state& w) const;

  gpu_config m_cfg;
  hw_model m_model;
  kernel_layout m_layout;
  cache_model m_l1i;
  std::vector<cache_model> m_l0i;
  round_robin_arbiter m_l1i_arbiter;
  std::size_t m_rr = 0;  // baseline SM-wide warp pointer
  std::vector<fetch_entry> m_waiting;  // baseline fetches waiting on a fill
  std::vector<sub_core_frontend> m_sub;
  frontend_stats m_stats;
  std::function<void(uint64_t, unsigned)> m_grant_observer;
};

}  // namespace smsim
