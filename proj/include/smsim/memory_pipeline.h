#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "smsim/arbiter.h"
#include "smsim/cache.h"
#include "smsim/config.h"
#include "smsim/operand_collector.h"

namespace smsim {

enum class mem_structure : uint8_t { L1D, SHARED };

struct mem_request {
  uint64_t sector_addr = 0;
  mem_structure structure = mem_structure::L1D;
  unsigned bank = 0;  // L1D bank; 0 for shared memory
  uint32_t lane_mask = 0;
  unsigned gen_index = 0;
  uint64_t parent_seq = 0;

  bool operator==(const mem_request&) const = default;
};

// Comparators needed to coalesce a whole warp in one cycle: every lane
// against every other lane.
constexpr uint64_t comparator_count_full(unsigned warp_width) {
  return static_cast<uint64_t>(warp_width) * (warp_width - 1) / 2;
}
// Comparators needed when one lane is resolved per cycle against all lanes.
constexpr uint64_t comparator_count_step(unsigned warp_width) { return warp_width; }

constexpr uint64_t sector_of(uint64_t addr, unsigned sector_bytes) { return addr / sector_bytes * sector_bytes; }
constexpr unsigned l1d_bank_of(uint64_t sector_addr, unsigned sector_bytes, unsigned banks) {
  return static_cast<unsigned>((sector_addr / sector_bytes) % banks);
}

struct coalesce_result {
  std::vector<mem_request> requests;
  uint64_t comparators = 0;
};

// Single-step coalescing of a global access: one request per distinct
// sector touched by an active lane, in order of each sector's first lane.
coalesce_result coalesce_full(const instruction& inst, const gpu_config& cfg, uint64_t parent_seq = 0);

// Holds a global access while its lanes are coalesced one request per cycle.
struct address_latch {
  const instruction* inst = nullptr;
  uint64_t parent_seq = 0;
  uint32_t unprocessed = 0;  // active lanes not yet covered by a request
  unsigned emitted = 0;

  bool occupied() const { return inst != nullptr; }
  void load(const instruction& in, uint64_t seq) {
    inst = &in;
    parent_seq = seq;
    unprocessed = in.active_mask;
    emitted = 0;
  }
  void clear() { *this = address_latch{}; }
};

// One coalescing cycle: the lowest unprocessed lane is compared against
// every other unprocessed lane and all lanes sharing its sector leave as
// one request. Frees the latch after the last lane.
std::optional<mem_request> coalesce_step(address_latch& latch, const gpu_config& cfg);

// Cycles a shared-memory access needs: the largest number of distinct words
// any bank must serve. Lanes reading the same word are broadcast.
unsigned shared_mem_conflict_cycles(const instruction& inst, const gpu_config& cfg);

// In-order selection: only the request at `next` may go, and only if its
// resource is free.
std::optional<std::size_t> select_in_order(std::span<const mem_request> reqs, std::size_t next,
                                           const std::function<bool(const mem_request&)>& resource_free);
// Out-of-order selection: the lowest-generation request whose resource is
// free.
std::optional<std::size_t> select_any(std::span<const mem_request> reqs,
                                      const std::function<bool(const mem_request&)>& resource_free);

struct memory_stats {
  uint64_t dispatched = 0;
  uint64_t dispatch_latch_stall_cycles = 0;
  uint64_t coalescing_cycles = 0;
  uint64_t requests_generated = 0;
  uint64_t requests_granted = 0;
  uint64_t responses_consumed = 0;
  uint64_t shared_conflict_cycles = 0;
  uint64_t wb_latch_stall_cycles = 0;
  uint64_t writebacks = 0;
  uint64_t request_buffer_full_cycles = 0;
  uint64_t comparators_full = 0;    // per-cycle comparator need, single-step coalescer
  uint64_t comparators_step = 0;    // per-cycle comparator need, iterative coalescer
  unsigned max_bank_accepts_per_cycle = 0;
  unsigned max_shared_accepts_per_cycle = 0;
  uint64_t coalescing_mismatches = 0;  // improved: cycles != requests for an instruction
};

// The memory execution pipeline of one SM.
//
// Baseline: a single SM-wide dispatch latch; address calculation,
// coalescing and request selection happen in one cycle; requests leave in
// generation order and the instruction holds the latch until the last one
// is sent; one write-back latch for the whole SM.
//
// Improved: per sub-core dispatch latch, address latch (one request
// coalesced per cycle), request buffer and write-back latch. Buffered
// requests from all sub-cores meet at a round-robin arbiter that hands any
// free L1D bank or the shared memory to any waiting request.
class memory_pipeline {
 public:
  explicit memory_pipeline(const gpu_config& cfg);

  hw_model model() const { return m_model; }

  bool can_accept(unsigned sub_core) const;
  void accept(const inflight_inst& inst, uint64_t now);
  void note_dispatch_stall() { ++m_stats.dispatch_latch_stall_cycles; }

  // Advances one cycle: write-back, request arbitration, coalescing, latch
  // moves. Register writes use `ports` (indexed by sub-core). Returns the
  // instructions that completed this cycle: loads at their register write,
  // stores when their last request is accepted.
  std::vector<inflight_inst> cycle(uint64_t now, std::span<register_file_ports* const> ports);

  bool busy() const;
  const memory_stats& stats() const { return m_stats; }
  const cache_model& l1d() const { return m_l1d; }

 private:
  struct tracking {
    inflight_inst inst;
    unsigned granted = 0;
    unsigned generated = 0;
    bool all_generated = false;
    uint64_t last_ready = 0;
    mem_structure structure = mem_structure::L1D;
  };

  struct completion {
    inflight_inst inst;
    uint64_t ready = 0;
    mem_structure structure = mem_structure::L1D;
    unsigned requests = 0;
  };

  struct wb_latch {
    std::optional<completion> occupant;
    uint64_t entered = 0;
  };

  struct baseline_latch {
    std::optional<inflight_inst> inst;
    std::vector<mem_request> requests;
    std::size_t next = 0;
    bool coalesced = false;
  };

  struct sub_pipe {
    std::optional<inflight_inst> dispatch;
    address_latch addr;
    unsigned shared_remaining = 0;  // cycles left for a shared access in the address latch
    std::optional<inflight_inst> shared_inst;
    std::vector<mem_request> buffer;
    std::vector<completion> done;  // loads whose data has returned or will return
    wb_latch wb;
  };

  std::vector<inflight_inst> writeback_baseline(uint64_t now, std::span<register_file_ports* const> ports);
  std::vector<inflight_inst> writeback_improved(uint64_t now, std::span<register_file_ports* const> ports);
  bool try_register_write(wb_latch& latch, uint64_t now, std::span<register_file_ports* const> ports);
  void cycle_baseline_requests(uint64_t now, std::vector<inflight_inst>& completed);
  void cycle_improved_requests(uint64_t now, std::vector<inflight_inst>& completed);

  // Performs the access for an accepted request; returns data ready cycle.
  uint64_t service(const mem_request& r, bool is_store, uint64_t now);
  void on_granted(const mem_request& r, uint64_t now, std::vector<inflight_inst>& completed);
  void maybe_finish(uint64_t seq, std::vector<inflight_inst>& completed);

  gpu_config m_cfg;
  hw_model m_model;
  cache_model m_l1d;
  std::map<uint64_t, tracking> m_tracking;  // by issue seq

  // Per-cycle resource use.
  std::vector<unsigned> m_bank_accepts;
  unsigned m_shared_accepts = 0;
  uint64_t m_shared_busy_until = 0;  // baseline: shared memory occupied through conflicts

  baseline_latch m_base;
  std::vector<completion> m_base_done;
  wb_latch m_base_wb;

  std::vector<sub_pipe> m_sub;
  round_robin_arbiter m_req_arbiter;
  round_robin_arbiter m_wb_arbiter;

  memory_stats m_stats;
};

}  // namespace smsim
