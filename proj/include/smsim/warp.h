#pragma once

#include <cstdint>
#include <deque>
#include <span>

#include "smsim/trace.h"

namespace smsim {

// Per-warp FIFO of decoded instructions, bounded by ibuffer_entries_per_warp.
class ibuffer {
 public:
  explicit ibuffer(unsigned capacity = 2) : m_capacity(capacity) {}

  unsigned capacity() const { return m_capacity; }
  unsigned size() const { return static_cast<unsigned>(m_slots.size()); }
  unsigned free_slots() const { return m_capacity - size(); }
  bool empty() const { return m_slots.empty(); }

  // Returns false (and inserts nothing) when full.
  bool push(const instruction* inst) {
    if (m_slots.size() >= m_capacity) return false;
    m_slots.push_back(inst);
    return true;
  }
  const instruction* front() const { return m_slots.empty() ? nullptr : m_slots.front(); }
  void pop() { m_slots.pop_front(); }
  void clear() { m_slots.clear(); }

 private:
  unsigned m_capacity;
  std::deque<const instruction*> m_slots;
};

struct warp_state {
  unsigned warp_id = 0;
  unsigned sub_core = 0;
  unsigned kernel_id = 0;
  std::span<const instruction> stream;
  std::size_t next_fetch = 0;  // index of the next instruction to fetch
  ibuffer ibuf;
  bool fetch_pending = false;  // a fetch group is in flight for this warp
  unsigned reserved_slots = 0;  // ibuffer slots promised to an in-flight fetch
  bool exit_issued = false;
  bool exited = false;
  uint64_t inflight = 0;  // issued, not yet written back (EXIT excluded)

  bool active() const { return !exited; }
  bool fetch_done() const { return next_fetch >= stream.size(); }
};

}  // namespace smsim
