#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "smsim/config.h"
#include "smsim/operand_collector.h"

namespace smsim {

struct writeback_entry {
  inflight_inst inst;
  std::optional<unsigned> bank;  // destination bank; empty when nothing is written
};

// Future write-backs of fixed-latency instructions for one sub-core.
//
// Baseline only looks for a free result bus in the completion cycle and
// ignores which register-file bank is written. Improved limits the writes
// landing on one bank in one cycle to the number of bank ports.
class writeback_schedule {
 public:
  writeback_schedule(hw_model model, unsigned bus_count, unsigned ports_per_bank, unsigned banks);

  hw_model model() const { return m_model; }

  bool try_reserve_baseline(uint64_t now, unsigned latency, const writeback_entry& e);
  bool try_reserve_improved(uint64_t now, unsigned latency, unsigned dest_bank, const writeback_entry& e);
  // Uses the configured model. Entries without a bank always succeed.
  bool try_reserve(uint64_t now, unsigned latency, const writeback_entry& e);

  // Pops everything scheduled for `now`.
  std::vector<writeback_entry> commit(uint64_t now);

  unsigned writes_at(uint64_t cycle) const;
  unsigned writes_at(uint64_t cycle, unsigned bank) const;
  std::size_t pending() const;

  uint64_t reservations() const { return m_reservations; }
  uint64_t completions() const { return m_completions; }
  // Largest number of writes ever scheduled to one bank in one cycle.
  unsigned max_bank_writes() const { return m_max_bank_writes; }

 private:
  void insert(uint64_t cycle, const writeback_entry& e);

  hw_model m_model;
  unsigned m_bus_count;
  unsigned m_ports;
  unsigned m_banks;
  std::map<uint64_t, std::vector<writeback_entry>> m_slots;
  uint64_t m_reservations = 0;
  uint64_t m_completions = 0;
  unsigned m_max_bank_writes = 0;
};

}  // namespace smsim
