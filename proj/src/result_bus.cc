#include "smsim/result_bus.h"

#include <algorithm>
#include <cassert>

namespace smsim {

writeback_schedule::writeback_schedule(hw_model model, unsigned bus_count, unsigned ports_per_bank, unsigned banks)
    : m_model(model), m_bus_count(bus_count), m_ports(ports_per_bank), m_banks(banks) {}

unsigned writeback_schedule::writes_at(uint64_t cycle) const {
  auto it = m_slots.find(cycle);
  if (it == m_slots.end()) return 0;
  return static_cast<unsigned>(
      std::count_if(it->second.begin(), it->second.end(), [](const writeback_entry& e) { return e.bank.has_value(); }));
}

unsigned writeback_schedule::writes_at(uint64_t cycle, unsigned bank) const {
  auto it = m_slots.find(cycle);
  if (it == m_slots.end()) return 0;
  return static_cast<unsigned>(std::count_if(it->second.begin(), it->second.end(),
                                             [bank](const writeback_entry& e) { return e.bank == bank; }));
}

std::size_t writeback_schedule::pending() const {
  std::size_t n = 0;
  for (const auto& [c, v] : m_slots) n += v.size();
  return n;
}

void writeback_schedule::insert(uint64_t cycle, const writeback_entry& e) {
  m_slots[cycle].push_back(e);
  ++m_reservations;
  if (e.bank) m_max_bank_writes = std::max(m_max_bank_writes, writes_at(cycle, *e.bank));
}

bool writeback_schedule::try_reserve_baseline(uint64_t now, unsigned latency, const writeback_entry& e) {
  assert(latency >= 1);
  const uint64_t at = now + latency;
  if (e.bank && writes_at(at) >= m_bus_count) return false;
  insert(at, e);
  return true;
}

bool writeback_schedule::try_reserve_improved(uint64_t now, unsigned latency, unsigned dest_bank,
                                              const writeback_entry& e) {
  assert(latency >= 1 && dest_bank < m_banks);
  const uint64_t at = now + latency;
  if (writes_at(at, dest_bank) >= m_ports) return false;
  writeback_entry copy = e;
  copy.bank = dest_bank;
  insert(at, copy);
  return true;
}

bool writeback_schedule::try_reserve(uint64_t now, unsigned latency, const writeback_entry& e) {
  if (!e.bank) {
    insert(now + latency, e);
    return true;
  }
  if (m_model == hw_model::baseline) return try_reserve_baseline(now, latency, e);
  return try_reserve_improved(now, latency, *e.bank, e);
}

std::vector<writeback_entry> writeback_schedule::commit(uint64_t now) {
  auto it = m_slots.find(now);
  if (it == m_slots.end()) return {};
  assert(m_slots.begin()->first >= now);
  std::vector<writeback_entry> done = std::move(it->second);
  m_slots.erase(it);
  m_completions += done.size();
  return done;
}

}  // namespace smsim
