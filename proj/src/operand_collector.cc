#include "smsim/operand_collector.h"

#include <algorithm>
#include <cassert>
#include <numeric>

namespace smsim {

void register_file_ports::new_cycle() {
  std::fill(m_reads.begin(), m_reads.end(), 0u);
  std::fill(m_writes.begin(), m_writes.end(), 0u);
}

bool register_file_ports::write(unsigned bank) {
  const bool fits = used(bank) < m_ports;
  ++m_writes[bank];
  return fits;
}

bool register_file_ports::try_read(unsigned bank) {
  if (used(bank) >= m_ports) return false;
  ++m_reads[bank];
  return true;
}

std::vector<std::size_t> arbitrate_reads(std::span<const read_request> pending, register_file_ports& ports) {
  std::vector<std::size_t> order(pending.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = pending[a];
    const auto& y = pending[b];
    if (x.alloc_cycle != y.alloc_cycle) return x.alloc_cycle < y.alloc_cycle;
    if (x.cu != y.cu) return x.cu < y.cu;
    return x.src_index < y.src_index;
  });
  std::vector<std::size_t> granted;
  for (std::size_t i : order)
    if (ports.try_read(pending[i].bank)) granted.push_back(i);
  return granted;
}

bool collector_unit::operands_ready() const {
  return occupied() && std::all_of(src_read.begin(), src_read.end(), [](bool b) { return b; });
}

operand_collector::operand_collector(unsigned num_cus, unsigned banks, unsigned ports)
    : m_cus(num_cus), m_ports(banks, ports), m_banks(banks) {}

bool operand_collector::has_free_cu() const {
  return std::any_of(m_cus.begin(), m_cus.end(), [](const collector_unit& c) { return !c.occupied(); });
}

unsigned operand_collector::occupied() const {
  return static_cast<unsigned>(
      std::count_if(m_cus.begin(), m_cus.end(), [](const collector_unit& c) { return c.occupied(); }));
}

void operand_collector::allocate(const inflight_inst& inst, uint64_t now) {
  for (auto& c : m_cus) {
    if (c.occupied()) continue;
    c.occupant = inst;
    c.src_read.assign(inst.inst->src_regs.size(), false);
    c.alloc_cycle = now;
    return;
  }
  assert(false && "allocate without a free collector unit");
}

void operand_collector::read_operands(uint64_t now) {
  std::vector<read_request> pending;
  for (unsigned i = 0; i < m_cus.size(); ++i) {
    const auto& c = m_cus[i];
    if (!c.occupied() || c.alloc_cycle >= now) continue;
    for (unsigned s = 0; s < c.src_read.size(); ++s)
      if (!c.src_read[s]) pending.push_back({i, s, bank_of(c.occupant->inst->src_regs[s], m_banks), c.alloc_cycle});
  }
  if (pending.empty()) return;
  const auto granted = arbitrate_reads(pending, m_ports);
  for (std::size_t g : granted) m_cus[pending[g].cu].src_read[pending[g].src_index] = true;
  m_stats.operand_reads += granted.size();
  m_stats.read_port_conflicts += pending.size() - granted.size();
}

std::vector<unsigned> operand_collector::ready_cus(uint64_t now) const {
  std::vector<unsigned> ready;
  for (unsigned i = 0; i < m_cus.size(); ++i)
    if (m_cus[i].operands_ready() && m_cus[i].alloc_cycle < now) ready.push_back(i);
  std::stable_sort(ready.begin(), ready.end(), [&](unsigned a, unsigned b) {
    return m_cus[a].occupant->seq < m_cus[b].occupant->seq;
  });
  return ready;
}

void operand_collector::release(unsigned i) {
  m_cus[i].occupant.reset();
  m_cus[i].src_read.clear();
}

}  // namespace smsim
