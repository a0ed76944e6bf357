#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smsim/trace.h"

namespace smsim {

constexpr unsigned bank_of(reg_id r, unsigned num_banks) { return r % num_banks; }

// An issued instruction travelling through the back end.
struct inflight_inst {
  const instruction* inst = nullptr;
  unsigned warp = 0;
  unsigned sub_core = 0;
  uint64_t seq = 0;  // SM-wide issue order
  uint64_t issue_cycle = 0;
};

// Per-bank port usage of one sub-core's register file for the current
// cycle. Each port serves either a read or a write; writes go first.
class register_file_ports {
 public:
  register_file_ports(unsigned banks = 8, unsigned ports = 2) : m_ports(ports), m_reads(banks), m_writes(banks) {}

  void new_cycle();
  unsigned banks() const { return static_cast<unsigned>(m_reads.size()); }
  unsigned ports() const { return m_ports; }

  bool can_write(unsigned bank) const { return used(bank) < m_ports; }
  // Records a write whether or not a port is left; returns false when the
  // write exceeded the port count.
  bool write(unsigned bank);
  bool try_read(unsigned bank);

  unsigned reads(unsigned bank) const { return m_reads[bank]; }
  unsigned writes(unsigned bank) const { return m_writes[bank]; }
  unsigned used(unsigned bank) const { return m_reads[bank] + m_writes[bank]; }

 private:
  unsigned m_ports;
  std::vector<unsigned> m_reads;
  std::vector<unsigned> m_writes;
};

struct read_request {
  unsigned cu = 0;
  unsigned src_index = 0;
  unsigned bank = 0;
  uint64_t alloc_cycle = 0;
};

// Grants reads oldest CU first, then by source index, while the bank has a
// port left after this cycle's writes. Returns indices into `pending`.
std::vector<std::size_t> arbitrate_reads(std::span<const read_request> pending, register_file_ports& ports);

struct collector_unit {
  std::optional<inflight_inst> occupant;
  std::vector<bool> src_read;
  uint64_t alloc_cycle = 0;

  bool occupied() const { return occupant.has_value(); }
  bool operands_ready() const;
};

struct collector_stats {
  uint64_t read_port_conflicts = 0;
  uint64_t cu_stall_cycles = 0;
  uint64_t operand_reads = 0;
};

// The collector units and register-file ports of one sub-core.
class operand_collector {
 public:
  operand_collector(unsigned num_cus, unsigned banks, unsigned ports);

  bool has_free_cu() const;
  unsigned occupied() const;
  void allocate(const inflight_inst& inst, uint64_t now);

  // Collects operand reads for every CU allocated before `now`.
  void read_operands(uint64_t now);

  // CUs whose sources are all read and that were allocated before `now`,
  // oldest first.
  std::vector<unsigned> ready_cus(uint64_t now) const;
  const collector_unit& cu(unsigned i) const { return m_cus[i]; }
  std::span<const collector_unit> cus() const { return m_cus; }
  void release(unsigned i);

  register_file_ports& ports() { return m_ports; }
  const register_file_ports& ports() const { return m_ports; }
  collector_stats& stats() { return m_stats; }
  const collector_stats& stats() const { return m_stats; }

 private:
  std::vector<collector_unit> m_cus;
  register_file_ports m_ports;
  unsigned m_banks;
  collector_stats m_stats;
};

}  // namespace smsim
