#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "smsim/cache.h"
#include "smsim/config.h"

namespace smsim {

inline constexpr const char* k_simulator_version = "smsim 1.0.0";

struct sub_core_report {
  uint64_t issued = 0;
  uint64_t no_eligible_warp = 0;
  uint64_t scoreboard_block = 0;
  uint64_t no_free_cu = 0;
  uint64_t cu_stall_cycles = 0;
  uint64_t read_port_conflicts = 0;
  uint64_t bus_stall_cycles = 0;
  uint64_t bank_port_stall_cycles = 0;
  uint64_t dispatch_latch_stall_cycles = 0;
  uint64_t last_exit_cycle = 0;  // cycle the sub-core's last warp retired

  bool operator==(const sub_core_report&) const = default;
};

struct memory_report {
  uint64_t dispatch_latch_stall_cycles = 0;
  uint64_t coalescing_cycles = 0;
  uint64_t requests_generated = 0;
  uint64_t requests_granted = 0;
  uint64_t responses_consumed = 0;
  uint64_t shared_conflict_cycles = 0;
  uint64_t wb_latch_stall_cycles = 0;
  uint64_t request_buffer_full_cycles = 0;
  uint64_t comparators_per_cycle = 0;  // 0 when no global access was coalesced

  bool operator==(const memory_report&) const = default;
};

struct conservation_report {
  uint64_t fetched = 0;
  uint64_t decoded = 0;
  uint64_t issued = 0;
  uint64_t dispatched = 0;
  uint64_t completed = 0;
  uint64_t writeback_reservations = 0;
  uint64_t writeback_completions = 0;
  uint64_t scoreboard_pending_at_drain = 0;
  uint64_t war_violations = 0;  // dispatches that overtook an older reader

  bool operator==(const conservation_report&) const = default;
};

// Structural limits observed over the run, plus online assertion failures.
struct invariant_report {
  uint64_t violations = 0;
  std::vector<std::string> messages;  // first few violations
  unsigned max_bank_writes_per_cycle = 0;  // register-file writes to one bank in one cycle
  unsigned max_icache_accesses_per_cycle = 0;
  unsigned max_l0i_accesses_per_cycle = 0;
  unsigned max_l1i_grants_per_cycle = 0;
  unsigned max_l0i_outstanding = 0;
  unsigned max_l1d_bank_accepts_per_cycle = 0;
  unsigned max_shared_accepts_per_cycle = 0;

  bool operator==(const invariant_report&) const = default;
};

struct run_report {
  std::string simulator_version = k_simulator_version;
  std::string trace_digest;
  std::string model;  // "baseline", "improved" or "mixed"
  gpu_config config;
  uint64_t total_cycles = 0;
  std::vector<uint64_t> kernel_cycles;
  std::map<std::string, cache_counters> caches;
  std::vector<sub_core_report> sub_cores;
  memory_report memory;
  conservation_report conservation;
  invariant_report invariants;

  bool operator==(const run_report&) const = default;
};

std::string model_tag(const gpu_config& cfg);

nlohmann::json report_to_json(const run_report& r);
// Throws std::runtime_error on a malformed document.
run_report report_from_json(const nlohmann::json& j);

std::string serialize_report(const run_report& r);
void write_report_file(const std::filesystem::path& path, const run_report& r);
run_report load_report(const std::filesystem::path& path);

}  // namespace smsim
