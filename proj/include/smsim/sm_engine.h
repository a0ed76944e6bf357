#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "smsim/config.h"
#include "smsim/frontend.h"
#include "smsim/issue.h"
#include "smsim/memory_pipeline.h"
#include "smsim/operand_collector.h"
#include "smsim/report.h"
#include "smsim/result_bus.h"
#include "smsim/trace.h"
#include "smsim/warp.h"

namespace smsim {

class simulation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One streaming multiprocessor advanced cycle by cycle. Kernels run one
// after another; a kernel ends when every warp has exited and every
// pipeline structure is empty.
class sm {
 public:
  // The trace must outlive the simulator and be valid for `cfg`.
  sm(const gpu_config& cfg, const trace_file& trace);

  // Advances exactly one cycle. Stages run back to front: register
  // write-back, memory pipeline, dispatch, operand reads, issue, then the
  // front-end (decode, fetch, instruction-cache fills).
  void step();
  bool drained() const { return m_kernel >= m_trace.kernels.size(); }
  uint64_t cycle() const { return m_now; }

  // Steps until drained. Throws simulation_error when nothing happens for
  // cfg.livelock_window cycles.
  run_report run();

  // Snapshot of the statistics gathered so far.
  run_report report() const;

  const frontend& front() const { return *m_frontend; }
  frontend& front() { return *m_frontend; }
  const memory_pipeline& memory() const { return *m_memory; }

 private:
  struct sub_core {
    gto_state gto;
    operand_collector collector;
    writeback_schedule schedule;
    issue_stats issue;
    uint64_t bus_stall_cycles = 0;
    uint64_t bank_port_stall_cycles = 0;
    uint64_t dispatch_latch_stall_cycles = 0;
    uint64_t last_exit_cycle = 0;
  };

  void start_kernel();
  bool kernel_drained() const;
  void violation(const std::string& what);

  void commit_writebacks();
  void memory_stage();
  void dispatch_stage();
  void read_stage();
  void issue_stage();
  void retire_warps();

  void complete(const inflight_inst& inst);
  void check_war(unsigned sub, const inflight_inst& inst);
  uint64_t progress_signature() const;
  std::string stall_diagnostic() const;

  gpu_config m_cfg;
  const trace_file& m_trace;
  std::string m_digest;
  std::unique_ptr<frontend> m_frontend;
  std::unique_ptr<memory_pipeline> m_memory;
  std::vector<sub_core> m_sub;
  std::vector<register_file_ports*> m_port_view;

  std::vector<warp_state> m_warps;
  scoreboard m_scoreboard;

  std::size_t m_kernel = 0;
  uint64_t m_now = 0;
  uint64_t m_kernel_start = 0;
  uint64_t m_seq = 0;
  uint64_t m_coalescing_mismatches = 0;
  std::vector<uint64_t> m_kernel_cycles;

  conservation_report m_cons;
  invariant_report m_inv;
};

// Convenience: validate, simulate and report.
run_report simulate(const trace_file& trace, const gpu_config& cfg);

}  // namespace smsim
