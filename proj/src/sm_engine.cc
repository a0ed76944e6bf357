#include "smsim/sm_engine.h"

#include <algorithm>
#include <sstream>

namespace smsim {

namespace {

enum class exec_unit { sp, integer, sfu, tensor, none };

exec_unit unit_of(op_class op) {
  switch (op) {
    case op_class::ALU_SP: return exec_unit::sp;
    case op_class::ALU_INT:
    case op_class::BRANCH: return exec_unit::integer;
    case op_class::SFU: return exec_unit::sfu;
    case op_class::TENSOR: return exec_unit::tensor;
    default: return exec_unit::none;
  }
}

constexpr std::size_t k_max_messages = 16;

}  // namespace

sm::sm(const gpu_config& cfg, const trace_file& trace) : m_cfg(cfg), m_trace(trace) {
  m_cfg.validate();
  validate_trace(trace, m_cfg);
  m_digest = trace_digest(trace);
  m_frontend = std::make_unique<frontend>(m_cfg, kernel_layout(trace, m_cfg.cache_line_bytes));
  m_memory = std::make_unique<memory_pipeline>(m_cfg);
  for (unsigned s = 0; s < m_cfg.num_sub_cores; ++s)
    m_sub.push_back(sub_core{gto_state{},
                             operand_collector(m_cfg.collector_units_per_sub_core, m_cfg.rf_banks_per_sub_core,
                                               m_cfg.rf_ports_per_bank),
                             writeback_schedule(m_cfg.result_bus_model, m_cfg.result_buses_per_sub_core,
                                                m_cfg.rf_ports_per_bank, m_cfg.rf_banks_per_sub_core),
                             issue_stats{}});
  for (auto& s : m_sub) m_port_view.push_back(&s.collector.ports());
  start_kernel();
}

void sm::start_kernel() {
  m_warps.clear();
  m_kernel_start = m_now;
  if (drained()) return;
  const auto& k = m_trace.kernels[m_kernel];
  for (unsigned i = 0; i < k.warps.size(); ++i) {
    warp_state w;
    w.warp_id = i;
    w.sub_core = sub_core_of(i, m_cfg.num_sub_cores);
    w.kernel_id = k.kernel_id;
    w.stream = k.warps[i];
    w.ibuf = ibuffer(m_cfg.ibuffer_entries_per_warp);
    m_warps.push_back(std::move(w));
  }
  m_scoreboard.resize(m_warps.size());
  for (auto& s : m_sub) s.gto = gto_state{};
}

void sm::violation(const std::string& what) {
  ++m_inv.violations;
  if (m_inv.messages.size() < k_max_messages) m_inv.messages.push_back("cycle " + std::to_string(m_now) + ": " + what);
}

bool sm::kernel_drained() const {
  if (!std::all_of(m_warps.begin(), m_warps.end(), [](const warp_state& w) { return w.exited; })) return false;
  if (m_frontend->busy() || m_memory->busy()) return false;
  for (const auto& s : m_sub)
    if (s.schedule.pending() != 0 || s.collector.occupied() != 0) return false;
  return true;
}

void sm::complete(const inflight_inst& inst) {
  if (inst.inst->dest_reg && !m_scoreboard.release(inst.warp, *inst.inst->dest_reg))
    violation("write-back to a register that was not pending");
  auto& w = m_warps[inst.warp];
  if (w.inflight == 0)
    violation("completion with nothing in flight");
  else
    --w.inflight;
  ++m_cons.completed;
}

void sm::commit_writebacks() {
  for (auto& s : m_sub) {
    for (const auto& e : s.schedule.commit(m_now)) {
      if (e.bank) s.collector.ports().write(*e.bank);
      complete(e.inst);
    }
  }
}

void sm::memory_stage() {
  for (const auto& done : m_memory->cycle(m_now, m_port_view)) complete(done);

  for (unsigned s = 0; s < m_sub.size(); ++s) {
    const auto& rf = m_sub[s].collector.ports();
    for (unsigned b = 0; b < rf.banks(); ++b) {
      m_inv.max_bank_writes_per_cycle = std::max(m_inv.max_bank_writes_per_cycle, rf.writes(b));
      if (m_cfg.result_bus_model == hw_model::improved && rf.writes(b) > rf.ports())
        violation("sub-core " + std::to_string(s) + " bank " + std::to_string(b) + " written " +
                  std::to_string(rf.writes(b)) + " times");
    }
  }
}

void sm::check_war(unsigned sub, const inflight_inst& inst) {
  if (!inst.inst->dest_reg) return;
  const reg_id dst = *inst.inst->dest_reg;
  for (const auto& cu : m_sub[sub].collector.cus()) {
    if (!cu.occupied() || cu.occupant->warp != inst.warp || cu.occupant->seq >= inst.seq) continue;
    const auto& srcs = cu.occupant->inst->src_regs;
    for (std::size_t i = 0; i < srcs.size(); ++i)
      if (srcs[i] == dst && !cu.src_read[i]) ++m_cons.war_violations;
  }
}

void sm::dispatch_stage() {
  // Baseline memory: one latch for the whole SM, offered to the oldest
  // ready memory instruction of any sub-core.
  struct pick {
    bool valid = false;
    unsigned sub = 0;
    unsigned cu = 0;
  } mem_pick;
  if (m_cfg.mem_pipeline_model == hw_model::baseline) {
    uint64_t best_seq = 0;
    for (unsigned s = 0; s < m_sub.size(); ++s)
      for (unsigned cu : m_sub[s].collector.ready_cus(m_now)) {
        const auto& occ = *m_sub[s].collector.cu(cu).occupant;
        if (!is_memory(occ.inst->op)) continue;
        if (!mem_pick.valid || occ.seq < best_seq) {
          mem_pick = pick{true, s, cu};
          best_seq = occ.seq;
        }
        break;
      }
    if (mem_pick.valid && !m_memory->can_accept(mem_pick.sub)) mem_pick.valid = false;
  }

  bool mem_stalled = false;
  for (unsigned s = 0; s < m_sub.size(); ++s) {
    auto& sc = m_sub[s];
    bool units[5] = {};
    bool latch_stall = false;
    bool bus_stall = false;
    for (unsigned cu : sc.collector.ready_cus(m_now)) {
      const inflight_inst inst = *sc.collector.cu(cu).occupant;
      const op_class op = inst.inst->op;
      if (is_memory(op)) {
        const bool chosen = m_cfg.mem_pipeline_model == hw_model::baseline
                                ? mem_pick.valid && mem_pick.sub == s && mem_pick.cu == cu
                                : m_memory->can_accept(s);
        if (!chosen) {
          latch_stall = true;
          continue;
        }
        m_memory->accept(inst, m_now);
      } else {
        const exec_unit u = unit_of(op);
        if (units[static_cast<int>(u)]) continue;
        writeback_entry e{inst, std::nullopt};
        if (inst.inst->dest_reg) e.bank = bank_of(*inst.inst->dest_reg, m_cfg.rf_banks_per_sub_core);
        if (!sc.schedule.try_reserve(m_now, m_cfg.latency(op), e)) {
          bus_stall = true;
          continue;
        }
        units[static_cast<int>(u)] = true;
      }
      check_war(s, inst);
      sc.collector.release(cu);
      ++m_cons.dispatched;
    }
    if (latch_stall) {
      ++sc.dispatch_latch_stall_cycles;
      mem_stalled = true;
    }
    if (bus_stall) {
      if (m_cfg.result_bus_model == hw_model::baseline)
        ++sc.bus_stall_cycles;
      else
        ++sc.bank_port_stall_cycles;
    }
  }
  if (mem_stalled) m_memory->note_dispatch_stall();
}

void sm::read_stage() {
  for (auto& s : m_sub) s.collector.read_operands(m_now);
}

void sm::issue_stage() {
  const unsigned subs = m_cfg.num_sub_cores;
  for (unsigned s = 0; s < subs; ++s) {
    auto& sc = m_sub[s];
    const bool cu_free = sc.collector.has_free_cu();
    if (!cu_free) ++sc.collector.stats().cu_stall_cycles;

    std::vector<unsigned> eligibles;
    bool sb_block = false;
    bool cu_block = false;
    for (std::size_t i = s; i < m_warps.size(); i += subs) {
      switch (check_issue(m_warps[i], m_scoreboard, cu_free)) {
        case issue_block::none: eligibles.push_back(static_cast<unsigned>(i)); break;
        case issue_block::scoreboard: sb_block = true; break;
        case issue_block::no_free_cu: cu_block = true; break;
        case issue_block::empty_ibuffer: break;
      }
    }
    const auto pick = select_warp_gto(sc.gto, eligibles);
    if (!pick) {
      ++sc.issue.no_eligible_warp;
      if (sb_block) ++sc.issue.scoreboard_block;
      if (cu_block) ++sc.issue.no_free_cu;
      continue;
    }
    warp_state& w = m_warps[*pick];
    const instruction* head = w.ibuf.front();
    if (m_scoreboard.blocks(w.warp_id, *head)) violation("issue with a pending register");
    w.ibuf.pop();
    ++sc.issue.issued;
    ++m_cons.issued;
    const inflight_inst inst{head, w.warp_id, s, m_seq++, m_now};
    if (head->op == op_class::EXIT) {
      w.exit_issued = true;
      ++m_cons.dispatched;
      continue;
    }
    if (head->dest_reg) m_scoreboard.reserve(w.warp_id, *head->dest_reg);
    ++w.inflight;
    sc.collector.allocate(inst, m_now);
  }
}

void sm::retire_warps() {
  for (auto& w : m_warps) {
    if (w.exited || !w.exit_issued || w.inflight != 0) continue;
    w.exited = true;
    ++m_cons.completed;
    m_sub[w.sub_core].last_exit_cycle = m_now;
  }
}

void sm::step() {
  if (drained()) return;
  for (auto& s : m_sub) s.collector.ports().new_cycle();

  commit_writebacks();
  memory_stage();
  dispatch_stage();
  read_stage();
  issue_stage();
  m_frontend->cycle(m_now, m_warps);
  retire_warps();

  const auto& fs = m_frontend->stats();
  const auto& ms = m_memory->stats();
  if (m_cfg.frontend_model == hw_model::improved) {
    if (fs.max_l1i_grants_per_cycle > 1 && m_inv.max_l1i_grants_per_cycle <= 1) violation("L1I granted twice in a cycle");
    if (fs.max_l0i_outstanding > m_cfg.l0i_max_outstanding && m_inv.max_l0i_outstanding <= m_cfg.l0i_max_outstanding)
      violation("L0I outstanding misses above limit");
  }
  if (m_cfg.mem_pipeline_model == hw_model::improved) {
    if (ms.max_bank_accepts_per_cycle > 1 && m_inv.max_l1d_bank_accepts_per_cycle <= 1)
      violation("L1D bank accepted two requests in a cycle");
    if (ms.max_shared_accepts_per_cycle > 1 && m_inv.max_shared_accepts_per_cycle <= 1)
      violation("shared memory accepted two requests in a cycle");
    if (ms.coalescing_mismatches > m_coalescing_mismatches) violation("coalescing cycles differ from request count");
    m_coalescing_mismatches = ms.coalescing_mismatches;
  }
  m_inv.max_icache_accesses_per_cycle = fs.max_cache_accesses_per_cycle;
  m_inv.max_l0i_accesses_per_cycle = fs.max_l0i_accesses_per_cycle;
  m_inv.max_l1i_grants_per_cycle = fs.max_l1i_grants_per_cycle;
  m_inv.max_l0i_outstanding = fs.max_l0i_outstanding;
  m_inv.max_l1d_bank_accepts_per_cycle = ms.max_bank_accepts_per_cycle;
  m_inv.max_shared_accepts_per_cycle = ms.max_shared_accepts_per_cycle;

  const bool done = kernel_drained();
  ++m_now;
  if (done) {
    for (std::size_t w = 0; w < m_warps.size(); ++w) m_cons.scoreboard_pending_at_drain += m_scoreboard.size(w);
    m_kernel_cycles.push_back(m_now - m_kernel_start);
    ++m_kernel;
    start_kernel();
  }
}

uint64_t sm::progress_signature() const {
  const auto& fs = m_frontend->stats();
  const auto& ms = m_memory->stats();
  uint64_t sig = m_kernel;
  for (uint64_t v : {fs.fetched, fs.decoded, fs.l1i_grants, m_cons.issued, m_cons.dispatched, m_cons.completed,
                     ms.requests_generated, ms.requests_granted, ms.writebacks, ms.coalescing_cycles})
    sig = sig * 1000003u + v;
  return sig;
}

std::string sm::stall_diagnostic() const {
  std::ostringstream out;
  out << "no progress for " << m_cfg.livelock_window << " cycles at cycle " << m_now << " in kernel " << m_kernel
      << ":";
  unsigned live = 0;
  for (const auto& w : m_warps) live += w.exited ? 0 : 1;
  out << " live_warps=" << live;
  if (m_frontend->busy()) out << " frontend";
  if (m_memory->busy()) out << " memory_pipeline";
  for (unsigned s = 0; s < m_sub.size(); ++s) {
    if (m_sub[s].collector.occupied()) out << " collectors[" << s << "]";
    if (m_sub[s].schedule.pending()) out << " result_bus[" << s << "]";
  }
  if (!m_scoreboard.all_empty()) out << " scoreboard";
  return out.str();
}

run_report sm::run() {
  uint64_t sig = progress_signature();
  uint64_t last_change = m_now;
  while (!drained()) {
    step();
    const uint64_t now_sig = progress_signature();
    if (now_sig != sig) {
      sig = now_sig;
      last_change = m_now;
    } else if (m_now - last_change >= m_cfg.livelock_window) {
      throw simulation_error(stall_diagnostic());
    }
  }
  return report();
}

run_report sm::report() const {
  run_report r;
  r.trace_digest = m_digest;
  r.model = model_tag(m_cfg);
  r.config = m_cfg;
  r.total_cycles = m_now;
  r.kernel_cycles = m_kernel_cycles;

  r.caches["L1I"] = m_frontend->l1i().counters();
  for (unsigned s = 0; s < m_frontend->num_l0i(); ++s) r.caches["L0I[" + std::to_string(s) + "]"] = m_frontend->l0i(s).counters();
  r.caches["L1D"] = m_memory->l1d().counters();

  for (const auto& s : m_sub) {
    sub_core_report x;
    x.issued = s.issue.issued;
    x.no_eligible_warp = s.issue.no_eligible_warp;
    x.scoreboard_block = s.issue.scoreboard_block;
    x.no_free_cu = s.issue.no_free_cu;
    x.cu_stall_cycles = s.collector.stats().cu_stall_cycles;
    x.read_port_conflicts = s.collector.stats().read_port_conflicts;
    x.bus_stall_cycles = s.bus_stall_cycles;
    x.bank_port_stall_cycles = s.bank_port_stall_cycles;
    x.dispatch_latch_stall_cycles = s.dispatch_latch_stall_cycles;
    x.last_exit_cycle = s.last_exit_cycle;
    r.sub_cores.push_back(x);
  }

  const auto& ms = m_memory->stats();
  r.memory.dispatch_latch_stall_cycles = ms.dispatch_latch_stall_cycles;
  r.memory.coalescing_cycles = ms.coalescing_cycles;
  r.memory.requests_generated = ms.requests_generated;
  r.memory.requests_granted = ms.requests_granted;
  r.memory.responses_consumed = ms.responses_consumed;
  r.memory.shared_conflict_cycles = ms.shared_conflict_cycles;
  r.memory.wb_latch_stall_cycles = ms.wb_latch_stall_cycles;
  r.memory.request_buffer_full_cycles = ms.request_buffer_full_cycles;
  if (m_cfg.report_comparator_cost)
    r.memory.comparators_per_cycle =
        m_cfg.mem_pipeline_model == hw_model::baseline ? ms.comparators_full : ms.comparators_step;

  r.conservation = m_cons;
  r.conservation.fetched = m_frontend->stats().fetched;
  r.conservation.decoded = m_frontend->stats().decoded;
  for (const auto& s : m_sub) {
    r.conservation.writeback_reservations += s.schedule.reservations();
    r.conservation.writeback_completions += s.schedule.completions();
  }
  r.invariants = m_inv;
  return r;
}

run_report simulate(const trace_file& trace, const gpu_config& cfg) {
  sm machine(cfg, trace);
  return machine.run();
}

}  // namespace smsim
