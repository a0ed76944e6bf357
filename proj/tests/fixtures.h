#pragma once

#include <string>
#include <utility>
#include <vector>

#include "smsim/config.h"
#include "smsim/trace.h"
#include "smsim/trace_gen.h"

namespace smsim::fixtures {

inline uint32_t full_mask(unsigned width) { return width >= 32 ? 0xFFFFFFFFu : (1u << width) - 1; }

inline instruction make(unsigned warp, uint64_t pc, op_class op, unsigned width = 32) {
  instruction in;
  in.warp_id = warp;
  in.pc = pc;
  in.op = op;
  in.active_mask = full_mask(width);
  return in;
}

inline kernel_trace one_cta_kernel(unsigned id, std::vector<std::vector<instruction>> warps) {
  kernel_trace k;
  k.kernel_id = id;
  k.ctas.emplace_back();
  for (unsigned w = 0; w < warps.size(); ++w) {
    k.ctas[0].push_back(w);
    for (auto& in : warps[w]) {
      in.kernel_id = id;
      in.warp_id = w;
    }
  }
  k.warps = std::move(warps);
  return k;
}

inline trace_file single_kernel(std::vector<std::vector<instruction>> warps, unsigned width = 32) {
  trace_file t;
  t.warp_width = width;
  t.kernels.push_back(one_cta_kernel(0, std::move(warps)));
  return t;
}

// One warp: ALU_SP r0 then EXIT.
inline trace_file single_alu() {
  auto a = make(0, 0, op_class::ALU_SP);
  a.dest_reg = 0;
  return single_kernel({{a, make(0, 16, op_class::EXIT)}});
}

// Three producers with no sources whose destinations (r0, r8, r16) all sit
// in register-file bank 0. With latencies 6, 5 and 4 and back-to-back
// dispatch they all complete in the same cycle.
inline trace_file three_same_bank() {
  std::vector<instruction> w;
  const op_class ops[] = {op_class::TENSOR, op_class::SFU, op_class::ALU_SP};
  const reg_id dst[] = {0, 8, 16};
  for (int i = 0; i < 3; ++i) {
    auto in = make(0, 16u * i, ops[i]);
    in.dest_reg = dst[i];
    w.push_back(in);
  }
  w.push_back(make(0, 48, op_class::EXIT));
  return single_kernel({w});
}

inline gpu_config three_same_bank_config(hw_model result_bus) {
  gpu_config cfg;
  cfg.exec_latency[static_cast<std::size_t>(op_class::TENSOR)] = 6;
  cfg.exec_latency[static_cast<std::size_t>(op_class::SFU)] = 5;
  cfg.exec_latency[static_cast<std::size_t>(op_class::ALU_SP)] = 4;
  cfg.frontend_model = hw_model::baseline;
  cfg.mem_pipeline_model = hw_model::baseline;
  cfg.result_bus_model = result_bus;
  return cfg;
}

// Head-of-line fixture. Every warp loops inside the first 128-byte line,
// so instruction fetch only misses at start-up. Warps on sub-core 0 run a
// 32-request scatter load per iteration (or an ALU op at the same pc in
// the control). The other sub-cores mix ALU work with conflict-free shared
// loads.
inline trace_file isolation(bool scatter, unsigned warps = 16, unsigned iterations = 24, unsigned width = 32) {
  std::vector<std::vector<instruction>> streams(warps);
  for (unsigned w = 0; w < warps; ++w) {
    auto& s = streams[w];
    const bool sub0 = w % 4 == 0;
    for (unsigned it = 0; it < iterations; ++it) {
      instruction a;
      if (sub0 && scatter) {
        a = make(w, 0, op_class::LD_GLOBAL, width);
        a.mem_addrs.resize(width);
        const uint64_t base = global_base(w) + static_cast<uint64_t>(it) * width * 128;
        for (unsigned l = 0; l < width; ++l) a.mem_addrs[l] = base + l * 128;
      } else if (sub0) {
        a = make(w, 0, op_class::ALU_SP, width);
      } else {
        a = make(w, 0, op_class::LD_SHARED, width);
        a.mem_addrs.resize(width);
        for (unsigned l = 0; l < width; ++l) a.mem_addrs[l] = l * 4;
      }
      a.dest_reg = static_cast<reg_id>(1 + it % 4);
      auto b = make(w, 16, op_class::ALU_SP, width);
      b.dest_reg = 5;
      b.src_regs = {6};
      auto c = make(w, 32, op_class::ALU_INT, width);
      c.dest_reg = 6;
      auto br = make(w, 48, op_class::BRANCH, width);
      br.branch_target = 0;
      s.push_back(a);
      s.push_back(b);
      s.push_back(c);
      s.push_back(br);
    }
    s.push_back(make(w, 64, op_class::EXIT, width));
  }
  return single_kernel(std::move(streams), width);
}

struct named_trace {
  std::string name;
  trace_file trace;
};

// Workloads used by the determinism and conservation sweeps.
inline std::vector<named_trace> suite(const gpu_config& cfg = gpu_config{}) {
  std::vector<named_trace> out;
  auto add = [&](std::string name, workload_spec spec) { out.push_back({std::move(name), generate(spec, cfg)}); };
  workload_spec s;
  s.num_warps = 8;
  s.instructions_per_warp = 48;
  s.kind = pattern::coalesced;
  add("coalesced", s);
  s.kind = pattern::strided;
  s.stride_bytes = 128;
  add("strided128", s);
  s.stride_bytes = 4;
  add("strided4", s);
  s.kind = pattern::random;
  s.seed = 7;
  add("random", s);
  s.kind = pattern::branch_heavy;
  s.taken_ratio = 0.5;
  add("branch_heavy", s);
  for (unsigned d : {1u, 2u, 8u, 32u}) {
    s.kind = pattern::shared_conflict;
    s.conflict_degree = d;
    add("shared_conflict" + std::to_string(d), s);
  }
  s.kind = pattern::mixed;
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    s.seed = seed;
    s.num_warps = 16;
    s.instructions_per_warp = 96;
    add("mixed" + std::to_string(seed), s);
  }
  workload_spec th;
  th.kind = pattern::icache_thrash;
  th.kernel_count = 2;
  th.body_len = 64;
  th.num_warps = 4;
  add("icache_thrash", th);
  out.push_back({"single_alu", single_alu()});
  out.push_back({"three_same_bank", three_same_bank()});
  out.push_back({"isolation_scatter", isolation(true)});
  out.push_back({"isolation_control", isolation(false)});
  return out;
}

}  // namespace smsim::fixtures
