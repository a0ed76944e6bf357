#include "smsim/trace_gen.h"

#include <algorithm>
#include <cctype>
#include <string>

namespace smsim {

namespace {

constexpr pattern k_patterns[] = {pattern::coalesced,    pattern::strided,         pattern::random, pattern::icache_thrash,
                                  pattern::branch_heavy, pattern::shared_conflict, pattern::mixed};

constexpr unsigned k_regs = 32;
constexpr unsigned k_warps_per_cta = 8;

uint32_t full_mask(unsigned width) { return width >= 32 ? 0xFFFFFFFFu : (1u << width) - 1; }

class stream_builder {
 public:
  stream_builder(unsigned kernel, unsigned warp, unsigned width) : m_kernel(kernel), m_warp(warp), m_width(width) {}

  instruction& add(op_class op) {
    instruction in;
    in.kernel_id = m_kernel;
    in.warp_id = m_warp;
    in.pc = m_pc;
    in.op = op;
    in.active_mask = full_mask(m_width);
    m_pc += instruction_bytes;
    m_out.push_back(std::move(in));
    return m_out.back();
  }
  void jump(uint64_t target) { m_pc = target; }
  uint64_t pc() const { return m_pc; }
  std::size_t size() const { return m_out.size(); }
  std::vector<instruction> take() { return std::move(m_out); }

 private:
  unsigned m_kernel;
  unsigned m_warp;
  unsigned m_width;
  uint64_t m_pc = 0;
  std::vector<instruction> m_out;
};

// Rotating destination registers so consecutive results land on
// different banks and dependent pairs stay short.
struct reg_cursor {
  unsigned next = 0;
  reg_id take() { return static_cast<reg_id>(next++ % k_regs); }
};

std::vector<uint64_t> lane_addrs(unsigned width, auto&& f) {
  std::vector<uint64_t> a(width);
  for (unsigned l = 0; l < width; ++l) a[l] = f(l);
  return a;
}

std::vector<std::vector<unsigned>> cta_layout(unsigned warps) {
  std::vector<std::vector<unsigned>> ctas;
  for (unsigned w = 0; w < warps; ++w) {
    if (w % k_warps_per_cta == 0) ctas.emplace_back();
    ctas.back().push_back(w);
  }
  return ctas;
}

// Load followed by a consumer, repeated; the body ends with EXIT.
std::vector<instruction> load_use_stream(unsigned warp, unsigned len, const gpu_config& cfg, op_class load,
                                         auto&& addrs_for) {
  stream_builder b(0, warp, cfg.warp_width);
  reg_cursor regs;
  unsigned iter = 0;
  reg_id last = 0;
  while (b.size() + 1 < len) {
    if (b.size() % 2 == 0) {
      auto& in = b.add(load);
      last = regs.take();
      in.dest_reg = last;
      in.mem_addrs = addrs_for(iter++);
    } else {
      auto& in = b.add(op_class::ALU_SP);
      in.src_regs = {last};
      in.dest_reg = regs.take();
    }
  }
  b.add(op_class::EXIT);
  return b.take();
}

std::vector<instruction> branch_stream(unsigned warp, const workload_spec& spec, const gpu_config& cfg,
                                       xorshift64& rng) {
  stream_builder b(0, warp, cfg.warp_width);
  reg_cursor regs;
  while (b.size() + 1 < spec.instructions_per_warp) {
    if (rng.below(3) == 0) {
      auto& in = b.add(op_class::BRANCH);
      const uint64_t target = in.pc + instruction_bytes * (2 + rng.below(4));
      in.branch_target = target;
      if (rng.unit() < spec.taken_ratio) b.jump(target);
    } else {
      auto& in = b.add(op_class::ALU_INT);
      in.dest_reg = regs.take();
    }
  }
  b.add(op_class::EXIT);
  return b.take();
}

std::vector<instruction> mixed_stream(unsigned warp, const workload_spec& spec, const gpu_config& cfg,
                                      xorshift64& rng) {
  static constexpr op_class k_ops[] = {op_class::ALU_SP,    op_class::ALU_SP,    op_class::ALU_INT,
                                       op_class::SFU,       op_class::TENSOR,    op_class::LD_GLOBAL,
                                       op_class::ST_GLOBAL, op_class::LD_SHARED, op_class::ST_SHARED,
                                       op_class::BRANCH};
  stream_builder b(0, warp, cfg.warp_width);
  const unsigned width = cfg.warp_width;
  while (b.size() + 1 < spec.instructions_per_warp) {
    const op_class op = k_ops[rng.below(std::size(k_ops))];
    auto& in = b.add(op);
    const unsigned nsrc = static_cast<unsigned>(rng.below(3));
    for (unsigned s = 0; s < nsrc; ++s) in.src_regs.push_back(static_cast<reg_id>(rng.below(k_regs)));
    if (op == op_class::BRANCH) {
      const uint64_t target = in.pc + instruction_bytes * (2 + rng.below(4));
      in.branch_target = target;
      if (rng.below(2) == 0) b.jump(target);
      continue;
    }
    if (op != op_class::ST_GLOBAL && op != op_class::ST_SHARED) in.dest_reg = static_cast<reg_id>(rng.below(k_regs));
    if (is_global(op)) {
      const uint64_t base = global_base(warp) + rng.below(1u << 14) * 4;
      switch (rng.below(3)) {
        case 0: in.mem_addrs = lane_addrs(width, [&](unsigned l) { return base + l * 4; }); break;
        case 1: in.mem_addrs = lane_addrs(width, [&](unsigned l) { return base + l * 128; }); break;
        default:
          in.mem_addrs = lane_addrs(width, [&](unsigned) { return global_base(warp) + rng.below(1u << 18) * 4; });
      }
      if (rng.below(4) == 0) in.active_mask = static_cast<uint32_t>(rng.next()) & full_mask(width);
      if (in.active_mask == 0) in.active_mask = 1;
    } else if (is_shared(op)) {
      const uint64_t words = cfg.shared_mem_size_bytes / cfg.shared_bank_width_bytes;
      in.mem_addrs = lane_addrs(width, [&](unsigned) { return rng.below(words) * cfg.shared_bank_width_bytes; });
    }
  }
  b.add(op_class::EXIT);
  return b.take();
}

}  // namespace

std::string_view to_string(pattern p) {
  switch (p) {
    case pattern::coalesced: return "coalesced";
    case pattern::strided: return "strided";
    case pattern::random: return "random";
    case pattern::icache_thrash: return "icache_thrash";
    case pattern::branch_heavy: return "branch_heavy";
    case pattern::shared_conflict: return "shared_conflict";
    case pattern::mixed: return "mixed";
  }
  return "?";
}

pattern parse_pattern(std::string_view s) {
  std::string norm;
  for (char c : s) norm.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (pattern p : k_patterns)
    if (to_string(p) == norm) return p;
  throw workload_error("unknown pattern '" + std::string(s) + "'");
}

void validate_workload(const workload_spec& spec, const gpu_config& cfg) {
  if (spec.num_warps == 0 || spec.num_warps > cfg.max_warps_per_sm)
    throw workload_error("num_warps " + std::to_string(spec.num_warps) + " must be in [1, " +
                         std::to_string(cfg.max_warps_per_sm) + "]");
  if (spec.kind == pattern::icache_thrash) {
    if (spec.kernel_count == 0) throw workload_error("kernel_count must be at least 1");
    if (spec.body_len == 0) throw workload_error("body_len must be at least 1");
    return;
  }
  if (spec.instructions_per_warp < 2) throw workload_error("instructions_per_warp must be at least 2");
  if (spec.kind == pattern::strided && spec.stride_bytes == 0) throw workload_error("stride_bytes must be positive");
  if (spec.kind == pattern::branch_heavy && !(spec.taken_ratio >= 0.0 && spec.taken_ratio <= 1.0))
    throw workload_error("taken_ratio must be in [0, 1]");
  if (spec.kind == pattern::shared_conflict &&
      (spec.conflict_degree == 0 || spec.conflict_degree > cfg.shared_mem_banks))
    throw workload_error("conflict_degree must be in [1, " + std::to_string(cfg.shared_mem_banks) + "]");
}

trace_file generate(const workload_spec& spec, const gpu_config& cfg) {
  validate_workload(spec, cfg);
  trace_file t;
  t.warp_width = cfg.warp_width;
  const unsigned width = cfg.warp_width;
  xorshift64 rng(spec.seed);

  if (spec.kind == pattern::icache_thrash) {
    // Every kernel's code starts at pc 0 and has the same length.
    for (unsigned k = 0; k < spec.kernel_count; ++k) {
      kernel_trace kt;
      kt.kernel_id = k;
      kt.ctas = cta_layout(spec.num_warps);
      for (unsigned w = 0; w < spec.num_warps; ++w) {
        stream_builder b(k, w, width);
        reg_cursor regs;
        for (unsigned i = 0; i < spec.body_len; ++i) {
          auto& in = b.add(k % 2 == 0 ? op_class::ALU_SP : op_class::ALU_INT);
          in.dest_reg = regs.take();
        }
        b.add(op_class::EXIT);
        kt.warps.push_back(b.take());
      }
      t.kernels.push_back(std::move(kt));
    }
    return t;
  }

  kernel_trace kt;
  kt.kernel_id = 0;
  kt.ctas = cta_layout(spec.num_warps);
  const unsigned len = spec.instructions_per_warp;
  for (unsigned w = 0; w < spec.num_warps; ++w) {
    const uint64_t base = global_base(w);
    switch (spec.kind) {
      case pattern::coalesced:
        // All lanes inside one 32-byte sector of a fresh line.
        kt.warps.push_back(load_use_stream(w, len, cfg, op_class::LD_GLOBAL, [&](unsigned it) {
          return lane_addrs(width, [&](unsigned l) { return base + it * cfg.cache_line_bytes + (l % 8) * 4; });
        }));
        break;
      case pattern::strided:
        kt.warps.push_back(load_use_stream(w, len, cfg, op_class::LD_GLOBAL, [&](unsigned it) {
          const uint64_t start = base + static_cast<uint64_t>(it) * width * spec.stride_bytes;
          return lane_addrs(width, [&](unsigned l) { return start + l * spec.stride_bytes; });
        }));
        break;
      case pattern::random:
        kt.warps.push_back(load_use_stream(w, len, cfg, op_class::LD_GLOBAL, [&](unsigned) {
          return lane_addrs(width, [&](unsigned) { return base + rng.below(1u << 18) * 4; });
        }));
        break;
      case pattern::shared_conflict: {
        const unsigned d = spec.conflict_degree;
        const unsigned banks = cfg.shared_mem_banks;
        const unsigned wbytes = cfg.shared_bank_width_bytes;
        // Lane l reads word (l % d) * banks + l / d: each bank in use holds
        // exactly d distinct words.
        kt.warps.push_back(load_use_stream(w, len, cfg, op_class::LD_SHARED, [&](unsigned) {
          return lane_addrs(width, [&](unsigned l) { return static_cast<uint64_t>((l % d) * banks + l / d) * wbytes; });
        }));
        break;
      }
      case pattern::branch_heavy: kt.warps.push_back(branch_stream(w, spec, cfg, rng)); break;
      case pattern::mixed: kt.warps.push_back(mixed_stream(w, spec, cfg, rng)); break;
      case pattern::icache_thrash: break;
    }
  }
  t.kernels.push_back(std::move(kt));
  return t;
}

}  // namespace smsim
