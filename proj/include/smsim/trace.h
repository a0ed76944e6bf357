#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smsim/config.h"

namespace smsim {

class trace_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using reg_id = uint16_t;

struct instruction {
  unsigned kernel_id = 0;
  unsigned warp_id = 0;
  uint64_t pc = 0;
  op_class op = op_class::ALU_SP;
  std::optional<reg_id> dest_reg;
  std::vector<reg_id> src_regs;
  uint32_t active_mask = 0xFFFFFFFFu;
  // One address per lane when op is a memory class; inactive lanes ignored.
  std::vector<uint64_t> mem_addrs;
  std::optional<uint64_t> branch_target;

  bool lane_active(unsigned lane) const { return (active_mask >> lane) & 1u; }
  bool operator==(const instruction&) const = default;
};

struct kernel_trace {
  unsigned kernel_id = 0;
  // CTA-to-warp layout; every warp id appears in exactly one CTA.
  std::vector<std::vector<unsigned>> ctas;
  // Indexed by warp id, each stream terminated by EXIT.
  std::vector<std::vector<instruction>> warps;

  std::size_t num_warps() const { return warps.size(); }
  std::size_t num_instructions() const;
  // Bytes spanned by the kernel's code: highest pc + one instruction.
  uint64_t image_bytes() const;
};

struct trace_file {
  unsigned warp_width = 32;
  std::vector<kernel_trace> kernels;

  std::size_t num_instructions() const;
};

// Checks every structural invariant; throws trace_error.
void validate_trace(const trace_file& t, const gpu_config& cfg);

// JSON Lines: header object on line 1, then one instruction per line,
// kernels in order and each warp's stream contiguous.
void write_trace(std::ostream& out, const trace_file& t);
std::string serialize_trace(const trace_file& t);
void write_trace_file(const std::filesystem::path& path, const trace_file& t);

trace_file read_trace(std::istream& in, const gpu_config& cfg);
trace_file parse_trace(const std::filesystem::path& path, const gpu_config& cfg);

// FNV-1a 64 over the canonical serialization, as 16 hex digits.
std::string trace_digest(const trace_file& t);

}  // namespace smsim
