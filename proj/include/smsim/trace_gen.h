#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "smsim/config.h"
#include "smsim/trace.h"

namespace smsim {

class workload_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// xorshift64 (shifts 13, 7, 17). A zero seed is replaced by a fixed
// nonzero constant because zero is a fixed point of the recurrence.
class xorshift64 {
 public:
  static constexpr uint64_t k_zero_seed = 0x9E3779B97F4A7C15ull;

  explicit xorshift64(uint64_t seed) : m_state(seed ? seed : k_zero_seed) {}

  uint64_t next() {
    m_state ^= m_state << 13;
    m_state ^= m_state >> 7;
    m_state ^= m_state << 17;
    return m_state;
  }
  // Value in [0, n) by modulo reduction; n > 0.
  uint64_t below(uint64_t n) { return next() % n; }
  // Value in [0, 1) from the top 53 bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  uint64_t m_state;
};

enum class pattern { coalesced, strided, random, icache_thrash, branch_heavy, shared_conflict, mixed };

std::string_view to_string(pattern p);
// Accepts the names printed by to_string, case-insensitive, '-' or '_'.
pattern parse_pattern(std::string_view s);

struct workload_spec {
  pattern kind = pattern::coalesced;
  unsigned num_warps = 4;
  unsigned instructions_per_warp = 16;  // includes the final EXIT
  uint64_t stride_bytes = 128;          // strided
  uint64_t seed = 1;                    // random, branch_heavy, mixed
  unsigned kernel_count = 2;            // icache_thrash
  unsigned body_len = 64;               // icache_thrash: instructions before EXIT
  double taken_ratio = 0.5;             // branch_heavy
  unsigned conflict_degree = 2;         // shared_conflict
};

// Start of warp w's private global-memory window.
constexpr uint64_t global_base(unsigned warp) { return 0x1000'0000ull + static_cast<uint64_t>(warp) * (1ull << 20); }

// Throws workload_error naming the offending field.
void validate_workload(const workload_spec& spec, const gpu_config& cfg);

// Deterministic in (spec, cfg). The result always passes validate_trace.
trace_file generate(const workload_spec& spec, const gpu_config& cfg);

}  // namespace smsim
