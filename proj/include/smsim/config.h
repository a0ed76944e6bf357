#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace smsim {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class hw_model { baseline, improved };

std::string_view to_string(hw_model m);
hw_model parse_model(std::string_view s);

enum class op_class : uint8_t {
  ALU_SP,
  ALU_INT,
  SFU,
  TENSOR,
  LD_GLOBAL,
  ST_GLOBAL,
  LD_SHARED,
  ST_SHARED,
  BRANCH,
  EXIT,
};
inline constexpr std::size_t num_op_classes = 10;

std::string_view to_string(op_class c);
// Throws std::invalid_argument on an unknown name.
op_class parse_op_class(std::string_view s);

constexpr bool is_memory(op_class c) {
  return c == op_class::LD_GLOBAL || c == op_class::ST_GLOBAL ||
         c == op_class::LD_SHARED || c == op_class::ST_SHARED;
}
constexpr bool is_global(op_class c) {
  return c == op_class::LD_GLOBAL || c == op_class::ST_GLOBAL;
}
constexpr bool is_shared(op_class c) {
  return c == op_class::LD_SHARED || c == op_class::ST_SHARED;
}
constexpr bool is_load(op_class c) {
  return c == op_class::LD_GLOBAL || c == op_class::LD_SHARED;
}

// Instruction encodings are a fixed 16 bytes, so a 128-byte line holds 8.
inline constexpr uint64_t instruction_bytes = 16;

struct gpu_config {
  // Defaults describe an RTX 2070 Super class part.
  unsigned clock_mhz = 1605;
  unsigned num_sms = 40;  // recorded only; a single SM is simulated
  unsigned num_sub_cores = 4;
  unsigned max_warps_per_sm = 32;
  unsigned warp_width = 32;
  unsigned collector_units_per_sub_core = 2;
  unsigned ibuffer_entries_per_warp = 2;
  unsigned rf_banks_per_sub_core = 8;
  unsigned rf_ports_per_bank = 2;
  unsigned result_buses_per_sub_core = 4;

  unsigned l0i_size_bytes = 16384;
  unsigned l0i_max_outstanding = 1;
  unsigned l1i_size_bytes = 32768;
  unsigned l1i_hit_latency = 10;
  unsigned l1d_size_bytes = 32768;
  unsigned l1d_banks = 4;
  unsigned l1d_hit_latency = 20;
  unsigned shared_mem_size_bytes = 65536;
  unsigned shared_mem_banks = 32;
  unsigned shared_bank_width_bytes = 4;
  unsigned shared_mem_latency = 20;
  unsigned cache_line_bytes = 128;
  unsigned sector_bytes = 32;
  unsigned cache_assoc = 4;
  unsigned l2_latency_cycles = 120;
  unsigned mem_request_buffer_entries = 8;

  // Fixed latency per opcode class; memory and EXIT entries are unused.
  std::array<unsigned, num_op_classes> exec_latency{4, 4, 16, 32, 0, 0, 0, 0, 4, 0};

  hw_model frontend_model = hw_model::baseline;
  hw_model result_bus_model = hw_model::baseline;
  hw_model mem_pipeline_model = hw_model::baseline;

  bool report_comparator_cost = true;
  uint64_t livelock_window = 1'000'000;

  unsigned latency(op_class c) const { return exec_latency[static_cast<std::size_t>(c)]; }
  void set_model(hw_model m) { frontend_model = result_bus_model = mem_pipeline_model = m; }
  unsigned sets_of(unsigned size_bytes) const { return size_bytes / (cache_line_bytes * cache_assoc); }

  // Throws config_error naming the first offending field.
  void validate() const;

  bool operator==(const gpu_config&) const = default;
};

gpu_config config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const gpu_config& cfg);

// Reads and validates a JSON config file. Absent keys take defaults,
// unknown keys are rejected.
gpu_config load_config(const std::filesystem::path& path);

// Warps are interleaved across sub-cores: sub-core = warp_id % num_sub_cores.
constexpr unsigned sub_core_of(unsigned warp_id, unsigned num_sub_cores) {
  return warp_id % num_sub_cores;
}

}  // namespace smsim
