#include "smsim/config.h"

#include <algorithm>
#include <fstream>

namespace smsim {

namespace {

constexpr std::array<std::string_view, num_op_classes> k_op_names{
    "ALU_SP",   "ALU_INT",   "SFU",       "TENSOR", "LD_GLOBAL",
    "ST_GLOBAL", "LD_SHARED", "ST_SHARED", "BRANCH", "EXIT"};

constexpr std::array<op_class, 5> k_fixed_latency_classes{
    op_class::ALU_SP, op_class::ALU_INT, op_class::SFU, op_class::TENSOR, op_class::BRANCH};

// Every unsigned scalar key with its member. Keeps parse, dump and
// validation in one table.
struct uint_field {
  const char* key;
  unsigned gpu_config::*member;
};

constexpr uint_field k_uint_fields[] = {
    {"clock_mhz", &gpu_config::clock_mhz},
    {"num_sms", &gpu_config::num_sms},
    {"num_sub_cores", &gpu_config::num_sub_cores},
    {"max_warps_per_sm", &gpu_config::max_warps_per_sm},
    {"warp_width", &gpu_config::warp_width},
    {"collector_units_per_sub_core", &gpu_config::collector_units_per_sub_core},
    {"ibuffer_entries_per_warp", &gpu_config::ibuffer_entries_per_warp},
    {"rf_banks_per_sub_core", &gpu_config::rf_banks_per_sub_core},
    {"rf_ports_per_bank", &gpu_config::rf_ports_per_bank},
    {"result_buses_per_sub_core", &gpu_config::result_buses_per_sub_core},
    {"l0i_size_bytes", &gpu_config::l0i_size_bytes},
    {"l0i_max_outstanding", &gpu_config::l0i_max_outstanding},
    {"l1i_size_bytes", &gpu_config::l1i_size_bytes},
    {"l1i_hit_latency", &gpu_config::l1i_hit_latency},
    {"l1d_size_bytes", &gpu_config::l1d_size_bytes},
    {"l1d_banks", &gpu_config::l1d_banks},
    {"l1d_hit_latency", &gpu_config::l1d_hit_latency},
    {"shared_mem_size_bytes", &gpu_config::shared_mem_size_bytes},
    {"shared_mem_banks", &gpu_config::shared_mem_banks},
    {"shared_bank_width_bytes", &gpu_config::shared_bank_width_bytes},
    {"shared_mem_latency", &gpu_config::shared_mem_latency},
    {"cache_line_bytes", &gpu_config::cache_line_bytes},
    {"sector_bytes", &gpu_config::sector_bytes},
    {"cache_assoc", &gpu_config::cache_assoc},
    {"l2_latency_cycles", &gpu_config::l2_latency_cycles},
    {"mem_request_buffer_entries", &gpu_config::mem_request_buffer_entries},
};

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw config_error("config field '" + field + "': " + what);
}

unsigned read_uint(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) fail(key, "expected a non-negative integer");
  if (v.is_number_unsigned()) {
    auto x = v.get<uint64_t>();
    if (x > 0xFFFFFFFFull) fail(key, "value out of range");
    return static_cast<unsigned>(x);
  }
  auto x = v.get<int64_t>();
  if (x < 0) fail(key, "must be non-negative");
  return static_cast<unsigned>(x);
}

hw_model read_model(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) fail(key, "expected \"baseline\" or \"improved\"");
  try {
    return parse_model(v.get<std::string>());
  } catch (const std::invalid_argument&) {
    fail(key, "expected \"baseline\" or \"improved\"");
  }
}

}  // namespace

std::string_view to_string(hw_model m) {
  return m == hw_model::baseline ? "baseline" : "improved";
}

hw_model parse_model(std::string_view s) {
  if (s == "baseline") return hw_model::baseline;
  if (s == "improved") return hw_model::improved;
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

std::string_view to_string(op_class c) { return k_op_names[static_cast<std::size_t>(c)]; }

op_class parse_op_class(std::string_view s) {
  for (std::size_t i = 0; i < k_op_names.size(); ++i)
    if (k_op_names[i] == s) return static_cast<op_class>(i);
  throw std::invalid_argument("unknown opcode class '" + std::string(s) + "'");
}

void gpu_config::validate() const {
  for (const auto& f : k_uint_fields)
    if (this->*f.member == 0) fail(f.key, "must be strictly positive");
  for (auto c : k_fixed_latency_classes)
    if (latency(c) == 0) fail("exec_latency." + std::string(to_string(c)), "must be strictly positive");
  if (livelock_window == 0) fail("livelock_window", "must be strictly positive");

  if (cache_line_bytes % sector_bytes != 0) fail("sector_bytes", "must divide cache_line_bytes");
  if (cache_line_bytes % instruction_bytes != 0)
    fail("cache_line_bytes", "must be a multiple of the 16-byte instruction size");
  const unsigned set_bytes = cache_line_bytes * cache_assoc;
  auto check_cache = [&](const char* key, unsigned size) {
    if (size % set_bytes != 0) fail(key, "must be divisible by cache_line_bytes * cache_assoc");
  };
  check_cache("l0i_size_bytes", l0i_size_bytes);
  check_cache("l1i_size_bytes", l1i_size_bytes);
  check_cache("l1d_size_bytes", l1d_size_bytes);
  if (shared_mem_size_bytes % (shared_mem_banks * shared_bank_width_bytes) != 0)
    fail("shared_mem_size_bytes", "must be divisible by shared_mem_banks * shared_bank_width_bytes");
  if (warp_width > 32) fail("warp_width", "at most 32 lanes (active masks are 32-bit)");
  if (report_comparator_cost && warp_width != 32)
    fail("warp_width", "must be 32 while report_comparator_cost is enabled");
}

gpu_config config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  gpu_config cfg;

  // "model" is applied first so per-subsystem keys can override it.
  if (auto it = j.find("model"); it != j.end()) cfg.set_model(read_model(*it, "model"));

  for (const auto& [key, value] : j.items()) {
    if (key == "model") continue;
    bool handled = false;
    for (const auto& f : k_uint_fields) {
      if (key == f.key) {
        cfg.*f.member = read_uint(value, key);
        handled = true;
        break;
      }
    }
    if (handled) continue;
    if (key == "frontend_model") {
      cfg.frontend_model = read_model(value, key);
    } else if (key == "result_bus_model") {
      cfg.result_bus_model = read_model(value, key);
    } else if (key == "mem_pipeline_model") {
      cfg.mem_pipeline_model = read_model(value, key);
    } else if (key == "report_comparator_cost") {
      if (!value.is_boolean()) fail(key, "expected a boolean");
      cfg.report_comparator_cost = value.get<bool>();
    } else if (key == "livelock_window") {
      if (!value.is_number_unsigned() || value.get<uint64_t>() == 0)
        fail(key, "expected a positive integer");
      cfg.livelock_window = value.get<uint64_t>();
    } else if (key == "exec_latency") {
      if (!value.is_object()) fail(key, "expected an object keyed by opcode class");
      for (const auto& [cls, lat] : value.items()) {
        op_class c;
        try {
          c = parse_op_class(cls);
        } catch (const std::invalid_argument&) {
          fail("exec_latency." + cls, "unknown opcode class");
        }
        if (std::find(k_fixed_latency_classes.begin(), k_fixed_latency_classes.end(), c) ==
            k_fixed_latency_classes.end())
          fail("exec_latency." + cls, "not a fixed-latency class");
        cfg.exec_latency[static_cast<std::size_t>(c)] = read_uint(lat, "exec_latency." + cls);
      }
    } else {
      fail(key, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const gpu_config& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : k_uint_fields) j[f.key] = cfg.*f.member;
  nlohmann::json lat = nlohmann::json::object();
  for (auto c : k_fixed_latency_classes) lat[std::string(to_string(c))] = cfg.latency(c);
  j["exec_latency"] = lat;
  j["frontend_model"] = std::string(to_string(cfg.frontend_model));
  j["result_bus_model"] = std::string(to_string(cfg.result_bus_model));
  j["mem_pipeline_model"] = std::string(to_string(cfg.mem_pipeline_model));
  j["report_comparator_cost"] = cfg.report_comparator_cost;
  j["livelock_window"] = cfg.livelock_window;
  return j;
}

gpu_config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("config parse error in '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace smsim
