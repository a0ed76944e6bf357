#include "smsim/report.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smsim {

namespace {

using json = nlohmann::json;

json counters_to_json(const cache_counters& c) {
  return json{{"accesses", c.accesses}, {"hits", c.hits}, {"misses", c.misses}, {"miss_ratio", c.miss_ratio()}};
}

template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::runtime_error(std::string("report: missing field '") + key + "'");
  return it->get<T>();
}

}  // namespace

std::string model_tag(const gpu_config& cfg) {
  if (cfg.frontend_model == cfg.result_bus_model && cfg.result_bus_model == cfg.mem_pipeline_model)
    return std::string(to_string(cfg.frontend_model));
  return "mixed";
}

json report_to_json(const run_report& r) {
  json j = json::object();
  j["simulator_version"] = r.simulator_version;
  j["trace_digest"] = r.trace_digest;
  j["model"] = r.model;
  j["models"] = {{"frontend", std::string(to_string(r.config.frontend_model))},
                 {"result_bus", std::string(to_string(r.config.result_bus_model))},
                 {"mem_pipeline", std::string(to_string(r.config.mem_pipeline_model))}};
  j["config"] = config_to_json(r.config);
  j["total_cycles"] = r.total_cycles;
  j["kernel_cycles"] = r.kernel_cycles;

  json caches = json::object();
  for (const auto& [name, c] : r.caches) caches[name] = counters_to_json(c);
  j["caches"] = caches;

  json subs = json::array();
  for (const auto& s : r.sub_cores)
    subs.push_back({{"issued", s.issued},
                    {"no_eligible_warp", s.no_eligible_warp},
                    {"scoreboard_block", s.scoreboard_block},
                    {"no_free_cu", s.no_free_cu},
                    {"cu_stall_cycles", s.cu_stall_cycles},
                    {"read_port_conflicts", s.read_port_conflicts},
                    {"bus_stall_cycles", s.bus_stall_cycles},
                    {"bank_port_stall_cycles", s.bank_port_stall_cycles},
                    {"dispatch_latch_stall_cycles", s.dispatch_latch_stall_cycles},
                    {"last_exit_cycle", s.last_exit_cycle}});
  j["sub_cores"] = subs;

  const auto& m = r.memory;
  j["memory"] = {{"dispatch_latch_stall_cycles", m.dispatch_latch_stall_cycles},
                 {"coalescing_cycles", m.coalescing_cycles},
                 {"requests_generated", m.requests_generated},
                 {"requests_granted", m.requests_granted},
                 {"responses_consumed", m.responses_consumed},
                 {"shared_conflict_cycles", m.shared_conflict_cycles},
                 {"wb_latch_stall_cycles", m.wb_latch_stall_cycles},
                 {"request_buffer_full_cycles", m.request_buffer_full_cycles},
                 {"comparators_per_cycle", m.comparators_per_cycle}};

  const auto& c = r.conservation;
  j["conservation"] = {{"fetched", c.fetched},
                       {"decoded", c.decoded},
                       {"issued", c.issued},
                       {"dispatched", c.dispatched},
                       {"completed", c.completed},
                       {"writeback_reservations", c.writeback_reservations},
                       {"writeback_completions", c.writeback_completions},
                       {"scoreboard_pending_at_drain", c.scoreboard_pending_at_drain},
                       {"war_violations", c.war_violations}};

  const auto& v = r.invariants;
  j["invariants"] = {{"violations", v.violations},
                     {"messages", v.messages},
                     {"max_bank_writes_per_cycle", v.max_bank_writes_per_cycle},
                     {"max_icache_accesses_per_cycle", v.max_icache_accesses_per_cycle},
                     {"max_l0i_accesses_per_cycle", v.max_l0i_accesses_per_cycle},
                     {"max_l1i_grants_per_cycle", v.max_l1i_grants_per_cycle},
                     {"max_l0i_outstanding", v.max_l0i_outstanding},
                     {"max_l1d_bank_accepts_per_cycle", v.max_l1d_bank_accepts_per_cycle},
                     {"max_shared_accepts_per_cycle", v.max_shared_accepts_per_cycle}};
  return j;
}

run_report report_from_json(const json& j) {
  try {
    run_report r;
    r.simulator_version = field<std::string>(j, "simulator_version");
    r.trace_digest = field<std::string>(j, "trace_digest");
    r.model = field<std::string>(j, "model");
    r.config = config_from_json(j.at("config"));
    r.total_cycles = field<uint64_t>(j, "total_cycles");
    r.kernel_cycles = field<std::vector<uint64_t>>(j, "kernel_cycles");
    for (const auto& [name, c] : j.at("caches").items())
      r.caches[name] = cache_counters{field<uint64_t>(c, "accesses"), field<uint64_t>(c, "hits"),
                                      field<uint64_t>(c, "misses")};
    for (const auto& s : j.at("sub_cores")) {
      sub_core_report x;
      x.issued = field<uint64_t>(s, "issued");
      x.no_eligible_warp = field<uint64_t>(s, "no_eligible_warp");
      x.scoreboard_block = field<uint64_t>(s, "scoreboard_block");
      x.no_free_cu = field<uint64_t>(s, "no_free_cu");
      x.cu_stall_cycles = field<uint64_t>(s, "cu_stall_cycles");
      x.read_port_conflicts = field<uint64_t>(s, "read_port_conflicts");
      x.bus_stall_cycles = field<uint64_t>(s, "bus_stall_cycles");
      x.bank_port_stall_cycles = field<uint64_t>(s, "bank_port_stall_cycles");
      x.dispatch_latch_stall_cycles = field<uint64_t>(s, "dispatch_latch_stall_cycles");
      x.last_exit_cycle = field<uint64_t>(s, "last_exit_cycle");
      r.sub_cores.push_back(x);
    }
    const auto& m = j.at("memory");
    r.memory.dispatch_latch_stall_cycles = field<uint64_t>(m, "dispatch_latch_stall_cycles");
    r.memory.coalescing_cycles = field<uint64_t>(m, "coalescing_cycles");
    r.memory.requests_generated = field<uint64_t>(m, "requests_generated");
    r.memory.requests_granted = field<uint64_t>(m, "requests_granted");
    r.memory.responses_consumed = field<uint64_t>(m, "responses_consumed");
    r.memory.shared_conflict_cycles = field<uint64_t>(m, "shared_conflict_cycles");
    r.memory.wb_latch_stall_cycles = field<uint64_t>(m, "wb_latch_stall_cycles");
    r.memory.request_buffer_full_cycles = field<uint64_t>(m, "request_buffer_full_cycles");
    r.memory.comparators_per_cycle = field<uint64_t>(m, "comparators_per_cycle");
    const auto& c = j.at("conservation");
    r.conservation.fetched = field<uint64_t>(c, "fetched");
    r.conservation.decoded = field<uint64_t>(c, "decoded");
    r.conservation.issued = field<uint64_t>(c, "issued");
    r.conservation.dispatched = field<uint64_t>(c, "dispatched");
    r.conservation.completed = field<uint64_t>(c, "completed");
    r.conservation.writeback_reservations = field<uint64_t>(c, "writeback_reservations");
    r.conservation.writeback_completions = field<uint64_t>(c, "writeback_completions");
    r.conservation.scoreboard_pending_at_drain = field<uint64_t>(c, "scoreboard_pending_at_drain");
    r.conservation.war_violations = field<uint64_t>(c, "war_violations");
    const auto& v = j.at("invariants");
    r.invariants.violations = field<uint64_t>(v, "violations");
    r.invariants.messages = field<std::vector<std::string>>(v, "messages");
    r.invariants.max_bank_writes_per_cycle = field<unsigned>(v, "max_bank_writes_per_cycle");
    r.invariants.max_icache_accesses_per_cycle = field<unsigned>(v, "max_icache_accesses_per_cycle");
    r.invariants.max_l0i_accesses_per_cycle = field<unsigned>(v, "max_l0i_accesses_per_cycle");
    r.invariants.max_l1i_grants_per_cycle = field<unsigned>(v, "max_l1i_grants_per_cycle");
    r.invariants.max_l0i_outstanding = field<unsigned>(v, "max_l0i_outstanding");
    r.invariants.max_l1d_bank_accepts_per_cycle = field<unsigned>(v, "max_l1d_bank_accepts_per_cycle");
    r.invariants.max_shared_accepts_per_cycle = field<unsigned>(v, "max_shared_accepts_per_cycle");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("report: ") + e.what());
  } catch (const config_error& e) {
    throw std::runtime_error(std::string("report: ") + e.what());
  }
}

std::string serialize_report(const run_report& r) { return report_to_json(r).dump(2) + "\n"; }

void write_report_file(const std::filesystem::path& path, const run_report& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << serialize_report(r);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

run_report load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("report parse error in '" + path.string() + "': " + e.what());
  }
  return report_from_json(j);
}

}  // namespace smsim
