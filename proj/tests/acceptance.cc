// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <list>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fixtures.h"
#include "smsim/arbiter.h"
#include "smsim/cache.h"
#include "smsim/memory_pipeline.h"
#include "smsim/metrics.h"
#include "smsim/result_bus.h"
#include "smsim/sm_engine.h"
#include "smsim/trace_gen.h"

using namespace smsim;

namespace {

struct outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(const char* name, const std::function<outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++g_failures;
  std::printf("%s  %-28s %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

run_report run(const trace_file& t, gpu_config cfg) { return simulate(t, cfg); }

run_report run(const trace_file& t, hw_model m) {
  gpu_config cfg;
  cfg.set_model(m);
  return simulate(t, cfg);
}

// Brute-force grouping: for every sector, the set of active lanes in it.
std::map<uint64_t, uint32_t> group_oracle(const instruction& in, unsigned width, unsigned sector) {
  std::map<uint64_t, uint32_t> g;
  for (unsigned l = 0; l < width; ++l)
    if ((in.active_mask >> l) & 1u) g[in.mem_addrs[l] - in.mem_addrs[l] % sector] |= 1u << l;
  return g;
}

outcome coalescer_oracle() {
  gpu_config cfg;
  xorshift64 rng(12345);
  const unsigned width = cfg.warp_width;
  for (int trial = 0; trial < 10000; ++trial) {
    instruction in = fixtures::make(0, 0, op_class::LD_GLOBAL, width);
    in.mem_addrs.resize(width);
    // Vary the address spread so results range from 1 to 32 requests.
    const uint64_t span = 1ull << (2 + rng.below(14));
    const uint64_t base = 0x1000'0000ull + rng.below(1u << 20) * 4;
    for (auto& a : in.mem_addrs) a = base + rng.below(span);
    in.active_mask = rng.below(4) == 0 ? static_cast<uint32_t>(rng.next()) : 0xFFFFFFFFu;
    if (in.active_mask == 0) in.active_mask = 1;

    const auto oracle = group_oracle(in, width, cfg.sector_bytes);
    std::map<uint64_t, uint32_t> full;
    for (const auto& r : coalesce_full(in, cfg).requests) full[r.sector_addr] |= r.lane_mask;

    address_latch latch;
    latch.load(in, 0);
    std::map<uint64_t, uint32_t> step;
    std::size_t cycles = 0;
    while (latch.occupied()) {
      auto r = coalesce_step(latch, cfg);
      if (!r) return {false, "coalesce_step returned nothing while occupied"};
      if (step.count(r->sector_addr)) return {false, "sector emitted twice"};
      step[r->sector_addr] = r->lane_mask;
      ++cycles;
      if (cycles > width) return {false, "coalesce_step did not terminate"};
    }
    if (full != oracle) return {false, "coalesce_full differs from oracle at trial " + std::to_string(trial)};
    if (step != oracle) return {false, "coalesce_step differs from oracle at trial " + std::to_string(trial)};
    if (cycles != oracle.size()) return {false, "cycle count != request count at trial " + std::to_string(trial)};
  }
  return {true, "10000 vectors, step == full == oracle, cycles == requests"};
}

outcome comparator_cost() {
  const uint64_t full = comparator_count_full(32);
  const uint64_t step = comparator_count_step(32);
  workload_spec s;
  s.kind = pattern::coalesced;
  s.num_warps = 2;
  s.instructions_per_warp = 8;
  const trace_file t = generate(s, gpu_config{});
  const auto b = run(t, hw_model::baseline).memory.comparators_per_cycle;
  const auto i = run(t, hw_model::improved).memory.comparators_per_cycle;
  const bool ok = full == 496 && step == 32 && b == 496 && i == 32;
  return {ok, "formula " + std::to_string(full) + "/" + std::to_string(step) + ", reported baseline " +
                  std::to_string(b) + " improved " + std::to_string(i)};
}

outcome sub_core_mapping() {
  for (unsigned w = 0; w < 32; ++w)
    if (sub_core_of(w, 4) != w % 4) return {false, "warp " + std::to_string(w)};
  // Engine placement: only warps 1, 5 and 9 carry an ALU op.
  std::vector<std::vector<instruction>> warps(12);
  for (unsigned w = 0; w < 12; ++w) {
    if (w % 4 == 1) {
      auto a = fixtures::make(w, 0, op_class::ALU_SP);
      a.dest_reg = 1;
      warps[w].push_back(a);
    }
    warps[w].push_back(fixtures::make(w, warps[w].size() * 16, op_class::EXIT));
  }
  const auto r = run(fixtures::single_kernel(warps), hw_model::improved);
  const std::vector<uint64_t> issued{r.sub_cores[0].issued, r.sub_cores[1].issued, r.sub_cores[2].issued,
                                     r.sub_cores[3].issued};
  // Each sub-core issues one EXIT per warp it owns; sub-core 1 also gets the ALU ops.
  const bool ok = issued[0] == 3 && issued[1] == 6 && issued[2] == 3 && issued[3] == 3;
  return {ok, "warp_id % 4 for ids 0..31; engine issue counts " + std::to_string(issued[0]) + "/" +
                  std::to_string(issued[1]) + "/" + std::to_string(issued[2]) + "/" + std::to_string(issued[3])};
}

outcome result_bus_limit() {
  // Unit-level fuzz: 10^5 cycles of random reservations against the
  // improved schedule, checked against an independent per-(cycle, bank)
  // tally.
  xorshift64 rng(99);
  writeback_schedule sched(hw_model::improved, 4, 2, 8);
  std::map<std::pair<uint64_t, unsigned>, unsigned> tally;
  uint64_t accepted = 0;
  for (uint64_t now = 0; now < 100000; ++now) {
    const unsigned attempts = static_cast<unsigned>(rng.below(5));
    for (unsigned a = 0; a < attempts; ++a) {
      const unsigned lat = 1 + static_cast<unsigned>(rng.below(40));
      const unsigned bank = static_cast<unsigned>(rng.below(8));
      writeback_entry e{inflight_inst{}, bank};
      if (sched.try_reserve(now, lat, e)) {
        ++accepted;
        if (++tally[{now + lat, bank}] > 2) return {false, "schedule over-committed a bank"};
      }
    }
    for (const auto& e : sched.commit(now)) (void)e;
  }

  // Engine-level: mixed workloads under the improved result bus, with the
  // online assertion counting any cycle where a bank takes > 2 writes.
  uint64_t cycles = 0;
  uint64_t violations = 0;
  unsigned worst = 0;
  gpu_config cfg;
  cfg.set_model(hw_model::improved);
  for (uint64_t seed = 1; cycles < 100000; ++seed) {
    workload_spec s;
    s.kind = pattern::mixed;
    s.seed = seed;
    s.num_warps = 32;
    s.instructions_per_warp = 400;
    const auto r = run(generate(s, cfg), cfg);
    cycles += r.total_cycles;
    violations += r.invariants.violations;
    worst = std::max(worst, r.invariants.max_bank_writes_per_cycle);
  }

  const auto base = run(fixtures::three_same_bank(), fixtures::three_same_bank_config(hw_model::baseline));
  const auto impr = run(fixtures::three_same_bank(), fixtures::three_same_bank_config(hw_model::improved));
  const bool ok = violations == 0 && worst <= 2 && base.invariants.max_bank_writes_per_cycle == 3 &&
                  impr.invariants.max_bank_writes_per_cycle <= 2 && impr.invariants.violations == 0;
  return {ok, "fuzz " + std::to_string(accepted) + " reservations; engine " + std::to_string(cycles) +
                  " cycles, max " + std::to_string(worst) + " writes/bank, " + std::to_string(violations) +
                  " violations; 3-same-bank baseline " + std::to_string(base.invariants.max_bank_writes_per_cycle) +
                  " improved " + std::to_string(impr.invariants.max_bank_writes_per_cycle)};
}

outcome kernel_aliasing() {
  workload_spec s;
  s.kind = pattern::icache_thrash;
  s.kernel_count = 2;
  s.body_len = 64;
  s.num_warps = 4;
  const trace_file t = generate(s, gpu_config{});
  const auto b = run(t, hw_model::baseline);
  const auto i = run(t, hw_model::improved);
  const auto c = compare(b, i);
  const auto& f = c.caches.at("L1I");
  const uint64_t bm = b.caches.at("L1I").misses;
  const uint64_t im = i.caches.at("L1I").misses;
  const bool ok = bm < im && f.factor && *f.factor > 1.0;
  return {ok, "L1I misses baseline " + std::to_string(bm) + " < improved " + std::to_string(im) + ", factor " +
                  (f.factor ? std::to_string(*f.factor) : std::string("undefined"))};
}

outcome head_of_line() {
  std::string detail;
  bool ok = true;
  for (hw_model m : {hw_model::improved, hw_model::baseline}) {
    const auto exp = run(fixtures::isolation(true), m);
    const auto ctl = run(fixtures::isolation(false), m);
    detail += std::string(to_string(m)) + " [";
    for (unsigned s = 1; s < 4; ++s) {
      const uint64_t e = exp.sub_cores[s].last_exit_cycle;
      const uint64_t c = ctl.sub_cores[s].last_exit_cycle;
      detail += std::to_string(e) + "/" + std::to_string(c) + (s < 3 ? " " : "");
      if (m == hw_model::improved && e != c) ok = false;
      if (m == hw_model::baseline && e <= c) ok = false;
    }
    detail += "] ";
  }
  return {ok, "sub-cores 1-3 exit cycle scatter/control: " + detail};
}

outcome arbiter_fairness() {
  round_robin_arbiter arb(4);
  std::vector<std::size_t> grants;
  for (int cycle = 0; cycle < 10000; ++cycle) grants.push_back(*arb.arbitrate([](std::size_t) { return true; }));
  for (std::size_t i = 0; i + 4 <= grants.size(); ++i) {
    std::set<std::size_t> window(grants.begin() + i, grants.begin() + i + 4);
    if (window.size() != 4) return {false, "window at grant " + std::to_string(i)};
  }

  // Same check on the L1I arbiter inside the front-end. Every warp runs
  // straight-line code in its own region, so each fetch misses a fresh
  // line; short fill latencies keep every sub-core's L0I miss queue
  // non-empty.
  gpu_config cfg;
  cfg.set_model(hw_model::improved);
  cfg.l0i_max_outstanding = 1u << 20;
  cfg.l2_latency_cycles = 1;
  cfg.l1i_hit_latency = 1;
  std::vector<std::vector<instruction>> warps(32);
  for (unsigned w = 0; w < 32; ++w) {
    const uint64_t region = (1ull + w) << 20;
    for (unsigned k = 0; k < 3000; ++k) warps[w].push_back(fixtures::make(w, region + 16ull * k, op_class::ALU_INT));
    warps[w].push_back(fixtures::make(w, region + 16ull * 3000, op_class::EXIT));
  }
  const trace_file t = fixtures::single_kernel(warps);
  sm machine(cfg, t);
  std::vector<std::pair<uint64_t, unsigned>> fe;
  machine.front().set_grant_observer([&](uint64_t c, unsigned s) { fe.push_back({c, s}); });
  while (fe.size() < 10000 && !machine.drained()) machine.step();
  if (fe.size() < 10000) return {false, "front-end produced only " + std::to_string(fe.size()) + " grants"};
  std::size_t violations = 0;
  for (std::size_t i = 0; i + 4 <= fe.size(); ++i) {
    std::set<unsigned> window;
    for (std::size_t k = 0; k < 4; ++k) window.insert(fe[i + k].second);
    if (window.size() != 4) ++violations;
  }
  bool consecutive = true;
  for (std::size_t i = 1; i < fe.size(); ++i)
    if (fe[i].first != fe[i - 1].first + 1) consecutive = false;
  return {violations == 0 && consecutive,
          "arbiter 10000 grants, front-end " + std::to_string(fe.size()) + " grants from cycle " +
              std::to_string(fe.front().first) + ", " + std::to_string(violations) + " window violations"};
}

outcome determinism() {
  std::size_t runs = 0;
  for (const auto& f : fixtures::suite()) {
    for (hw_model m : {hw_model::baseline, hw_model::improved}) {
      const std::string a = serialize_report(run(f.trace, m));
      const std::string b = serialize_report(run(f.trace, m));
      if (a != b) return {false, f.name + " on " + std::string(to_string(m))};
      // Generation and serialization are deterministic as well.
      if (serialize_trace(f.trace) != serialize_trace(f.trace)) return {false, "trace serialization " + f.name};
      ++runs;
    }
  }
  return {true, std::to_string(runs) + " fixture/model pairs byte-identical"};
}

outcome conservation() {
  std::size_t checked = 0;
  for (const auto& f : fixtures::suite()) {
    for (hw_model m : {hw_model::baseline, hw_model::improved}) {
      const auto r = run(f.trace, m);
      const auto& c = r.conservation;
      const auto& mem = r.memory;
      const uint64_t expected = f.trace.num_instructions();
      const std::string where = f.name + "/" + std::string(to_string(m)) + ": ";
      if (c.issued != expected || c.dispatched != expected || c.completed != expected)
        return {false, where + "issued/dispatched/completed " + std::to_string(c.issued) + "/" +
                           std::to_string(c.dispatched) + "/" + std::to_string(c.completed) + " of " +
                           std::to_string(expected)};
      if (c.fetched != expected || c.decoded != expected) return {false, where + "fetch/decode count"};
      if (c.scoreboard_pending_at_drain != 0) return {false, where + "scoreboard not empty"};
      if (c.writeback_reservations != c.writeback_completions) return {false, where + "write-back slots unbalanced"};
      if (mem.requests_generated != mem.requests_granted || mem.requests_granted != mem.responses_consumed)
        return {false, where + "memory requests unbalanced"};
      if (r.invariants.violations != 0) return {false, where + r.invariants.messages.front()};
      uint64_t kernels = 0;
      for (uint64_t k : r.kernel_cycles) kernels += k;
      if (kernels != r.total_cycles) return {false, where + "kernel cycles do not add up"};
      ++checked;
    }
  }
  return {true, std::to_string(checked) + " drained runs balanced, zero violations"};
}

outcome metrics_algebra() {
  xorshift64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const uint64_t a = 1 + rng.below(1'000'000);
    const uint64_t b = 1 + rng.below(1'000'000);
    const uint64_t k = 1 + rng.below(1000);
    const double tol = 1e-9;
    if (std::fabs(avc(k * a, k * b) - avc(a, b)) > tol * std::max(1.0, avc(a, b))) return {false, "avc scale"};
    if (std::fabs(speedup(k * a, k * b) - speedup(a, b)) > tol * speedup(a, b)) return {false, "speedup scale"};
    if (std::fabs(speedup(a, b) * speedup(b, a) - 1.0) > tol) return {false, "speedup reciprocity"};
    const uint64_t d = rng.below(a);
    if (avc(a, a + d) != avc(a, a - d)) return {false, "avc symmetry"};
    if (avc(a, b) < 0.0 || speedup(a, b) <= 0.0) return {false, "sign"};
  }
  std::size_t identities = 0;
  for (const auto& f : fixtures::suite()) {
    const auto r = run(f.trace, hw_model::improved);
    const auto c = compare(r, r);
    if (c.speedup != 1.0 || c.avc_percent != 0.0) return {false, "compare(r, r) not identity on " + f.name};
    for (const auto& [name, fac] : c.caches) {
      const bool has_misses = r.caches.count(name) ? r.caches.at(name).misses > 0 : true;
      if (has_misses && (!fac.factor || *fac.factor != 1.0)) return {false, "factor " + name + " on " + f.name};
      if (!has_misses && fac.factor) return {false, "zero-miss factor should be undefined"};
    }
    ++identities;
  }
  return {true, "10000 random pairs; " + std::to_string(identities) + " self-comparisons are identities"};
}

// Reference LRU: one most-recent-first list of tags per set.
class lru_oracle {
 public:
  lru_oracle(unsigned size, unsigned line, unsigned assoc)
      : m_line(line), m_assoc(assoc), m_sets(size / (line * assoc)), m_lists(m_sets) {}

  bool access(uint64_t addr, bool allocate) {
    const uint64_t blk = addr / m_line;
    auto& l = m_lists[blk % m_sets];
    auto it = std::find(l.begin(), l.end(), blk);
    if (it != l.end()) {
      l.erase(it);
      l.push_front(blk);
      return true;
    }
    if (allocate) {
      l.push_front(blk);
      if (l.size() > m_assoc) l.pop_back();
    }
    return false;
  }

 private:
  unsigned m_line;
  unsigned m_assoc;
  unsigned m_sets;
  std::vector<std::list<uint64_t>> m_lists;
};

outcome cache_lru() {
  gpu_config cfg;
  struct geo {
    const char* name;
    unsigned size;
    bool stores;
  };
  const geo geos[] = {{"L0I", cfg.l0i_size_bytes, false},
                      {"L1I", cfg.l1i_size_bytes, false},
                      {"L1D", cfg.l1d_size_bytes, true}};
  std::string detail;
  for (const auto& g : geos) {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      cache_model cache(g.name, g.size, cfg.cache_line_bytes, cfg.cache_assoc);
      lru_oracle oracle(g.size, cfg.cache_line_bytes, cfg.cache_assoc);
      xorshift64 rng(seed);
      // Footprint about twice the capacity so hits and evictions both occur.
      const uint64_t footprint = 2ull * g.size;
      uint64_t hits = 0;
      for (uint64_t now = 0; now < 10000; ++now) {
        const uint64_t addr = rng.below(footprint);
        const bool allocate = !(g.stores && rng.below(4) == 0);
        const auto r = cache.access(addr, allocate);
        if (!r.hit && allocate) cache.schedule_fill(addr, now + 1 + rng.below(200));
        cache.retire_fills(now);
        if (r.hit != oracle.access(addr, allocate))
          return {false, std::string(g.name) + " diverged at access " + std::to_string(now)};
        hits += r.hit;
      }
      if (seed == 1) detail += std::string(g.name) + " hits " + std::to_string(hits) + "/10000 ";
    }
  }
  return {true, detail + "(3 seeds each, exact)"};
}

}  // namespace

int main() {
  report("coalescer_oracle", coalescer_oracle);
  report("comparator_cost", comparator_cost);
  report("sub_core_mapping", sub_core_mapping);
  report("result_bus_port_limit", result_bus_limit);
  report("kernel_aliasing", kernel_aliasing);
  report("head_of_line_isolation", head_of_line);
  report("arbiter_fairness", arbiter_fairness);
  report("determinism", determinism);
  report("conservation", conservation);
  report("metrics_algebra", metrics_algebra);
  report("cache_lru_oracle", cache_lru);
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
