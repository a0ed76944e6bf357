#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace smsim {

struct cache_counters {
  uint64_t accesses = 0;
  uint64_t hits = 0;
  uint64_t misses = 0;

  double miss_ratio() const { return accesses ? static_cast<double>(misses) / static_cast<double>(accesses) : 0.0; }
  bool operator==(const cache_counters&) const = default;
};

inline constexpr uint64_t k_unknown_cycle = std::numeric_limits<uint64_t>::max();

// Set-associative LRU cache holding tags only. A miss allocates the line
// immediately and marks it pending, so later accesses to the same line hit
// and merge with the in-flight fill. Hit/miss outcomes therefore depend on
// the access order alone, not on fill timing.
class cache_model {
 public:
  struct access_result {
    bool hit = false;
    // Cycle the line's data is (or will be) present; k_unknown_cycle when
    // the fill has not been scheduled yet.
    uint64_t ready_cycle = 0;
  };

  struct fill {
    uint64_t line_addr;
    uint64_t ready_cycle;
  };

  cache_model(std::string name, unsigned size_bytes, unsigned line_bytes, unsigned assoc);

  const std::string& name() const { return m_name; }
  unsigned num_sets() const { return m_sets; }
  unsigned assoc() const { return m_assoc; }
  unsigned line_bytes() const { return m_line_bytes; }
  uint64_t line_of(uint64_t addr) const { return addr / m_line_bytes * m_line_bytes; }

  // Tag lookup with no side effects on state or counters.
  bool probe(uint64_t addr) const;

  // Counted access. Hits refresh LRU. Misses allocate when asked to (evicting
  // the LRU way), and the new line stays pending until schedule_fill().
  access_result access(uint64_t addr, bool allocate_on_miss = true);

  // Sets the arrival cycle of a pending line and records the fill as
  // outstanding until retire_fills() passes it.
  void schedule_fill(uint64_t addr, uint64_t ready_cycle);

  // Outstanding fills, including misses whose fill time is not known yet.
  std::size_t outstanding() const { return m_mshr.size(); }

  // Removes and returns every outstanding fill with ready_cycle <= now.
  std::vector<fill> retire_fills(uint64_t now);

  const cache_counters& counters() const { return m_counters; }

  // MRU-first way order for one set; exposed for invariant checks.
  const std::vector<unsigned>& lru_order(unsigned set) const { return m_lru[set]; }

 private:
  struct line {
    bool valid = false;
    uint64_t tag = 0;
    uint64_t ready_cycle = 0;
  };

  unsigned set_index(uint64_t addr) const { return static_cast<unsigned>((addr / m_line_bytes) % m_sets); }
  uint64_t tag_of(uint64_t addr) const { return addr / m_line_bytes / m_sets; }
  int find_way(unsigned set, uint64_t tag) const;
  void touch(unsigned set, unsigned way);

  std::string m_name;
  unsigned m_line_bytes;
  unsigned m_assoc;
  unsigned m_sets;
  std::vector<line> m_lines;                // m_sets * m_assoc
  std::vector<std::vector<unsigned>> m_lru;  // per set, MRU first
  std::vector<fill> m_mshr;
  cache_counters m_counters;
};

}  // namespace smsim
