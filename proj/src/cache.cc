#include "smsim/cache.h"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace smsim {

cache_model::cache_model(std::string name, unsigned size_bytes, unsigned line_bytes, unsigned assoc)
    : m_name(std::move(name)), m_line_bytes(line_bytes), m_assoc(assoc) {
  if (line_bytes == 0 || assoc == 0 || size_bytes % (line_bytes * assoc) != 0 || size_bytes == 0)
    throw std::invalid_argument(m_name + ": size must be a positive multiple of line_bytes * assoc");
  m_sets = size_bytes / (line_bytes * assoc);
  m_lines.resize(static_cast<std::size_t>(m_sets) * m_assoc);
  m_lru.resize(m_sets);
  for (auto& order : m_lru) {
    order.resize(m_assoc);
    for (unsigned w = 0; w < m_assoc; ++w) order[w] = w;
  }
}

int cache_model::find_way(unsigned set, uint64_t tag) const {
  const line* base = &m_lines[static_cast<std::size_t>(set) * m_assoc];
  for (unsigned w = 0; w < m_assoc; ++w)
    if (base[w].valid && base[w].tag == tag) return static_cast<int>(w);
  return -1;
}

void cache_model::touch(unsigned set, unsigned way) {
  auto& order = m_lru[set];
  auto it = std::find(order.begin(), order.end(), way);
  assert(it != order.end());
  std::rotate(order.begin(), it, it + 1);
}

bool cache_model::probe(uint64_t addr) const { return find_way(set_index(addr), tag_of(addr)) >= 0; }

cache_model::access_result cache_model::access(uint64_t addr, bool allocate_on_miss) {
  const unsigned set = set_index(addr);
  const uint64_t tag = tag_of(addr);
  ++m_counters.accesses;
  if (int way = find_way(set, tag); way >= 0) {
    ++m_counters.hits;
    touch(set, static_cast<unsigned>(way));
    return {true, m_lines[static_cast<std::size_t>(set) * m_assoc + way].ready_cycle};
  }
  ++m_counters.misses;
  if (!allocate_on_miss) return {false, k_unknown_cycle};

  // Prefer an invalid way, otherwise evict the LRU one.
  line* base = &m_lines[static_cast<std::size_t>(set) * m_assoc];
  unsigned victim = m_lru[set].back();
  for (unsigned w = 0; w < m_assoc; ++w)
    if (!base[w].valid) {
      victim = w;
      break;
    }
  base[victim] = line{true, tag, k_unknown_cycle};
  touch(set, victim);
  m_mshr.push_back({line_of(addr), k_unknown_cycle});
  return {false, k_unknown_cycle};
}

void cache_model::schedule_fill(uint64_t addr, uint64_t ready_cycle) {
  const uint64_t la = line_of(addr);
  for (auto& f : m_mshr)
    if (f.line_addr == la && f.ready_cycle == k_unknown_cycle) f.ready_cycle = ready_cycle;
  const unsigned set = set_index(addr);
  if (int way = find_way(set, tag_of(addr)); way >= 0) {
    auto& l = m_lines[static_cast<std::size_t>(set) * m_assoc + way];
    if (l.ready_cycle == k_unknown_cycle) l.ready_cycle = ready_cycle;
  }
}

std::vector<cache_model::fill> cache_model::retire_fills(uint64_t now) {
  std::vector<fill> done;
  auto keep = std::stable_partition(m_mshr.begin(), m_mshr.end(), [now](const fill& f) {
    return f.ready_cycle == k_unknown_cycle || f.ready_cycle > now;
  });
  done.assign(keep, m_mshr.end());
  m_mshr.erase(keep, m_mshr.end());
  return done;
}

}  // namespace smsim
