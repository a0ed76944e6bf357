#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "smsim/trace.h"
#include "smsim/warp.h"

namespace smsim {

// Registers with a write in flight, per warp. RAW and WAW are blocked;
// WAR is not tracked (see war_detector in the engine).
class scoreboard {
 public:
  explicit scoreboard(std::size_t warps = 0) : m_pending(warps) {}

  void resize(std::size_t warps) { m_pending.assign(warps, {}); }

  // Returns false if the register was already pending for the warp.
  bool reserve(unsigned warp, reg_id r) { return m_pending[warp].insert(r).second; }
  // Returns false if the register was not pending.
  bool release(unsigned warp, reg_id r) { return m_pending[warp].erase(r) == 1; }

  bool pending(unsigned warp, reg_id r) const { return m_pending[warp].count(r) != 0; }
  // True if any source or the destination of `inst` is pending.
  bool blocks(unsigned warp, const instruction& inst) const;

  bool empty(unsigned warp) const { return m_pending[warp].empty(); }
  bool all_empty() const;
  std::size_t size(unsigned warp) const { return m_pending[warp].size(); }

 private:
  std::vector<std::set<reg_id>> m_pending;
};

struct gto_state {
  std::optional<unsigned> last_greedy_warp;
};

// Greedy: keep the last issued warp while it stays eligible. Then oldest:
// the smallest warp id among the eligible ones.
std::optional<unsigned> select_warp_gto(gto_state& state, std::span<const unsigned> eligibles);

enum class issue_block { none, empty_ibuffer, scoreboard, no_free_cu };

// Why the warp's oldest instruction can or cannot issue this cycle. EXIT
// needs no collector unit.
issue_block check_issue(const warp_state& w, const scoreboard& sb, bool cu_free);

inline bool eligible(const warp_state& w, const scoreboard& sb, bool cu_free) {
  return check_issue(w, sb, cu_free) == issue_block::none;
}

struct issue_stats {
  uint64_t issued = 0;
  uint64_t no_eligible_warp = 0;
  uint64_t scoreboard_block = 0;
  uint64_t no_free_cu = 0;
};

}  // namespace smsim
