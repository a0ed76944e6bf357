#include "smsim/issue.h"

#include <algorithm>

namespace smsim {

bool scoreboard::blocks(unsigned warp, const instruction& inst) const {
  const auto& set = m_pending[warp];
  if (set.empty()) return false;
  if (inst.dest_reg && set.count(*inst.dest_reg)) return true;
  return std::any_of(inst.src_regs.begin(), inst.src_regs.end(), [&](reg_id r) { return set.count(r) != 0; });
}

bool scoreboard::all_empty() const {
  return std::all_of(m_pending.begin(), m_pending.end(), [](const auto& s) { return s.empty(); });
}

std::optional<unsigned> select_warp_gto(gto_state& state, std::span<const unsigned> eligibles) {
  if (eligibles.empty()) return std::nullopt;
  if (state.last_greedy_warp &&
      std::find(eligibles.begin(), eligibles.end(), *state.last_greedy_warp) != eligibles.end())
    return state.last_greedy_warp;
  const unsigned oldest = *std::min_element(eligibles.begin(), eligibles.end());
  state.last_greedy_warp = oldest;
  return oldest;
}

issue_block check_issue(const warp_state& w, const scoreboard& sb, bool cu_free) {
  const instruction* head = w.ibuf.front();
  if (!w.active() || head == nullptr) return issue_block::empty_ibuffer;
  if (sb.blocks(w.warp_id, *head)) return issue_block::scoreboard;
  if (head->op != op_class::EXIT && !cu_free) return issue_block::no_free_cu;
  return issue_block::none;
}

}  // namespace smsim
