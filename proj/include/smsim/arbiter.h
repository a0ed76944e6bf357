#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace smsim {

// Round-robin priority arbiter. The input after the last winner has the
// highest priority on the next arbitration.
class round_robin_arbiter {
 public:
  explicit round_robin_arbiter(std::size_t inputs) : m_inputs(inputs) {}

  std::size_t size() const { return m_inputs; }
  std::size_t pointer() const { return m_pointer; }

  // `requesting(i)` tells whether input i wants a grant this cycle.
  template <typename Pred>
  std::optional<std::size_t> arbitrate(Pred&& requesting) {
    for (std::size_t k = 0; k < m_inputs; ++k) {
      const std::size_t i = (m_pointer + k) % m_inputs;
      if (requesting(i)) {
        m_pointer = (i + 1) % m_inputs;
        return i;
      }
    }
    return std::nullopt;
  }

  std::optional<std::size_t> arbitrate(const std::vector<bool>& requests) {
    return arbitrate([&](std::size_t i) { return requests[i]; });
  }

  // Rotates priority by one regardless of requests.
  void rotate() { m_pointer = (m_pointer + 1) % m_inputs; }

 private:
  std::size_t m_inputs;
  std::size_t m_pointer = 0;
};

}  // namespace smsim
