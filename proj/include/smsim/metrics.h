#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "smsim/cache.h"
#include "smsim/report.h"

namespace smsim {

class metrics_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by compare() when the two reports were produced from different traces.
class digest_mismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// base / variant; both must be positive.
double speedup(uint64_t base_cycles, uint64_t variant_cycles);
// |variant - base| / base * 100; base must be positive.
double avc(uint64_t base_cycles, uint64_t variant_cycles);

struct miss_rate_factor {
  double base_ratio = 0.0;
  double variant_ratio = 0.0;
  std::optional<double> factor;  // empty when the base ratio is zero
  bool defined() const { return factor.has_value(); }
};

miss_rate_factor miss_rate_increment_factor(const cache_counters& base, const cache_counters& variant);

struct comparison {
  std::string label;  // trace name in a batch; may be empty
  std::string trace_digest;
  std::string base_model;
  std::string variant_model;
  uint64_t base_cycles = 0;
  uint64_t variant_cycles = 0;
  double speedup = 1.0;
  double avc_percent = 0.0;
  // Caches present in both reports. L0I slices of the variant are summed and
  // compared against the base L1I under the name "L0I(total)" when the base
  // has no L0I.
  std::map<std::string, miss_rate_factor> caches;
};

comparison compare(const run_report& base, const run_report& variant);

struct batch_summary {
  std::vector<comparison> items;
  std::size_t count = 0;
  double geomean_speedup = 1.0;
  double mean_avc_percent = 0.0;
};

// Unweighted aggregate: geometric mean of speedups, arithmetic mean of AVC.
batch_summary aggregate(std::vector<comparison> items);

nlohmann::json comparison_to_json(const comparison& c);
nlohmann::json batch_to_json(const batch_summary& b);
std::string comparison_table(const comparison& c);
std::string batch_table(const batch_summary& b);
// Header plus one row per comparison; caches flattened as <name>_factor.
std::string comparison_csv(const std::vector<comparison>& items);

}  // namespace smsim
