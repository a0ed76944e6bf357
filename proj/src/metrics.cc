#include "smsim/metrics.h"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace smsim {

namespace {

using json = nlohmann::json;

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string factor_text(const miss_rate_factor& f) { return f.factor ? fmt(*f.factor) : "undefined"; }

json factor_json(const miss_rate_factor& f) {
  json j{{"miss_ratio_base", f.base_ratio}, {"miss_ratio_variant", f.variant_ratio}};
  j["miss_rate_increment_factor"] = f.factor ? json(*f.factor) : json(nullptr);
  j["undefined"] = !f.defined();
  return j;
}

cache_counters sum_l0i(const run_report& r) {
  cache_counters total;
  for (const auto& [name, c] : r.caches) {
    if (name.rfind("L0I[", 0) != 0) continue;
    total.accesses += c.accesses;
    total.hits += c.hits;
    total.misses += c.misses;
  }
  return total;
}

}  // namespace

double speedup(uint64_t base_cycles, uint64_t variant_cycles) {
  if (base_cycles == 0 || variant_cycles == 0) throw metrics_error("speedup needs nonzero cycle counts");
  return static_cast<double>(base_cycles) / static_cast<double>(variant_cycles);
}

double avc(uint64_t base_cycles, uint64_t variant_cycles) {
  if (base_cycles == 0) throw metrics_error("avc needs a nonzero base cycle count");
  const double diff = base_cycles > variant_cycles ? static_cast<double>(base_cycles - variant_cycles)
                                                   : static_cast<double>(variant_cycles - base_cycles);
  return diff / static_cast<double>(base_cycles) * 100.0;
}

miss_rate_factor miss_rate_increment_factor(const cache_counters& base, const cache_counters& variant) {
  miss_rate_factor f;
  f.base_ratio = base.miss_ratio();
  f.variant_ratio = variant.miss_ratio();
  if (base.accesses > 0 && variant.accesses > 0 && base.misses > 0) f.factor = f.variant_ratio / f.base_ratio;
  return f;
}

comparison compare(const run_report& base, const run_report& variant) {
  if (base.trace_digest != variant.trace_digest)
    throw digest_mismatch("trace digests differ: " + base.trace_digest + " vs " + variant.trace_digest);
  comparison c;
  c.trace_digest = base.trace_digest;
  c.base_model = base.model;
  c.variant_model = variant.model;
  c.base_cycles = base.total_cycles;
  c.variant_cycles = variant.total_cycles;
  if (base.total_cycles == 0 && variant.total_cycles == 0) {
    c.speedup = 1.0;
    c.avc_percent = 0.0;
  } else {
    c.speedup = speedup(base.total_cycles, variant.total_cycles);
    c.avc_percent = avc(base.total_cycles, variant.total_cycles);
  }
  for (const auto& [name, counters] : base.caches) {
    auto it = variant.caches.find(name);
    if (it != variant.caches.end()) c.caches[name] = miss_rate_increment_factor(counters, it->second);
  }
  const bool base_has_l0 = sum_l0i(base).accesses > 0;
  const cache_counters var_l0 = sum_l0i(variant);
  if (!base_has_l0 && var_l0.accesses > 0 && base.caches.count("L1I"))
    c.caches["L0I(total)"] = miss_rate_increment_factor(base.caches.at("L1I"), var_l0);
  return c;
}

batch_summary aggregate(std::vector<comparison> items) {
  batch_summary b;
  b.count = items.size();
  if (!items.empty()) {
    double log_sum = 0.0;
    double avc_sum = 0.0;
    for (const auto& c : items) {
      log_sum += std::log(c.speedup);
      avc_sum += c.avc_percent;
    }
    b.geomean_speedup = std::exp(log_sum / static_cast<double>(items.size()));
    b.mean_avc_percent = avc_sum / static_cast<double>(items.size());
  }
  b.items = std::move(items);
  return b;
}

json comparison_to_json(const comparison& c) {
  json caches = json::object();
  for (const auto& [name, f] : c.caches) caches[name] = factor_json(f);
  json j{{"trace_digest", c.trace_digest},
         {"base_model", c.base_model},
         {"variant_model", c.variant_model},
         {"base_cycles", c.base_cycles},
         {"variant_cycles", c.variant_cycles},
         {"speedup", c.speedup},
         {"avc_percent", c.avc_percent},
         {"caches", caches}};
  if (!c.label.empty()) j["label"] = c.label;
  return j;
}

json batch_to_json(const batch_summary& b) {
  json items = json::array();
  for (const auto& c : b.items) items.push_back(comparison_to_json(c));
  return json{{"count", b.count},
              {"geomean_speedup", b.geomean_speedup},
              {"mean_avc_percent", b.mean_avc_percent},
              {"comparisons", items}};
}

std::string comparison_table(const comparison& c) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %s\n", "trace_digest", c.trace_digest.c_str());
  out << line;
  std::snprintf(line, sizeof line, "%-22s %s -> %s\n", "models", c.base_model.c_str(), c.variant_model.c_str());
  out << line;
  std::snprintf(line, sizeof line, "%-22s %llu -> %llu\n", "cycles", static_cast<unsigned long long>(c.base_cycles),
                static_cast<unsigned long long>(c.variant_cycles));
  out << line;
  std::snprintf(line, sizeof line, "%-22s %s\n", "speedup", fmt(c.speedup).c_str());
  out << line;
  std::snprintf(line, sizeof line, "%-22s %s%%\n", "avc", fmt(c.avc_percent, 2).c_str());
  out << line;
  if (!c.caches.empty()) {
    std::snprintf(line, sizeof line, "\n%-12s %12s %12s %12s\n", "cache", "miss_base", "miss_variant", "factor");
    out << line;
    for (const auto& [name, f] : c.caches) {
      std::snprintf(line, sizeof line, "%-12s %12s %12s %12s\n", name.c_str(), fmt(f.base_ratio).c_str(),
                    fmt(f.variant_ratio).c_str(), factor_text(f).c_str());
      out << line;
    }
  }
  return out.str();
}

std::string batch_table(const batch_summary& b) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line, "%-32s %12s %12s %10s %10s %10s\n", "trace", "base_cycles", "var_cycles", "speedup",
                "avc_%", "L1I_factor");
  out << line;
  for (const auto& c : b.items) {
    auto it = c.caches.find("L1I");
    const std::string l1i = it == c.caches.end() ? "-" : factor_text(it->second);
    std::snprintf(line, sizeof line, "%-32s %12llu %12llu %10s %10s %10s\n",
                  (c.label.empty() ? c.trace_digest : c.label).c_str(), static_cast<unsigned long long>(c.base_cycles),
                  static_cast<unsigned long long>(c.variant_cycles), fmt(c.speedup).c_str(),
                  fmt(c.avc_percent, 2).c_str(), l1i.c_str());
    out << line;
  }
  const std::string mean_label = "mean (n=" + std::to_string(b.count) + ")";
  std::snprintf(line, sizeof line, "%-32s %12s %12s %10s %10s\n", mean_label.c_str(), "", "",
                fmt(b.geomean_speedup).c_str(), fmt(b.mean_avc_percent, 2).c_str());
  out << line;
  return out.str();
}

std::string comparison_csv(const std::vector<comparison>& items) {
  std::set<std::string> names;
  for (const auto& c : items)
    for (const auto& [n, f] : c.caches) names.insert(n);
  std::ostringstream out;
  out << "label,trace_digest,base_model,variant_model,base_cycles,variant_cycles,speedup,avc_percent";
  for (const auto& n : names) out << ',' << n << "_miss_base," << n << "_miss_variant," << n << "_factor";
  out << '\n';
  for (const auto& c : items) {
    out << c.label << ',' << c.trace_digest << ',' << c.base_model << ',' << c.variant_model << ',' << c.base_cycles
        << ',' << c.variant_cycles << ',' << fmt(c.speedup, 6) << ',' << fmt(c.avc_percent, 6);
    for (const auto& n : names) {
      auto it = c.caches.find(n);
      if (it == c.caches.end()) {
        out << ",,,";
        continue;
      }
      out << ',' << fmt(it->second.base_ratio, 6) << ',' << fmt(it->second.variant_ratio, 6) << ','
          << (it->second.factor ? fmt(*it->second.factor, 6) : "");
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace smsim
