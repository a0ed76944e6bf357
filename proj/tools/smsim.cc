#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "smsim/config.h"
#include "smsim/metrics.h"
#include "smsim/report.h"
#include "smsim/sm_engine.h"
#include "smsim/trace.h"
#include "smsim/trace_gen.h"

namespace fs = std::filesystem;
using namespace smsim;

namespace {

enum exit_code : int { ok = 0, io_error = 1, usage_error = 2, mismatch = 3 };

// A failure with the exit code it maps to.
struct cli_failure {
  int code;
  std::string module;
  std::string message;
};

[[noreturn]] void fail(int code, std::string module, std::string message) {
  throw cli_failure{code, std::move(module), std::move(message)};
}

gpu_config load_config_or_default(const std::string& path) {
  if (path.empty()) return gpu_config{};
  try {
    return load_config(path);
  } catch (const std::exception& e) {
    fail(io_error, "config", e.what());
  }
}

trace_file load_trace(const std::string& path, const gpu_config& cfg) {
  try {
    return parse_trace(path, cfg);
  } catch (const std::exception& e) {
    fail(io_error, "trace", e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(io_error, "output", "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(io_error, "output", "write failed for '" + path + "'");
}

std::string miss_text(const run_report& r, const std::string& cache) {
  auto it = r.caches.find(cache);
  if (it == r.caches.end()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", it->second.miss_ratio());
  return buf;
}

std::string l0i_text(const run_report& r) {
  cache_counters total;
  for (const auto& [name, c] : r.caches)
    if (name.rfind("L0I[", 0) == 0) {
      total.accesses += c.accesses;
      total.misses += c.misses;
    }
  if (total.accesses == 0) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", total.miss_ratio());
  return buf;
}

run_report run_model(const trace_file& t, gpu_config cfg, std::optional<hw_model> model) {
  if (model) cfg.set_model(*model);
  try {
    return simulate(t, cfg);
  } catch (const simulation_error& e) {
    fail(io_error, "sm_engine", e.what());
  } catch (const trace_error& e) {
    fail(io_error, "trace", e.what());
  } catch (const config_error& e) {
    fail(io_error, "config", e.what());
  }
}

// ---- gen-trace -----------------------------------------------------------

struct gen_opts {
  std::string pattern_name;
  unsigned warps = 4;
  unsigned len = 16;
  uint64_t seed = 1;
  uint64_t stride = 128;
  unsigned kernels = 2;
  unsigned body_len = 64;
  double taken_ratio = 0.5;
  unsigned conflict = 2;
  std::string config;
  std::string out;
};

int cmd_gen_trace(const gen_opts& o) {
  const gpu_config cfg = load_config_or_default(o.config);
  workload_spec spec;
  try {
    spec.kind = parse_pattern(o.pattern_name);
  } catch (const workload_error& e) {
    fail(usage_error, "trace_gen", e.what());
  }
  spec.num_warps = o.warps;
  spec.instructions_per_warp = o.len;
  spec.seed = o.seed;
  spec.stride_bytes = o.stride;
  spec.kernel_count = o.kernels;
  spec.body_len = o.body_len;
  spec.taken_ratio = o.taken_ratio;
  spec.conflict_degree = o.conflict;

  trace_file t;
  try {
    t = generate(spec, cfg);
  } catch (const workload_error& e) {
    fail(usage_error, "trace_gen", e.what());
  }
  try {
    write_trace_file(o.out, t);
  } catch (const std::exception& e) {
    fail(io_error, "trace", e.what());
  }

  std::map<std::string, uint64_t> mix;
  std::size_t warps = 0;
  for (const auto& k : t.kernels) {
    warps += k.warps.size();
    for (const auto& w : k.warps)
      for (const auto& in : w) ++mix[std::string(to_string(in.op))];
  }
  std::cout << "wrote " << o.out << ": pattern=" << to_string(spec.kind) << " kernels=" << t.kernels.size()
            << " warps=" << warps << " instructions=" << t.num_instructions() << " digest=" << trace_digest(t) << "\n";
  std::cout << "mix:";
  for (const auto& [op, n] : mix) std::cout << ' ' << op << '=' << n;
  std::cout << "\n";
  return ok;
}

// ---- simulate ------------------------------------------------------------

struct sim_opts {
  std::string trace;
  std::string config;
  std::string model;
  std::string out;
};

int cmd_simulate(const sim_opts& o) {
  const gpu_config cfg = load_config_or_default(o.config);
  std::optional<hw_model> model;
  if (!o.model.empty()) model = parse_model(o.model);
  const trace_file t = load_trace(o.trace, cfg);
  const run_report r = run_model(t, cfg, model);
  try {
    if (!o.out.empty()) write_report_file(o.out, r);
  } catch (const std::exception& e) {
    fail(io_error, "report", e.what());
  }
  std::cout << "model=" << r.model << " cycles=" << r.total_cycles << " L1I_miss=" << miss_text(r, "L1I")
            << " L0I_miss=" << l0i_text(r) << " L1D_miss=" << miss_text(r, "L1D")
            << " violations=" << r.invariants.violations << "\n";
  return ok;
}

// ---- compare -------------------------------------------------------------

struct cmp_opts {
  std::string base;
  std::string variant;
  std::string out;
  std::string format = "table";
};

run_report load_report_or_fail(const std::string& path) {
  try {
    return load_report(path);
  } catch (const std::exception& e) {
    fail(io_error, "report", e.what());
  }
}

int cmd_compare(const cmp_opts& o) {
  const run_report base = load_report_or_fail(o.base);
  const run_report variant = load_report_or_fail(o.variant);
  comparison c;
  try {
    c = compare(base, variant);
  } catch (const digest_mismatch& e) {
    fail(mismatch, "metrics", e.what());
  } catch (const metrics_error& e) {
    fail(mismatch, "metrics", e.what());
  }
  if (o.format == "json")
    write_text(o.out, comparison_to_json(c).dump(2) + "\n");
  else if (o.format == "csv")
    write_text(o.out, comparison_csv({c}));
  else
    write_text(o.out, comparison_table(c));
  return ok;
}

// ---- sweep ---------------------------------------------------------------

struct sweep_opts {
  std::string traces;
  std::string config;
  std::string out;
  std::string format = "json";
  unsigned jobs = 0;
};

int cmd_sweep(const sweep_opts& o) {
  const gpu_config cfg = load_config_or_default(o.config);
  std::error_code ec;
  if (!fs::is_directory(o.traces, ec)) fail(io_error, "sweep", "'" + o.traces + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.traces))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(usage_error, "sweep", "no .jsonl traces in '" + o.traces + "'");

  struct outcome {
    std::optional<comparison> result;
    std::string error;
  };
  std::vector<outcome> results(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        const trace_file t = load_trace(files[i].string(), cfg);
        const run_report b = run_model(t, cfg, hw_model::baseline);
        const run_report v = run_model(t, cfg, hw_model::improved);
        comparison c = compare(b, v);
        c.label = files[i].filename().string();
        results[i].result = std::move(c);
      } catch (const cli_failure& f) {
        results[i].error = f.module + ": " + f.message;
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  unsigned jobs = o.jobs ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(files.size()));
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::vector<comparison> done;
  nlohmann::json failures = nlohmann::json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (results[i].result) {
      done.push_back(*results[i].result);
    } else {
      failures.push_back({{"trace", files[i].filename().string()}, {"error", results[i].error}});
      std::cerr << "smsim: sweep: " << files[i].filename().string() << ": " << results[i].error << "\n";
    }
  }
  const batch_summary summary = aggregate(done);
  if (o.format == "table") {
    write_text(o.out, batch_table(summary));
  } else if (o.format == "csv") {
    write_text(o.out, comparison_csv(summary.items));
  } else {
    auto j = batch_to_json(summary);
    j["failures"] = failures;
    write_text(o.out, j.dump(2) + "\n");
  }
  return failures.empty() ? ok : io_error;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smsim: trace-driven simulator of one GPU streaming multiprocessor"};
  app.require_subcommand(1);

  gen_opts gen;
  auto* g = app.add_subcommand("gen-trace", "generate a synthetic trace");
  g->add_option("--pattern", gen.pattern_name,
                "coalesced|strided|random|icache_thrash|branch_heavy|shared_conflict|mixed")
      ->required();
  g->add_option("--warps", gen.warps, "warps per kernel");
  g->add_option("--len", gen.len, "instructions per warp, EXIT included");
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--stride", gen.stride, "byte stride for strided");
  g->add_option("--kernels", gen.kernels, "kernel count for icache_thrash");
  g->add_option("--body-len", gen.body_len, "instructions before EXIT for icache_thrash");
  g->add_option("--taken-ratio", gen.taken_ratio, "taken fraction for branch_heavy");
  g->add_option("--conflict-degree", gen.conflict, "bank conflict degree for shared_conflict");
  g->add_option("--config", gen.config, "config JSON");
  g->add_option("--out", gen.out, "output trace path")->required();

  sim_opts sim;
  auto* s = app.add_subcommand("simulate", "run one trace on one model");
  s->add_option("--trace", sim.trace, "trace path")->required();
  s->add_option("--config", sim.config, "config JSON");
  s->add_option("--model", sim.model, "overrides every subsystem model")
      ->check(CLI::IsMember({"baseline", "improved"}));
  s->add_option("--out", sim.out, "report path");

  cmp_opts cmp;
  auto* c = app.add_subcommand("compare", "compare two run reports");
  c->add_option("--base", cmp.base, "baseline report")->required();
  c->add_option("--variant", cmp.variant, "variant report")->required();
  c->add_option("--out", cmp.out, "output path, stdout when absent");
  c->add_option("--format", cmp.format)->check(CLI::IsMember({"json", "table", "csv"}));

  sweep_opts sw;
  auto* w = app.add_subcommand("sweep", "run both models on every trace in a directory");
  w->add_option("--traces", sw.traces, "directory of .jsonl traces")->required();
  w->add_option("--config", sw.config, "config JSON");
  w->add_option("--out", sw.out, "output path, stdout when absent");
  w->add_option("--format", sw.format)->check(CLI::IsMember({"json", "table", "csv"}));
  w->add_option("--jobs", sw.jobs, "worker threads, 0 for one per core");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage_error;
  }

  try {
    if (*g) return cmd_gen_trace(gen);
    if (*s) return cmd_simulate(sim);
    if (*c) return cmd_compare(cmp);
    if (*w) return cmd_sweep(sw);
  } catch (const cli_failure& f) {
    std::cerr << "smsim: " << f.module << ": " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "smsim: " << e.what() << "\n";
    return io_error;
  }
  return usage_error;
}
