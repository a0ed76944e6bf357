#include "smsim/trace.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace smsim {

namespace {

constexpr const char* k_format = "smsim-trace";
constexpr int k_version = 1;

// Per-instruction checks; `where` prefixes the message (line number or
// kernel/warp coordinates).
void check_instruction(const instruction& in, unsigned warp_width, const std::string& where) {
  auto bad = [&](const std::string& what) { throw trace_error(where + ": " + what); };
  if (in.pc % instruction_bytes != 0) bad("pc not aligned to 16 bytes");
  if (in.active_mask == 0) bad("active_mask is zero");
  if (warp_width < 32 && (in.active_mask >> warp_width) != 0) bad("active_mask has lanes beyond warp_width");
  if (is_memory(in.op)) {
    if (in.mem_addrs.size() != warp_width)
      bad(std::string(to_string(in.op)) + " requires mem_addrs with exactly warp_width entries");
  } else if (!in.mem_addrs.empty()) {
    bad("mem_addrs present on non-memory opcode " + std::string(to_string(in.op)));
  }
  if (in.branch_target && in.op != op_class::BRANCH) bad("branch_target on non-BRANCH opcode");
  if ((in.op == op_class::ST_GLOBAL || in.op == op_class::ST_SHARED || in.op == op_class::EXIT ||
       in.op == op_class::BRANCH) &&
      in.dest_reg)
    bad(std::string(to_string(in.op)) + " cannot have a destination register");
}

nlohmann::json instruction_to_json(const instruction& in) {
  nlohmann::json j = nlohmann::json::object();
  j["kernel"] = in.kernel_id;
  j["warp"] = in.warp_id;
  j["pc"] = in.pc;
  j["op"] = std::string(to_string(in.op));
  if (in.dest_reg) j["dst"] = *in.dest_reg;
  j["src"] = in.src_regs;
  j["mask"] = in.active_mask;
  if (!in.mem_addrs.empty()) j["addrs"] = in.mem_addrs;
  if (in.branch_target) j["target"] = *in.branch_target;
  return j;
}

template <typename T>
T get_uint(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw trace_error(where + ": missing '" + key + "'");
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<int64_t>() >= 0))
    throw trace_error(where + ": '" + key + "' must be an unsigned integer");
  auto v = it->get<uint64_t>();
  if (v > std::numeric_limits<T>::max()) throw trace_error(where + ": '" + key + "' out of range");
  return static_cast<T>(v);
}

instruction instruction_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw trace_error(where + ": expected a JSON object");
  static const char* known[] = {"kernel", "warp", "pc", "op", "dst", "src", "mask", "addrs", "target"};
  for (const auto& [k, v] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) ==
        std::end(known))
      throw trace_error(where + ": unknown key '" + k + "'");

  instruction in;
  in.kernel_id = get_uint<unsigned>(j, "kernel", where);
  in.warp_id = get_uint<unsigned>(j, "warp", where);
  in.pc = get_uint<uint64_t>(j, "pc", where);
  auto op = j.find("op");
  if (op == j.end() || !op->is_string()) throw trace_error(where + ": missing or non-string 'op'");
  try {
    in.op = parse_op_class(op->get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw trace_error(where + ": " + e.what());
  }
  if (j.contains("dst")) in.dest_reg = get_uint<reg_id>(j, "dst", where);
  if (auto s = j.find("src"); s != j.end()) {
    if (!s->is_array()) throw trace_error(where + ": 'src' must be an array");
    for (const auto& r : *s) {
      if (!r.is_number_unsigned()) throw trace_error(where + ": 'src' entries must be unsigned");
      auto v = r.get<uint64_t>();
      if (v > std::numeric_limits<reg_id>::max()) throw trace_error(where + ": register id out of range");
      in.src_regs.push_back(static_cast<reg_id>(v));
    }
  }
  in.active_mask = get_uint<uint32_t>(j, "mask", where);
  if (auto a = j.find("addrs"); a != j.end()) {
    if (!a->is_array()) throw trace_error(where + ": 'addrs' must be an array");
    for (const auto& x : *a) {
      if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<int64_t>() >= 0))
        throw trace_error(where + ": 'addrs' entries must be unsigned 64-bit integers");
      in.mem_addrs.push_back(x.get<uint64_t>());
    }
  }
  if (j.contains("target")) in.branch_target = get_uint<uint64_t>(j, "target", where);
  return in;
}

}  // namespace

std::size_t kernel_trace::num_instructions() const {
  std::size_t n = 0;
  for (const auto& w : warps) n += w.size();
  return n;
}

uint64_t kernel_trace::image_bytes() const {
  uint64_t hi = 0;
  for (const auto& w : warps)
    for (const auto& in : w) hi = std::max(hi, in.pc + instruction_bytes);
  return hi;
}

std::size_t trace_file::num_instructions() const {
  std::size_t n = 0;
  for (const auto& k : kernels) n += k.num_instructions();
  return n;
}

void validate_trace(const trace_file& t, const gpu_config& cfg) {
  if (t.warp_width != cfg.warp_width)
    throw trace_error("trace warp_width " + std::to_string(t.warp_width) + " does not match config warp_width " +
                      std::to_string(cfg.warp_width));
  for (std::size_t k = 0; k < t.kernels.size(); ++k) {
    const auto& kt = t.kernels[k];
    const std::string kname = "kernel " + std::to_string(k);
    if (kt.kernel_id != k) throw trace_error(kname + ": kernel ids must be dense and in order");
    if (kt.warps.empty()) throw trace_error(kname + ": no warps");
    if (kt.warps.size() > cfg.max_warps_per_sm)
      throw trace_error(kname + ": " + std::to_string(kt.warps.size()) + " warps exceeds max_warps_per_sm " +
                        std::to_string(cfg.max_warps_per_sm));
    std::vector<int> seen(kt.warps.size(), 0);
    for (const auto& cta : kt.ctas)
      for (unsigned w : cta) {
        if (w >= kt.warps.size()) throw trace_error(kname + ": CTA lists unknown warp " + std::to_string(w));
        ++seen[w];
      }
    for (std::size_t w = 0; w < seen.size(); ++w)
      if (seen[w] != 1) throw trace_error(kname + ": warp " + std::to_string(w) + " must belong to exactly one CTA");

    for (std::size_t w = 0; w < kt.warps.size(); ++w) {
      const auto& stream = kt.warps[w];
      const std::string wname = kname + " warp " + std::to_string(w);
      if (stream.empty() || stream.back().op != op_class::EXIT)
        throw trace_error(wname + ": stream not terminated by EXIT");
      for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& in = stream[i];
        const std::string where = wname + " inst " + std::to_string(i);
        if (in.kernel_id != k || in.warp_id != w) throw trace_error(where + ": kernel/warp fields mismatch");
        if (in.op == op_class::EXIT && i + 1 != stream.size())
          throw trace_error(where + ": EXIT before end of stream");
        check_instruction(in, t.warp_width, where);
      }
    }
  }
}

void write_trace(std::ostream& out, const trace_file& t) {
  nlohmann::json header = nlohmann::json::object();
  header["format"] = k_format;
  header["version"] = k_version;
  header["warp_width"] = t.warp_width;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& k : t.kernels) {
    nlohmann::json e = nlohmann::json::object();
    e["kernel_id"] = k.kernel_id;
    e["num_warps"] = k.num_warps();
    e["num_instructions"] = k.num_instructions();
    e["ctas"] = k.ctas;
    table.push_back(std::move(e));
  }
  header["kernels"] = std::move(table);
  out << header.dump() << '\n';
  for (const auto& k : t.kernels)
    for (const auto& w : k.warps)
      for (const auto& in : w) out << instruction_to_json(in).dump() << '\n';
}

std::string serialize_trace(const trace_file& t) {
  std::ostringstream os;
  write_trace(os, t);
  return os.str();
}

void write_trace_file(const std::filesystem::path& path, const trace_file& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw trace_error("cannot open '" + path.string() + "' for writing");
  write_trace(out, t);
  if (!out) throw trace_error("write failed for '" + path.string() + "'");
}

trace_file read_trace(std::istream& in, const gpu_config& cfg) {
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return "line " + std::to_string(lineno); };

  if (!std::getline(in, line)) throw trace_error("line 1: missing header");
  ++lineno;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw trace_error(where() + ": header is not valid JSON: " + e.what());
  }
  if (!header.is_object() || header.value("format", "") != k_format)
    throw trace_error(where() + ": header 'format' must be \"" + std::string(k_format) + "\"");
  if (header.value("version", 0) != k_version) throw trace_error(where() + ": unsupported trace version");

  trace_file t;
  t.warp_width = get_uint<unsigned>(header, "warp_width", where());
  if (t.warp_width != cfg.warp_width)
    throw trace_error(where() + ": trace warp_width does not match config warp_width");
  auto table = header.find("kernels");
  if (table == header.end() || !table->is_array()) throw trace_error(where() + ": header lacks 'kernels' array");

  std::vector<std::size_t> expected_insts;
  for (const auto& e : *table) {
    kernel_trace k;
    k.kernel_id = get_uint<unsigned>(e, "kernel_id", where());
    if (k.kernel_id != t.kernels.size()) throw trace_error(where() + ": kernel ids must be dense and in order");
    auto nw = get_uint<unsigned>(e, "num_warps", where());
    if (nw == 0) throw trace_error(where() + ": kernel " + std::to_string(k.kernel_id) + " has no warps");
    if (nw > cfg.max_warps_per_sm)
      throw trace_error(where() + ": kernel " + std::to_string(k.kernel_id) + " warp count " + std::to_string(nw) +
                        " exceeds max_warps_per_sm " + std::to_string(cfg.max_warps_per_sm));
    k.warps.resize(nw);
    expected_insts.push_back(get_uint<std::size_t>(e, "num_instructions", where()));
    if (auto c = e.find("ctas"); c != e.end()) {
      try {
        k.ctas = c->get<std::vector<std::vector<unsigned>>>();
      } catch (const nlohmann::json::exception&) {
        throw trace_error(where() + ": 'ctas' must be an array of warp-id arrays");
      }
    } else {
      std::vector<unsigned> all(nw);
      for (unsigned w = 0; w < nw; ++w) all[w] = w;
      k.ctas.push_back(std::move(all));
    }
    t.kernels.push_back(std::move(k));
  }

  std::size_t current_kernel = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw trace_error(where() + ": malformed JSON: " + e.what());
    }
    instruction inst = instruction_from_json(j, where());
    if (inst.kernel_id >= t.kernels.size()) throw trace_error(where() + ": kernel id not in header table");
    if (inst.kernel_id < current_kernel) throw trace_error(where() + ": kernels must appear sequentially");
    current_kernel = inst.kernel_id;
    auto& k = t.kernels[inst.kernel_id];
    if (inst.warp_id >= k.warps.size()) throw trace_error(where() + ": warp id outside kernel's warp range");
    auto& stream = k.warps[inst.warp_id];
    if (!stream.empty() && stream.back().op == op_class::EXIT)
      throw trace_error(where() + ": instruction after EXIT in warp " + std::to_string(inst.warp_id));
    check_instruction(inst, t.warp_width, where());
    stream.push_back(std::move(inst));
  }
  for (std::size_t k = 0; k < t.kernels.size(); ++k)
    if (t.kernels[k].num_instructions() != expected_insts[k])
      throw trace_error("kernel " + std::to_string(k) + ": header declares " + std::to_string(expected_insts[k]) +
                        " instructions but body has " + std::to_string(t.kernels[k].num_instructions()));
  validate_trace(t, cfg);
  return t;
}

trace_file parse_trace(const std::filesystem::path& path, const gpu_config& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw trace_error("cannot open trace file '" + path.string() + "'");
  return read_trace(in, cfg);
}

std::string trace_digest(const trace_file& t) {
  const std::string text = serialize_trace(t);
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace smsim
