#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "smsim/config.h"
#include "smsim/trace.h"

using namespace smsim;
using nlohmann::json;

TEST_CASE("empty config object gives the defaults") {
  const gpu_config cfg = config_from_json(json::object());
  CHECK(cfg == gpu_config{});
  CHECK(cfg.num_sub_cores == 4);
  CHECK(cfg.warp_width == 32);
  CHECK(cfg.l2_latency_cycles == 120);
  CHECK(cfg.sets_of(cfg.l0i_size_bytes) == 32);
  CHECK(cfg.sets_of(cfg.l1i_size_bytes) == 64);
}

TEST_CASE("config rejects bad values and unknown keys") {
  CHECK_THROWS_AS(config_from_json(json{{"warp_width", 0}}), config_error);
  CHECK_THROWS_AS(config_from_json(json{{"warp_width", 33}}), config_error);
  CHECK_THROWS_AS(config_from_json(json{{"not_a_key", 1}}), config_error);
  CHECK_THROWS_AS(config_from_json(json{{"rf_ports_per_bank", 0}}), config_error);
  CHECK_THROWS_AS(config_from_json(json{{"frontend_model", "fast"}}), config_error);
  CHECK_THROWS_AS(config_from_json(json::array()), config_error);
}

TEST_CASE("config round trip is idempotent") {
  gpu_config cfg;
  cfg.l2_latency_cycles = 300;
  cfg.set_model(hw_model::improved);
  cfg.exec_latency[static_cast<std::size_t>(op_class::SFU)] = 7;
  const json once = config_to_json(cfg);
  const gpu_config back = config_from_json(once);
  CHECK(back == cfg);
  CHECK(config_to_json(back) == once);
}

TEST_CASE("warps interleave across sub-cores") {
  CHECK(sub_core_of(5, 4) == 1);
  CHECK(sub_core_of(0, 4) == 0);
  CHECK(sub_core_of(7, 4) == 3);
  CHECK(sub_core_of(8, 4) == 0);
}

TEST_CASE("op class names round trip") {
  for (std::size_t i = 0; i < num_op_classes; ++i) {
    const auto c = static_cast<op_class>(i);
    CHECK(parse_op_class(to_string(c)) == c);
  }
  CHECK_THROWS(parse_op_class("ALU_DP"));
}

namespace {

const char* k_header = R"({"format":"smsim-trace","version":1,"warp_width":32,"kernels":[{"kernel_id":0,"ctas":[[0]],"num_warps":1,"num_instructions":2}]})";

trace_file read(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in, gpu_config{});
}

}  // namespace

TEST_CASE("minimal trace parses") {
  const std::string text = std::string(k_header) + "\n" +
                           R"({"kernel":0,"warp":0,"pc":0,"op":"ALU_SP","dst":1,"src":[2,3],"mask":4294967295})" "\n" +
                           R"({"kernel":0,"warp":0,"pc":16,"op":"EXIT","mask":4294967295})" "\n";
  const trace_file t = read(text);
  REQUIRE(t.kernels.size() == 1);
  REQUIRE(t.kernels[0].warps.size() == 1);
  const auto& w = t.kernels[0].warps[0];
  REQUIRE(w.size() == 2);
  CHECK(w[0].op == op_class::ALU_SP);
  CHECK(w[0].dest_reg == reg_id{1});
  CHECK(w[0].src_regs == std::vector<reg_id>{2, 3});
  CHECK(w[1].op == op_class::EXIT);
  CHECK(t.num_instructions() == 2);
}

TEST_CASE("serialization round trips and the digest is stable") {
  const trace_file t = fixtures::isolation(true, 8, 3);
  const std::string text = serialize_trace(t);
  const trace_file back = read(text);
  CHECK(serialize_trace(back) == text);
  CHECK(trace_digest(back) == trace_digest(t));
  CHECK(trace_digest(t).size() == 16);
  CHECK(trace_digest(fixtures::isolation(false, 8, 3)) != trace_digest(t));
}

TEST_CASE("two kernels of eight warps each") {
  trace_file t;
  for (unsigned k = 0; k < 2; ++k) {
    std::vector<std::vector<instruction>> warps;
    for (unsigned w = 0; w < 8; ++w) warps.push_back({fixtures::make(w, 0, op_class::EXIT)});
    t.kernels.push_back(fixtures::one_cta_kernel(k, std::move(warps)));
  }
  const trace_file back = read(serialize_trace(t));
  REQUIRE(back.kernels.size() == 2);
  CHECK(back.kernels[1].kernel_id == 1);
  CHECK(back.kernels[1].num_warps() == 8);
  CHECK(back.num_instructions() == 16);
}

TEST_CASE("structural errors are rejected") {
  const gpu_config cfg;
  SUBCASE("load without addresses") {
    auto ld = fixtures::make(0, 0, op_class::LD_GLOBAL);
    ld.dest_reg = 1;
    CHECK_THROWS_AS(validate_trace(fixtures::single_kernel({{ld, fixtures::make(0, 16, op_class::EXIT)}}), cfg),
                    trace_error);
  }
  SUBCASE("stream without EXIT") {
    CHECK_THROWS_AS(validate_trace(fixtures::single_kernel({{fixtures::make(0, 0, op_class::ALU_SP)}}), cfg),
                    trace_error);
  }
  SUBCASE("instruction after EXIT") {
    CHECK_THROWS_AS(validate_trace(fixtures::single_kernel({{fixtures::make(0, 0, op_class::EXIT),
                                                             fixtures::make(0, 16, op_class::ALU_SP)}}),
                                   cfg),
                    trace_error);
  }
  SUBCASE("too many warps") {
    std::vector<std::vector<instruction>> warps;
    for (unsigned w = 0; w < 33; ++w) warps.push_back({fixtures::make(w, 0, op_class::EXIT)});
    CHECK_THROWS_AS(validate_trace(fixtures::single_kernel(std::move(warps)), cfg), trace_error);
  }
  SUBCASE("malformed lines") {
    CHECK_THROWS(read("not json\n"));
    CHECK_THROWS(read(std::string(k_header) + "\n" + R"({"kernel":0,"warp":0,"pc":0,"op":"NOP"})" "\n"));
  }
}
