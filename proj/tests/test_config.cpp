#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rso/config.hpp"
#include "rso/error.hpp"
#include "rso/runner.hpp"

using namespace rso;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rso_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

const char* kQuadraticConfig = R"(
# small deterministic run
[problem]
kind = "quadratic"
m = 16
n = 4
seed = 3

[optimizer]
kind = "rso"
rank = 4
projection = "haar"
inner = "exact"
eta = "auto"
outer_iters = 6

[run]
seeds = [7]
out_prefix = "quad"
)";

}  // namespace

TEST_CASE("config parser handles sections, arrays, comments, and types") {
  Config cfg = Config::parse_string(R"(
top = 1
[problem]
kind = "tiny_lm"   # trailing comment
sizes = [8, 16, 32]
names = ["a", "b"]
flag = true
lr = 2.5e-3
)");
  CHECK(cfg.get_number("top", 0) == 1);
  CHECK(cfg.get_string("problem.kind", "") == "tiny_lm");
  CHECK(cfg.get_number_list("problem.sizes") == std::vector<double>{8, 16, 32});
  CHECK(cfg.get_string_list("problem.names") == std::vector<std::string>{"a", "b"});
  CHECK(cfg.get_bool("problem.flag", false));
  CHECK(cfg.get_number("problem.lr", 0) == doctest::Approx(2.5e-3));
  CHECK(cfg.get_number("problem.missing", 42.0) == 42.0);
  CHECK_FALSE(cfg.has("problem.missing"));
}

TEST_CASE("config parser rejects malformed input") {
  CHECK_THROWS_AS(Config::parse_string("just a line"), Error);
  CHECK_THROWS_AS(Config::parse_string("[unclosed\nk = 1"), Error);
  CHECK_THROWS_AS(Config::parse_string("k = \"open"), Error);
  CHECK_THROWS_AS(Config::parse_string("k = [1, 2"), Error);
  CHECK_THROWS_AS(Config::parse_string("k = 1\nk = 2"), Error);
  CHECK_THROWS_AS(Config::parse_string("k = zzz"), Error);
  Config c = Config::parse_string("k = 1.5");
  CHECK_THROWS_AS(c.get_int("k", 0), Error);
  CHECK_THROWS_AS(c.get_string("k", ""), Error);
}

TEST_CASE("run_train writes a trace and summary, byte-identical across reruns") {
  Config cfg = Config::parse_string(kQuadraticConfig);
  const std::string d1 = fresh_dir("train1");
  const std::string d2 = fresh_dir("train2");
  RunnerResult r1 = run_train(cfg, d1);
  RunnerResult r2 = run_train(cfg, d2);
  CHECK_FALSE(r1.any_aborted);
  REQUIRE(r1.files_written.size() == 2);
  CHECK(read_file(d1 + "/quad_seed7.csv") == read_file(d2 + "/quad_seed7.csv"));
  CHECK(read_file(d1 + "/quad_summary.json") == read_file(d2 + "/quad_summary.json"));
  CHECK(r1.summary_json == r2.summary_json);
  CHECK(r1.summary_json.find("\"final_f\"") != std::string::npos);
}

TEST_CASE("run_train output matches the frozen golden files") {
  Config cfg = Config::parse_string(kQuadraticConfig);
  const std::string dir = fresh_dir("golden");
  run_train(cfg, dir);
  const std::string golden_dir = std::string(RSO_TEST_DATA_DIR);
  CHECK(read_file(dir + "/quad_seed7.csv") == read_file(golden_dir + "/quad_seed7.csv"));
  CHECK(read_file(dir + "/quad_summary.json") ==
        read_file(golden_dir + "/quad_summary.json"));
}

TEST_CASE("run_sweep crosses lists and aggregates deterministically across job counts") {
  const char* sweep_cfg = R"(
[problem]
kind = "quadratic"
m = 12
n = 3
seed = 5

[optimizer]
kind = "rso"
rank = [2, 4]
projection = "coordinate"
inner = "sgd"
lr = [0.05, 0.1]
inner_steps = 3
outer_iters = 4
eta = "auto"

[run]
seeds = [1, 2]
out_prefix = "sw"
)";
  Config cfg = Config::parse_string(sweep_cfg);
  const std::string d1 = fresh_dir("sweep1");
  const std::string d2 = fresh_dir("sweep4");
  RunnerResult r1 = run_sweep(cfg, d1, 1);
  RunnerResult r2 = run_sweep(cfg, d2, 4);
  // 2 ranks x 2 lrs x 2 seeds cells + aggregate + summary
  CHECK(r1.files_written.size() == 8 + 2);
  CHECK(read_file(d1 + "/sw_aggregate.csv") == read_file(d2 + "/sw_aggregate.csv"));
  CHECK(r1.summary_json == r2.summary_json);
  CHECK(read_file(d1 + "/sw_r2_lr0.05_seed1.csv") == read_file(d2 + "/sw_r2_lr0.05_seed1.csv"));
}

TEST_CASE("run_verify dispatches checks and reports pass/fail") {
  bool passed = false;
  const std::string verdict = run_verify(
      "projections", R"({"m": 32, "r": 8, "dist": "haar", "trials": 2000, "seed": 1})",
      &passed);
  CHECK(passed);
  CHECK(verdict.find("\"pass\": true") != std::string::npos);
  CHECK_THROWS_AS(run_verify("nonsense", "{}", &passed), Error);
}

TEST_CASE("memory_report_json round-trips through the runner") {
  const std::string j = memory_report_json("350M", "rso", 256, 2, 256, 16);
  CHECK(j.find("\"arch\": \"350M\"") != std::string::npos);
  CHECK(j.find("optimizer_state_bytes") != std::string::npos);
  CHECK_THROWS_AS(memory_report_json("bogus", "rso", 8, 2, 256, 16), Error);
}

TEST_CASE("missing config file raises an io error") {
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/rso.toml"), Error);
}
