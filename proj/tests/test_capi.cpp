#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rso/rso_c.h"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rso_capi" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

const char* kConfigText = R"(
[problem]
kind = "quadratic"
m = 12
n = 4
seed = 2

[optimizer]
kind = "rso"
rank = 4
inner = "exact"
eta = "auto"
outer_iters = 5

[run]
seeds = [9]
out_prefix = "capi"
)";

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::strlen(rso_version()) > 0);
  CHECK(std::string(rso_last_error()).empty());
}

TEST_CASE("config parse failures surface a message and RSO_ERR_CONFIG") {
  rso_config* cfg = nullptr;
  CHECK(rso_config_parse("definitely not toml", &cfg) == RSO_ERR_CONFIG);
  CHECK(std::strlen(rso_last_error()) > 0);
  CHECK(cfg == nullptr);
  CHECK(rso_config_load("/no/such/file.toml", &cfg) == RSO_ERR_IO);
}

TEST_CASE("train run through the C API is deterministic") {
  rso_config* cfg = nullptr;
  REQUIRE(rso_config_parse(kConfigText, &cfg) == RSO_OK);

  const std::string d1 = fresh_dir("t1"), d2 = fresh_dir("t2");
  rso_result* r1 = nullptr;
  rso_result* r2 = nullptr;
  CHECK(rso_train_run(cfg, d1.c_str(), &r1) == RSO_OK);
  CHECK(rso_train_run(cfg, d2.c_str(), &r2) == RSO_OK);
  const std::string s1 = rso_result_summary_json(r1);
  CHECK(s1 == rso_result_summary_json(r2));
  CHECK(s1.find("\"final_f\"") != std::string::npos);
  CHECK(read_file(d1 + "/capi_seed9.csv") == read_file(d2 + "/capi_seed9.csv"));
  rso_result_free(r1);
  rso_result_free(r2);
  rso_config_free(cfg);
}

TEST_CASE("sweep through the C API") {
  const char* sweep_text = R"(
[problem]
kind = "quadratic"
m = 8
n = 2
seed = 1

[optimizer]
kind = "rso"
rank = [2, 4]
inner = "exact"
eta = "auto"
outer_iters = 3

[run]
seeds = [1]
out_prefix = "sw"
)";
  rso_config* cfg = nullptr;
  REQUIRE(rso_config_parse(sweep_text, &cfg) == RSO_OK);
  const std::string dir = fresh_dir("sweep");
  rso_result* res = nullptr;
  CHECK(rso_sweep_run(cfg, dir.c_str(), 2, &res) == RSO_OK);
  CHECK(std::filesystem::exists(dir + "/sw_aggregate.csv"));
  rso_result_free(res);
  rso_config_free(cfg);
}

TEST_CASE("verify through the C API distinguishes pass, fail, and usage errors") {
  char* verdict = nullptr;
  CHECK(rso_verify("projections", R"({"m":16,"r":4,"trials":2000,"seed":1})", &verdict) ==
        RSO_OK);
  REQUIRE(verdict != nullptr);
  CHECK(std::string(verdict).find("\"pass\": true") != std::string::npos);
  rso_string_free(verdict);
  verdict = nullptr;
  CHECK(rso_verify("not_a_check", "{}", &verdict) == RSO_ERR_CONFIG);
  CHECK(verdict == nullptr);
}

TEST_CASE("memory report through the C API") {
  char* report = nullptr;
  CHECK(rso_memory_report("350M", "rso", 256, 2, 256, 16, &report) == RSO_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("\"optimizer_state_bytes\"") != std::string::npos);
  rso_string_free(report);
  report = nullptr;
  CHECK(rso_memory_report("9T", "rso", 8, 2, 256, 16, &report) == RSO_ERR_CONFIG);
  CHECK(std::strlen(rso_last_error()) > 0);
}

TEST_CASE("null arguments are rejected, not crashed on") {
  CHECK(rso_config_parse(nullptr, nullptr) == RSO_ERR_CONFIG);
  CHECK(rso_train_run(nullptr, "x", nullptr) == RSO_ERR_CONFIG);
  CHECK(rso_verify(nullptr, "{}", nullptr) == RSO_ERR_CONFIG);
  rso_string_free(nullptr);
  rso_result_free(nullptr);
  rso_config_free(nullptr);
}
