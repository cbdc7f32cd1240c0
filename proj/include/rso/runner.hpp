#pragma once

#include <string>
#include <vector>

#include "rso/config.hpp"

namespace rso {

struct RunnerResult {
  std::string summary_json;
  std::vector<std::string> files_written;
  bool any_aborted = false;
};

/// Executes the experiment described by the config (one run per seed),
/// writing one trace CSV per run plus a summary JSON under out_dir.
/// Outputs are byte-reproducible from (config, seed).
RunnerResult run_train(const Config& cfg, const std::string& out_dir);

/// Cross-product sweep over the list-valued keys optimizer.rank,
/// optimizer.lr and run.seeds; cells run concurrently up to `jobs` and are
/// aggregated in a fixed order.
RunnerResult run_sweep(const Config& cfg, const std::string& out_dir, int jobs);

/// Named verification check ("projections", "gradcheck", "sandwich",
/// "bound") with JSON options. Returns the verdict JSON and sets *passed.
std::string run_verify(const std::string& check, const std::string& options_json, bool* passed);

std::string memory_report_json(const std::string& arch, const std::string& alg, int rank,
                               int element_bytes, int seq_len, int batch);

}  // namespace rso
