#include "rso/rso_c.h"

#include <cstring>
#include <string>

#include "rso/config.hpp"
#include "rso/error.hpp"
#include "rso/runner.hpp"

namespace {

thread_local std::string g_last_error;

rso_status status_from(const rso::Error& e) {
  switch (e.code) {
    case rso::ErrorCode::numeric: return RSO_ERR_NUMERIC;
    case rso::ErrorCode::io: return RSO_ERR_IO;
    case rso::ErrorCode::shape:
    case rso::ErrorCode::degenerate:
    case rso::ErrorCode::config: return RSO_ERR_CONFIG;
  }
  return RSO_ERR_CONFIG;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class Fn>
rso_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const rso::Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RSO_ERR_CONFIG;
  }
}

}  // namespace

struct rso_config {
  rso::Config cfg;
};

struct rso_result {
  std::string summary_json;
  bool aborted = false;
};

extern "C" {

const char* rso_version(void) { return "0.1.0"; }

const char* rso_last_error(void) { return g_last_error.c_str(); }

rso_status rso_config_load(const char* path, rso_config** out) {
  if (!path || !out) {
    g_last_error = "rso_config_load: null argument";
    return RSO_ERR_CONFIG;
  }
  return guarded([&] {
    *out = new rso_config{rso::Config::parse_file(path)};
    return RSO_OK;
  });
}

rso_status rso_config_parse(const char* text, rso_config** out) {
  if (!text || !out) {
    g_last_error = "rso_config_parse: null argument";
    return RSO_ERR_CONFIG;
  }
  return guarded([&] {
    *out = new rso_config{rso::Config::parse_string(text)};
    return RSO_OK;
  });
}

void rso_config_free(rso_config* cfg) { delete cfg; }

rso_status rso_train_run(const rso_config* cfg, const char* out_dir, rso_result** out) {
  if (!cfg || !out_dir || !out) {
    g_last_error = "rso_train_run: null argument";
    return RSO_ERR_CONFIG;
  }
  return guarded([&] {
    rso::RunnerResult res = rso::run_train(cfg->cfg, out_dir);
    *out = new rso_result{res.summary_json, res.any_aborted};
    if (res.any_aborted) {
      g_last_error = "training aborted on non-finite values; partial trace written";
      return RSO_ERR_NUMERIC;
    }
    return RSO_OK;
  });
}

rso_status rso_sweep_run(const rso_config* cfg, const char* out_dir, int jobs, rso_result** out) {
  if (!cfg || !out_dir || !out) {
    g_last_error = "rso_sweep_run: null argument";
    return RSO_ERR_CONFIG;
  }
  return guarded([&] {
    rso::RunnerResult res = rso::run_sweep(cfg->cfg, out_dir, jobs);
    *out = new rso_result{res.summary_json, res.any_aborted};
    if (res.any_aborted) {
      g_last_error = "sweep aborted on non-finite values; partial traces written";
      return RSO_ERR_NUMERIC;
    }
    return RSO_OK;
  });
}

const char* rso_result_summary_json(const rso_result* res) {
  return res ? res->summary_json.c_str() : "";
}

void rso_result_free(rso_result* res) { delete res; }

rso_status rso_verify(const char* check, const char* options_json, char** verdict_json) {
  if (!check || !verdict_json) {
    g_last_error = "rso_verify: null argument";
    return RSO_ERR_CONFIG;
  }
  return guarded([&] {
    bool passed = false;
    const std::string verdict =
        rso::run_verify(check, options_json ? options_json : "", &passed);
    *verdict_json = copy_string(verdict);
    if (!passed) {
      g_last_error = std::string("verification check '") + check + "' failed";
      return RSO_ERR_CHECK_FAILED;
    }
    return RSO_OK;
  });
}

rso_status rso_memory_report(const char* arch, const char* alg, int rank, int element_bytes,
                             int seq_len, int batch, char** report_json) {
  if (!arch || !alg || !report_json) {
    g_last_error = "rso_memory_report: null argument";
    return RSO_ERR_CONFIG;
  }
  return guarded([&] {
    *report_json =
        copy_string(rso::memory_report_json(arch, alg, rank, element_bytes, seq_len, batch));
    return RSO_OK;
  });
}

void rso_string_free(char* s) { delete[] s; }

}  // extern "C"
