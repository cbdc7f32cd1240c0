#include "rso/runner.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include "rso/cost_model.hpp"
#include "rso/engine.hpp"
#include "rso/error.hpp"
#include "rso/gradcheck.hpp"
#include "rso/transformer.hpp"

namespace rso {

namespace {

using nlohmann::json;

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw_io("write failed for '" + path + "'");
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::unique_ptr<Objective> build_objective(const Config& cfg) {
  const std::string kind = cfg.get_string("problem.kind", "quadratic");
  const std::uint64_t pseed = static_cast<std::uint64_t>(cfg.get_int("problem.seed", 0));
  if (kind == "quadratic") {
    const std::size_t m = static_cast<std::size_t>(cfg.get_int("problem.m", 32));
    const std::size_t n = static_cast<std::size_t>(cfg.get_int("problem.n", 8));
    const std::size_t layers = static_cast<std::size_t>(cfg.get_int("problem.layers", 1));
    RngStream rng(pseed, 0x71756164);
    ParamSet target;
    for (std::size_t l = 0; l < layers; ++l) target.layers.push_back(gauss(rng, m, n, 1.0));
    return std::make_unique<QuadraticObjective>(std::move(target));
  }
  if (kind == "logistic") {
    const std::size_t samples = static_cast<std::size_t>(cfg.get_int("problem.samples", 512));
    const std::size_t dim = static_cast<std::size_t>(cfg.get_int("problem.dim", 16));
    const std::size_t batch = static_cast<std::size_t>(cfg.get_int("problem.batch", 0));
    RngStream rng(pseed, 0x6c6f6769);
    return std::make_unique<LogisticObjective>(
        LogisticObjective::synthetic(rng, samples, dim, batch));
  }
  if (kind == "tiny_lm") {
    TinyLmConfig lm;
    lm.vocab = static_cast<std::size_t>(cfg.get_int("problem.vocab", 64));
    lm.n_embed = static_cast<std::size_t>(cfg.get_int("problem.embed_dim", 64));
    lm.n_blocks = static_cast<std::size_t>(cfg.get_int("problem.blocks", 2));
    lm.seq_len = static_cast<std::size_t>(cfg.get_int("problem.seq_len", 64));
    lm.batch = static_cast<std::size_t>(cfg.get_int("problem.batch", 8));
    lm.corpus_len = static_cast<std::size_t>(cfg.get_int("problem.corpus_len", 1 << 16));
    lm.eval_windows = static_cast<std::size_t>(cfg.get_int("problem.eval_windows", 8));
    const std::string corpus_file = cfg.get_string("problem.corpus_file", "");
    if (!corpus_file.empty())
      return std::make_unique<TinyLmObjective>(lm, corpus_from_file(corpus_file, lm.vocab));
    RngStream rng(pseed, 0x636f7270);
    return std::make_unique<TinyLmObjective>(TinyLmObjective::synthetic(lm, rng));
  }
  throw_config("unknown problem kind '" + kind + "'");
}

struct CellParams {
  std::uint64_t seed = 1;
  std::size_t rank = 0;   // 0 => config default
  double lr = 0.0;        // 0 => config default
};

TrainResult run_one(Objective& obj, const Config& cfg, const CellParams& cell) {
  const std::string kind = cfg.get_string("optimizer.kind", "rso");
  RngStream rng(cell.seed);
  const double lr = cell.lr != 0.0 ? cell.lr : cfg.get_number("optimizer.lr", 1e-3);
  const int element_bytes = static_cast<int>(cfg.get_int("optimizer.comm_element_bytes", 4));

  if (kind == "adam") {
    AdamTrainConfig a;
    a.hyper = {lr, cfg.get_number("optimizer.beta1", 0.9), cfg.get_number("optimizer.beta2", 0.999),
               cfg.get_number("optimizer.eps", 1e-8)};
    a.steps = static_cast<int>(cfg.get_int("optimizer.steps", 100));
    a.trace_stride = static_cast<int>(cfg.get_int("optimizer.trace_stride", 1));
    a.element_bytes = element_bytes;
    return adam_train(obj, a, rng);
  }
  if (kind == "galore") {
    GaloreTrainConfig g;
    g.hyper = {lr, cfg.get_number("optimizer.beta1", 0.9), cfg.get_number("optimizer.beta2", 0.999),
               cfg.get_number("optimizer.eps", 1e-8)};
    g.scale = cfg.get_number("optimizer.scale", 1.0);
    g.rank = cell.rank != 0 ? cell.rank
                            : static_cast<std::size_t>(cfg.get_int("optimizer.rank", 8));
    g.update_interval = static_cast<int>(cfg.get_int("optimizer.interval", 200));
    g.steps = static_cast<int>(cfg.get_int("optimizer.steps", 100));
    g.trace_stride = static_cast<int>(cfg.get_int("optimizer.trace_stride", 1));
    g.element_bytes = element_bytes;
    return galore_train(obj, g, rng);
  }
  if (kind == "rso") {
    RsoConfig r;
    r.rank = cell.rank != 0 ? cell.rank
                            : static_cast<std::size_t>(cfg.get_int("optimizer.rank", 8));
    r.projection = projection_kind_from_string(cfg.get_string("optimizer.projection", "haar"));
    r.inner.kind = solver_kind_from_string(cfg.get_string("optimizer.inner", "adam"));
    r.inner.lr = lr;
    r.inner.beta1 = cfg.get_number("optimizer.beta1", 0.9);
    r.inner.beta2 = cfg.get_number("optimizer.beta2", 0.999);
    r.inner.eps_num = cfg.get_number("optimizer.eps", 1e-8);
    r.inner.momentum = cfg.get_number("optimizer.momentum", 0.9);
    r.inner.zo_mu = cfg.get_number("optimizer.zo_mu", 1e-4);
    r.scale = cfg.get_number("optimizer.scale", 1.0);
    r.inner_steps = static_cast<int>(cfg.get_int("optimizer.inner_steps", 20));
    r.outer_iters = static_cast<int>(cfg.get_int("optimizer.outer_iters", 100));
    r.element_bytes = element_bytes;
    if (cfg.has("optimizer.certified_eps"))
      r.certified_eps = cfg.get_number("optimizer.certified_eps", 0.0);
    // eta: "auto" selects 1/(2 L_hat); "none" (default) drops the proximal term
    if (cfg.has("optimizer.eta")) {
      const auto& entry = cfg.entries().at("optimizer.eta");
      if (entry.type == Config::Value::Type::string) {
        const std::string s = entry.str;
        if (s == "auto")
          r.eta_auto = true;
        else if (s != "none")
          throw_config("optimizer.eta must be a number, \"auto\", or \"none\"");
      } else {
        r.eta = cfg.get_number("optimizer.eta", 0.0);
      }
    }
    return rso_train(obj, r, rng);
  }
  throw_config("unknown optimizer kind '" + kind + "'");
}

json summarize(const TrainResult& res, const CellParams& cell) {
  const RunTrace& tr = res.trace;
  json j;
  j["seed"] = cell.seed;
  if (cell.rank != 0) j["rank"] = cell.rank;
  if (cell.lr != 0.0) j["lr"] = cell.lr;
  j["init_f"] = tr.f.front();
  j["final_f"] = tr.final_f();
  j["mean_grad_sq_norm"] = tr.mean_grad_sq();
  j["total_comm_bytes"] = tr.total_comm_bytes();
  j["opt_state_entries"] = tr.opt_state_entries.empty() ? 0 : tr.opt_state_entries.back();
  j["rows"] = tr.f.size();
  j["not_certified"] = tr.not_certified_count;
  j["aborted"] = tr.aborted;
  if (tr.aborted) j["abort_reason"] = tr.abort_reason;
  return j;
}

std::string cell_file_stem(const std::string& prefix, const CellParams& cell, bool sweep) {
  std::string stem = prefix;
  if (sweep) {
    if (cell.rank != 0) stem += "_r" + std::to_string(cell.rank);
    if (cell.lr != 0.0) stem += "_lr" + fmt_g(cell.lr);
  }
  stem += "_seed" + std::to_string(cell.seed);
  return stem;
}

}  // namespace

RunnerResult run_train(const Config& cfg, const std::string& out_dir) {
  std::vector<double> seeds = cfg.get_number_list("run.seeds");
  if (seeds.empty()) seeds.push_back(1);
  const std::string prefix = cfg.get_string("run.out_prefix", "run");

  auto obj = build_objective(cfg);
  RunnerResult out;
  json summary;
  summary["problem"] = cfg.get_string("problem.kind", "quadratic");
  summary["optimizer"] = cfg.get_string("optimizer.kind", "rso");
  summary["runs"] = json::array();

  for (double seed_raw : seeds) {
    CellParams cell;
    cell.seed = static_cast<std::uint64_t>(seed_raw);
    TrainResult res = run_one(*obj, cfg, cell);
    const std::string csv_path =
        out_dir + "/" + cell_file_stem(prefix, cell, false) + ".csv";
    write_file(csv_path, res.trace.to_csv());
    out.files_written.push_back(csv_path);
    summary["runs"].push_back(summarize(res, cell));
    out.any_aborted = out.any_aborted || res.trace.aborted;
  }

  out.summary_json = summary.dump(2) + "\n";
  const std::string summary_path = out_dir + "/" + prefix + "_summary.json";
  write_file(summary_path, out.summary_json);
  out.files_written.push_back(summary_path);
  return out;
}

RunnerResult run_sweep(const Config& cfg, const std::string& out_dir, int jobs) {
  if (jobs < 1) jobs = 1;
  std::vector<double> seeds = cfg.get_number_list("run.seeds");
  if (seeds.empty()) seeds.push_back(1);
  std::vector<double> ranks = cfg.get_number_list("optimizer.rank");
  if (ranks.empty()) ranks.push_back(0);
  std::vector<double> lrs = cfg.get_number_list("optimizer.lr");
  if (lrs.empty()) lrs.push_back(0);
  const std::string prefix = cfg.get_string("run.out_prefix", "sweep");

  std::vector<CellParams> cells;
  for (double r : ranks)
    for (double lr : lrs)
      for (double s : seeds)
        cells.push_back({static_cast<std::uint64_t>(s), static_cast<std::size_t>(r), lr});

  std::vector<TrainResult> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    // each cell builds its own problem instance; cheap at this scale
    for (;;) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= cells.size()) return;
        idx = next++;
      }
      try {
        auto obj = build_objective(cfg);
        results[idx] = run_one(*obj, cfg, cells[idx]);
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const std::string& err : errors)
    if (!err.empty()) throw_config("sweep cell failed: " + err);

  RunnerResult out;
  json summary;
  summary["problem"] = cfg.get_string("problem.kind", "quadratic");
  summary["optimizer"] = cfg.get_string("optimizer.kind", "rso");
  summary["runs"] = json::array();

  std::string agg = "rank,lr,seed,final_f,mean_grad_sq_norm,total_comm_bytes,opt_state_entries\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const TrainResult& res = results[i];
    const std::string csv_path =
        out_dir + "/" + cell_file_stem(prefix, cells[i], true) + ".csv";
    write_file(csv_path, res.trace.to_csv());
    out.files_written.push_back(csv_path);
    summary["runs"].push_back(summarize(res, cells[i]));
    out.any_aborted = out.any_aborted || res.trace.aborted;
    char row[256];
    std::snprintf(row, sizeof row, "%zu,%g,%llu,%.17g,%.17g,%llu,%zu\n", cells[i].rank,
                  cells[i].lr, static_cast<unsigned long long>(cells[i].seed),
                  res.trace.final_f(), res.trace.mean_grad_sq(),
                  static_cast<unsigned long long>(res.trace.total_comm_bytes()),
                  res.trace.opt_state_entries.empty() ? std::size_t{0}
                                                      : res.trace.opt_state_entries.back());
    agg += row;
  }
  const std::string agg_path = out_dir + "/" + prefix + "_aggregate.csv";
  write_file(agg_path, agg);
  out.files_written.push_back(agg_path);

  out.summary_json = summary.dump(2) + "\n";
  const std::string summary_path = out_dir + "/" + prefix + "_summary.json";
  write_file(summary_path, out.summary_json);
  out.files_written.push_back(summary_path);
  return out;
}

// ---------------------------------------------------------------------------
// verify

namespace {

json verify_projections(const json& opt) {
  const std::size_t m = opt.value("m", 32);
  const std::size_t r = opt.value("r", 8);
  const std::size_t trials = opt.value("trials", 20000);
  const std::uint64_t seed = opt.value("seed", 1);
  const ProjectionKind kind = projection_kind_from_string(opt.value("dist", "haar"));
  const bool exact_isometry = kind != ProjectionKind::gaussian_approx;

  RngStream rng(seed, 0x76657269);
  Mat p = sample_projection(rng, m, r, kind);
  const double iso = verify_isometry(p);
  const double expectation = verify_expectation_identity(rng, m, r, kind, trials);

  json j;
  j["check"] = "projections";
  j["m"] = m;
  j["r"] = r;
  j["dist"] = to_string(kind);
  j["trials"] = trials;
  j["isometry_max_dev"] = iso;
  j["expectation_frob_dev"] = expectation;
  j["isometry_threshold"] = exact_isometry ? 1e-10 : HUGE_VAL;
  j["expectation_threshold"] = 0.05;
  j["pass"] = (expectation < 0.05) && (!exact_isometry || iso < 1e-10);
  return j;
}

json verify_gradcheck(const json& opt) {
  const std::string model = opt.value("model", "transformer");
  const std::size_t s = opt.value("s", 8);
  const std::size_t n = opt.value("n", 16);
  const std::size_t r = opt.value("r", 4);
  const std::uint64_t seed = opt.value("seed", 0);

  json j;
  j["check"] = "gradcheck";
  j["model"] = model;
  j["s"] = s;
  j["n"] = n;
  j["r"] = r;
  j["tolerance"] = 1e-5;
  if (model == "transformer") {
    GradCheckReport rep = block_gradcheck_rso(s, n, r, seed);
    const double chain = block_chain_rule_dev(s, n, r, seed);
    for (const auto& e : rep.entries) j["per_matrix"][e.name] = e.rel_err;
    j["max_rel_err"] = rep.max_rel_err;
    j["chain_rule_dev"] = chain;
    j["pass"] = rep.max_rel_err < 1e-5 && chain < 1e-10;
  } else if (model == "tiny_lm") {
    GradCheckReport rep = tiny_lm_gradcheck(s, n, r, seed);
    j["max_rel_err"] = rep.max_rel_err;
    j["pass"] = rep.max_rel_err < 1e-5;
  } else {
    throw_config("gradcheck: unknown model '" + model + "'");
  }
  return j;
}

json verify_sandwich(const json& opt) {
  const std::size_t m = opt.value("m", 32);
  const std::size_t n = opt.value("n", 8);
  const std::size_t r = opt.value("r", 8);
  const int pairs = opt.value("pairs", 1000);
  const std::uint64_t seed = opt.value("seed", 1);
  const ProjectionKind kind = projection_kind_from_string(opt.value("dist", "haar"));

  RngStream root(seed, 0x73616e64);
  ParamSet target;
  target.layers.push_back(gauss(root, m, n, 1.0));
  QuadraticObjective f(std::move(target));
  ParamSet w = f.init_params(root);
  const auto info = f.layers();
  const auto ranks = resolve_ranks(info, r);
  const SmoothnessEstimate sm = estimate_smoothness(f, info, ranks);
  const double eta = opt.value("eta", 1.0 / (2.0 * sm.L_hat));
  ProjectionSet p = sample_projection_set(info, ranks, kind, root, 0);
  RngStream pair_rng = root.derive(0x70);
  SandwichReport rep = verify_gk_sandwich(f, w, p, eta, sm.L_hat, pairs, pair_rng);

  json j;
  j["check"] = "sandwich";
  j["m"] = m;
  j["n"] = n;
  j["r"] = r;
  j["eta"] = eta;
  j["mu"] = rep.mu;
  j["l_g"] = rep.l_g;
  j["pairs"] = rep.pairs;
  j["left_violations"] = rep.left_violations;
  j["right_violations"] = rep.right_violations;
  j["pass"] = rep.pass;
  return j;
}

json verify_bound(const json& opt) {
  TheoremBoundConfig cfg;
  cfg.m = opt.value("m", 32);
  cfg.n = opt.value("n", 8);
  cfg.r = opt.value("r", 8);
  cfg.k_max = opt.value("K", 64);
  cfg.eps = opt.value("eps", 0.0);
  cfg.seeds = opt.value("seeds", 32);
  cfg.seed = opt.value("seed", 1);
  cfg.kind = projection_kind_from_string(opt.value("dist", "haar"));
  TheoremBoundReport rep = verify_theorem_bound(cfg);

  json j;
  j["check"] = "bound";
  j["m"] = cfg.m;
  j["n"] = cfg.n;
  j["r"] = cfg.r;
  j["eps"] = cfg.eps;
  j["L_hat"] = rep.L_hat;
  j["delta0"] = rep.delta0;
  j["seeds_used"] = rep.seeds_used;
  j["seeds_excluded"] = rep.seeds_excluded;
  j["points"] = json::array();
  for (const auto& pt : rep.points)
    j["points"].push_back({{"K", pt.K}, {"lhs", pt.lhs}, {"rhs", pt.rhs}, {"pass", pt.pass}});
  j["pass"] = rep.pass;
  return j;
}

}  // namespace

std::string run_verify(const std::string& check, const std::string& options_json, bool* passed) {
  json opt = options_json.empty() ? json::object() : json::parse(options_json, nullptr, true);
  json verdict;
  if (check == "projections")
    verdict = verify_projections(opt);
  else if (check == "gradcheck")
    verdict = verify_gradcheck(opt);
  else if (check == "sandwich")
    verdict = verify_sandwich(opt);
  else if (check == "bound")
    verdict = verify_bound(opt);
  else
    throw_config("unknown verify check '" + check + "'");
  if (passed) *passed = verdict.value("pass", false);
  return verdict.dump(2) + "\n";
}

std::string memory_report_json(const std::string& arch, const std::string& alg, int rank,
                               int element_bytes, int seq_len, int batch) {
  CostReport rep = model_memory_report(arch, alg_from_string(alg),
                                       static_cast<std::size_t>(rank), element_bytes,
                                       static_cast<std::size_t>(seq_len),
                                       static_cast<std::size_t>(batch));
  return rep.to_json() + "\n";
}

}  // namespace rso
