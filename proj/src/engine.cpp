#include "rso/engine.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>

#include "rso/error.hpp"

namespace rso {

namespace {

constexpr std::uint64_t kTagInit = 0x696e6974;   // param init
constexpr std::uint64_t kTagProj = 0x70726f6a;   // projection sampling
constexpr std::uint64_t kTagSolve = 0x736f6c76;  // inner solve batches
constexpr std::uint64_t kTagBatch = 0x62617463;  // baseline batches

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double family_grad_norm_sq(Objective& f, const ParamSet& w) {
  ParamSet g;
  f.grad_full(w, nullptr, g);
  return g.norm_sq();
}

}  // namespace

std::string RunTrace::to_csv() const {
  std::string out = "k,f,grad_sq_norm,eps_cert,inner_steps,comm_bytes,opt_state_entries\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    out += std::to_string(k[i]);
    out += ',';
    out += fmt_double(f[i]);
    out += ',';
    out += fmt_double(grad_sq[i]);
    out += ',';
    if (i < eps_cert.size()) {
      if (std::isfinite(eps_cert[i])) out += fmt_double(eps_cert[i]);
      out += ',' + std::to_string(inner_steps[i]);
      out += ',' + std::to_string(comm_bytes[i]);
      out += ',' + std::to_string(opt_state_entries[i]);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

double RunTrace::mean_grad_sq() const {
  if (grad_sq.empty()) return 0.0;
  double s = 0.0;
  for (double v : grad_sq) s += v;
  return s / static_cast<double>(grad_sq.size());
}

std::uint64_t RunTrace::total_comm_bytes() const {
  std::uint64_t s = 0;
  for (std::uint64_t v : comm_bytes) s += v;
  return s;
}

// ---------------------------------------------------------------------------

SubproblemObjective::SubproblemObjective(Objective& f, const ParamSet& w, const ProjectionSet& p,
                                         double inv_eta)
    : f_(f), w_(w), p_(p), inv_eta_(inv_eta), info_(f.layers()) {
  if (inv_eta_ < 0.0) throw_config("subproblem: inv_eta must be >= 0");
  for (const LayerInfo& li : info_)
    if (!li.subspace_managed) has_aux_ = true;
}

SubspaceParams SubproblemObjective::zero_b() const { return zero_subspace(p_, info_); }

double SubproblemObjective::value(const SubspaceParams& b, RngStream* rng) {
  return f_.eval_subspace(w_, p_, b, rng) + reg(b);
}

double SubproblemObjective::value_grad(const SubspaceParams& b, RngStream* rng,
                                       SubspaceParams& b_grad, ParamSet* aux_grad) {
  ParamSet aux_local;
  ParamSet* aux = aux_grad ? aux_grad : &aux_local;
  const double data_value = f_.grad_subspace(w_, p_, b, rng, b_grad, *aux);
  if (inv_eta_ != 0.0) b_grad.add_scaled(b, inv_eta_);
  return data_value + reg(b);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> resolve_ranks(const std::vector<LayerInfo>& info, std::size_t uniform,
                                       const std::vector<std::size_t>& override_ranks) {
  if (!override_ranks.empty() && override_ranks.size() != info.size())
    throw_config("resolve_ranks: per-layer rank list must match layer count");
  std::vector<std::size_t> out(info.size(), 0);
  for (std::size_t l = 0; l < info.size(); ++l) {
    if (!info[l].subspace_managed) continue;
    std::size_t r = uniform;
    if (!override_ranks.empty() && override_ranks[l] != 0) r = override_ranks[l];
    if (r == 0) throw_config("resolve_ranks: rank must be positive");
    out[l] = std::min(r, info[l].rows);
  }
  return out;
}

ProjectionSet sample_projection_set(const std::vector<LayerInfo>& info,
                                    const std::vector<std::size_t>& ranks, ProjectionKind kind,
                                    const RngStream& base, std::uint64_t outer_k) {
  if (ranks.size() != info.size()) throw_shape("sample_projection_set: rank list mismatch");
  ProjectionSet out;
  out.kind = kind;
  out.layers.assign(info.size(), Mat());
  std::map<std::uint64_t, Mat> by_group;
  for (std::size_t l = 0; l < info.size(); ++l) {
    if (!info[l].subspace_managed) continue;
    const std::uint64_t gid = info[l].projection_group >= 0
                                  ? static_cast<std::uint64_t>(info[l].projection_group)
                                  : (0x4000000000000000ULL + l);
    auto it = by_group.find(gid);
    if (it == by_group.end()) {
      RngStream rng = base.derive(kTagProj ^ (gid << 16), outer_k);
      Mat p = sample_projection(rng, info[l].rows, ranks[l], kind);
      it = by_group.emplace(gid, std::move(p)).first;
    }
    if (it->second.rows() != info[l].rows || it->second.cols() != ranks[l])
      throw_shape("sample_projection_set: tied layers disagree on shape");
    out.layers[l] = it->second;
  }
  return out;
}

SmoothnessEstimate estimate_smoothness(const Objective& f, const std::vector<LayerInfo>& info,
                                       const std::vector<std::size_t>& ranks) {
  const auto L = f.smoothness();
  if (!L) throw_config("estimate_smoothness: objective smoothness is unknown");
  double max_ratio = 0.0;
  for (std::size_t l = 0; l < info.size(); ++l) {
    if (!info[l].subspace_managed) continue;
    max_ratio = std::max(max_ratio,
                         static_cast<double>(info[l].rows) / static_cast<double>(ranks[l]));
  }
  if (max_ratio <= 0.0) throw_config("estimate_smoothness: no subspace-managed layers");
  return {*L, max_ratio * *L};
}

std::size_t serialized_gradient_bytes(const std::vector<Mat>& grads, int element_bytes) {
  if (element_bytes != 2 && element_bytes != 4)
    throw_config("serialized_gradient_bytes: element width must be 2 or 4 bytes");
  std::vector<unsigned char> buf;
  std::size_t entries = 0;
  for (const Mat& m : grads) entries += m.size();
  buf.reserve(entries * static_cast<std::size_t>(element_bytes));
  for (const Mat& m : grads) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const float fv = static_cast<float>(m.data()[i]);
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(fv);
      if (element_bytes == 4) {
        buf.push_back(static_cast<unsigned char>(bits));
        buf.push_back(static_cast<unsigned char>(bits >> 8));
        buf.push_back(static_cast<unsigned char>(bits >> 16));
        buf.push_back(static_cast<unsigned char>(bits >> 24));
      } else {
        // bfloat16: upper half of the IEEE-754 single
        buf.push_back(static_cast<unsigned char>(bits >> 16));
        buf.push_back(static_cast<unsigned char>(bits >> 24));
      }
    }
  }
  return buf.size();
}

// ---------------------------------------------------------------------------
// RSO outer loop

TrainResult rso_train(Objective& f, const RsoConfig& cfg, RngStream& rng, const ParamSet* w0) {
  if (cfg.outer_iters < 0) throw_config("rso_train: outer_iters must be >= 0");
  const auto info = f.layers();
  const auto ranks = resolve_ranks(info, cfg.rank, cfg.ranks);

  // eta / certificate constants
  double inv_eta = 0.0;
  double mu_strong = std::numeric_limits<double>::quiet_NaN();
  bool have_eta = false;
  double eta_val = 0.0;
  if (cfg.eta_auto) {
    const SmoothnessEstimate sm = estimate_smoothness(f, info, ranks);
    eta_val = 1.0 / (2.0 * sm.L_hat);
    have_eta = true;
    mu_strong = 1.0 / eta_val - sm.L_hat;  // = L_hat
  } else if (cfg.eta) {
    if (!(*cfg.eta > 0.0)) throw_config("rso_train: eta must be positive");
    eta_val = *cfg.eta;
    have_eta = true;
    if (f.smoothness()) {
      const SmoothnessEstimate sm = estimate_smoothness(f, info, ranks);
      mu_strong = 1.0 / eta_val - sm.L_hat;  // may be <= 0; certified mode rejects that
    }
  }
  if (have_eta) inv_eta = 1.0 / eta_val;
  if (cfg.certified_eps && !(mu_strong > 0.0))
    throw_config("rso_train: certified mode needs eta < 1/L_hat with known smoothness");

  RngStream init_rng = rng.derive(kTagInit);
  ParamSet w = w0 ? *w0 : f.init_params(init_rng);

  // persistent optimizer for layers outside the subspace parameterization
  bool has_aux = false;
  std::vector<Mat> aux_shapes(info.size());
  for (std::size_t l = 0; l < info.size(); ++l)
    if (!info[l].subspace_managed) {
      has_aux = true;
      aux_shapes[l] = Mat(info[l].rows, info[l].cols);
    }
  AdamState aux_state;
  if (has_aux)
    aux_state = AdamState(aux_shapes, {cfg.inner.lr, cfg.inner.beta1, cfg.inner.beta2,
                                       cfg.inner.eps_num});

  SolverSpec inner = cfg.inner;
  inner.lr *= cfg.scale;

  TrainResult out;
  RunTrace& tr = out.trace;
  tr.k.push_back(0);
  tr.f.push_back(f.eval(w));
  tr.grad_sq.push_back(family_grad_norm_sq(f, w));

  for (int k = 0; k < cfg.outer_iters; ++k) {
    const double t0 = now_seconds();
    try {
      ProjectionSet p =
          sample_projection_set(info, ranks, cfg.projection, rng, static_cast<std::uint64_t>(k));
      SubproblemObjective g(f, w, p, inv_eta);

      std::uint64_t comm = 0;
      auto observer = [&](const SubspaceParams& bg, const ParamSet* aux_g) {
        comm += serialized_gradient_bytes(bg.layers, cfg.element_bytes);
        if (aux_g) adam_step(aux_state, w.layers, aux_g->layers);
      };

      SolveResult res;
      if (inner.kind == SolverKind::exact) {
        auto b = f.solve_prox_exact(w, p, inv_eta);
        if (!b) throw_config("rso_train: objective has no closed-form subproblem solution");
        res.b = std::move(*b);
        res.certified = true;
        res.eps_cert = 0.0;
      } else if (cfg.certified_eps) {
        RngStream solve_rng = rng.derive(kTagSolve, static_cast<std::uint64_t>(k));
        res = solve_subproblem(g, inner,
                               InexactnessTarget::certified(
                                   *cfg.certified_eps, 10 * std::max(1, cfg.inner_steps)),
                               mu_strong, solve_rng, observer);
        if (!res.certified) ++tr.not_certified_count;
      } else {
        RngStream solve_rng = rng.derive(kTagSolve, static_cast<std::uint64_t>(k));
        res = solve_subproblem(g, inner, InexactnessTarget::fixed(cfg.inner_steps), mu_strong,
                               solve_rng, observer);
        // diagnostic certificate on the deterministic objective when usable
        if (mu_strong > 0.0 && !g.has_aux()) {
          SubspaceParams bg;
          g.value_grad(res.b, nullptr, bg, nullptr);
          res.eps_cert = inexactness_certificate(bg.norm_sq(), mu_strong);
        }
      }

      ParamSet w_next = add_projected(w, p, res.b);
      const double f_next = f.eval(w_next);
      const double reg = g.reg(res.b);
      const double g_tilde = f_next + reg;
      // the outer recursion's bookkeeping identity: g_{k+1}(0) = g_k(Btilde) - reg
      const double dev = std::fabs(f_next - (g_tilde - reg));
      if (dev > 1e-12 * std::max({1.0, std::fabs(f_next), reg}))
        throw_numeric("rso_train: telescoping identity violated");
      if (!std::isfinite(f_next)) throw_numeric("rso_train: non-finite objective value");

      w = std::move(w_next);
      tr.eps_cert.push_back(res.eps_cert);
      tr.inner_steps.push_back(res.steps);
      tr.comm_bytes.push_back(comm);
      tr.opt_state_entries.push_back(res.solver_state_entries + aux_state.state_entries());
      tr.wall_time.push_back(now_seconds() - t0);
      tr.k.push_back(k + 1);
      tr.f.push_back(f_next);
      tr.grad_sq.push_back(family_grad_norm_sq(f, w));
    } catch (const Error& e) {
      if (e.code != ErrorCode::numeric) throw;
      tr.aborted = true;
      tr.abort_reason = e.what();
      break;
    }
  }
  out.w = std::move(w);
  return out;
}

// ---------------------------------------------------------------------------
// Adam baseline

TrainResult adam_train(Objective& f, const AdamTrainConfig& cfg, RngStream& rng,
                       const ParamSet* w0) {
  if (cfg.steps < 0 || cfg.trace_stride < 1) throw_config("adam_train: bad step configuration");
  const auto info = f.layers();
  RngStream init_rng = rng.derive(kTagInit);
  ParamSet w = w0 ? *w0 : f.init_params(init_rng);
  AdamState st(w.layers, cfg.hyper);

  TrainResult out;
  RunTrace& tr = out.trace;
  tr.k.push_back(0);
  tr.f.push_back(f.eval(w));
  tr.grad_sq.push_back(family_grad_norm_sq(f, w));

  std::uint64_t comm_acc = 0;
  int steps_acc = 0;
  double t0 = now_seconds();
  ParamSet g;
  std::vector<Mat> managed;
  for (int step = 0; step < cfg.steps; ++step) {
    try {
      RngStream batch = rng.derive(kTagBatch, static_cast<std::uint64_t>(step));
      f.grad_full(w, &batch, g);
      managed.clear();
      for (std::size_t l = 0; l < info.size(); ++l)
        if (info[l].subspace_managed) managed.push_back(g.layers[l]);
      comm_acc += serialized_gradient_bytes(managed, cfg.element_bytes);
      adam_step(st, w.layers, g.layers);
      ++steps_acc;
      if ((step + 1) % cfg.trace_stride == 0 || step + 1 == cfg.steps) {
        const double fv = f.eval(w);
        if (!std::isfinite(fv)) throw_numeric("adam_train: non-finite objective value");
        tr.eps_cert.push_back(std::numeric_limits<double>::quiet_NaN());
        tr.inner_steps.push_back(steps_acc);
        tr.comm_bytes.push_back(comm_acc);
        tr.opt_state_entries.push_back(st.state_entries());
        tr.wall_time.push_back(now_seconds() - t0);
        tr.k.push_back(step + 1);
        tr.f.push_back(fv);
        tr.grad_sq.push_back(family_grad_norm_sq(f, w));
        comm_acc = 0;
        steps_acc = 0;
        t0 = now_seconds();
      }
    } catch (const Error& e) {
      if (e.code != ErrorCode::numeric) throw;
      tr.aborted = true;
      tr.abort_reason = e.what();
      break;
    }
  }
  out.w = std::move(w);
  return out;
}

// ---------------------------------------------------------------------------
// GaLore baseline

std::optional<Mat> top_left_singular_vectors(const Mat& g, std::size_t r) {
  const std::size_t m = g.rows(), n = g.cols();
  if (r == 0 || r > std::min(m, n)) throw_shape("top_left_singular_vectors: bad rank");
  std::vector<double> ev;
  Mat vecs;
  if (m <= n) {
    if (!sym_eig_jacobi(matmul_nt(g, g), ev, vecs)) return std::nullopt;
    Mat u(m, r);
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t i = 0; i < m; ++i) u(i, j) = vecs(i, j);
    return u;
  }
  if (!sym_eig_jacobi(matmul_tn(g, g), ev, vecs)) return std::nullopt;
  const double sigma0 = std::sqrt(std::max(ev[0], 0.0));
  Mat u(m, r);
  for (std::size_t j = 0; j < r; ++j) {
    const double sigma = std::sqrt(std::max(ev[j], 0.0));
    if (sigma <= 1e-12 * std::max(sigma0, 1e-300)) return std::nullopt;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t kk = 0; kk < n; ++kk) s += g(i, kk) * vecs(kk, j);
      u(i, j) = s / sigma;
    }
  }
  return u;
}

TrainResult galore_train(Objective& f, const GaloreTrainConfig& cfg, RngStream& rng,
                         const ParamSet* w0) {
  if (cfg.steps < 0 || cfg.trace_stride < 1) throw_config("galore_train: bad step configuration");
  if (cfg.update_interval < 1) throw_config("galore_train: update interval must be >= 1");
  const auto info = f.layers();
  RngStream init_rng = rng.derive(kTagInit);
  ParamSet w = w0 ? *w0 : f.init_params(init_rng);

  const bool pinned = !cfg.fixed_projection.empty();
  if (pinned && cfg.fixed_projection.size() != info.size())
    throw_config("galore_train: fixed projection must be aligned with the layer family");

  std::vector<std::size_t> ranks(info.size(), 0);
  std::vector<Mat> moment_shapes(info.size());
  for (std::size_t l = 0; l < info.size(); ++l) {
    if (info[l].subspace_managed) {
      if (pinned) {
        const Mat& p = cfg.fixed_projection[l];
        if (p.rows() != info[l].rows || p.cols() == 0 || p.cols() > info[l].rows)
          throw_config("galore_train: pinned projection has a bad shape");
        ranks[l] = p.cols();
      } else {
        ranks[l] = std::min(cfg.rank, std::min(info[l].rows, info[l].cols));
      }
      if (ranks[l] == 0) throw_config("galore_train: rank must be positive");
      moment_shapes[l] = Mat(ranks[l], info[l].cols);
    } else {
      moment_shapes[l] = Mat(info[l].rows, info[l].cols);
    }
  }

  GaloreState gs;
  gs.p.assign(info.size(), Mat());
  gs.moments = AdamState(moment_shapes, cfg.hyper);
  if (pinned) gs.p = cfg.fixed_projection;

  TrainResult out;
  RunTrace& tr = out.trace;
  tr.k.push_back(0);
  tr.f.push_back(f.eval(w));
  tr.grad_sq.push_back(family_grad_norm_sq(f, w));

  std::uint64_t comm_acc = 0;
  int steps_acc = 0;
  double t0 = now_seconds();
  ParamSet g;
  std::vector<Mat> managed;
  for (int step = 0; step < cfg.steps; ++step) {
    try {
      RngStream batch = rng.derive(kTagBatch, static_cast<std::uint64_t>(step));
      f.grad_full(w, &batch, g);

      if (!pinned && step % cfg.update_interval == 0) {
        for (std::size_t l = 0; l < info.size(); ++l) {
          if (!info[l].subspace_managed) continue;
          auto u = top_left_singular_vectors(g.layers[l], ranks[l]);
          if (u) {
            gs.p[l] = std::move(*u);
          } else if (gs.p[l].empty()) {
            Mat id(info[l].rows, ranks[l]);  // basis-column fallback before the first success
            for (std::size_t j = 0; j < ranks[l]; ++j) id(j, j) = 1.0;
            gs.p[l] = std::move(id);
            ++gs.svd_warnings;
          } else {
            ++gs.svd_warnings;  // keep previous projection
          }
        }
      }

      managed.clear();
      for (std::size_t l = 0; l < info.size(); ++l)
        if (info[l].subspace_managed) managed.push_back(g.layers[l]);
      comm_acc += serialized_gradient_bytes(managed, cfg.element_bytes);

      ++gs.t;
      for (std::size_t l = 0; l < info.size(); ++l) {
        if (g.layers[l].empty()) continue;
        if (info[l].subspace_managed) {
          Mat pg = matmul_tn(gs.p[l], g.layers[l]);
          Mat dir = adam_direction(gs.moments.mom[l], pg, cfg.hyper, gs.t);
          w.layers[l].add_scaled(matmul(gs.p[l], dir), -(cfg.hyper.lr * cfg.scale));
        } else {
          Mat dir = adam_direction(gs.moments.mom[l], g.layers[l], cfg.hyper, gs.t);
          w.layers[l].add_scaled(dir, -cfg.hyper.lr);
        }
      }
      ++steps_acc;

      if ((step + 1) % cfg.trace_stride == 0 || step + 1 == cfg.steps) {
        const double fv = f.eval(w);
        if (!std::isfinite(fv)) throw_numeric("galore_train: non-finite objective value");
        tr.eps_cert.push_back(std::numeric_limits<double>::quiet_NaN());
        tr.inner_steps.push_back(steps_acc);
        tr.comm_bytes.push_back(comm_acc);
        tr.opt_state_entries.push_back(gs.moments.state_entries());
        tr.wall_time.push_back(now_seconds() - t0);
        tr.k.push_back(step + 1);
        tr.f.push_back(fv);
        tr.grad_sq.push_back(family_grad_norm_sq(f, w));
        comm_acc = 0;
        steps_acc = 0;
        t0 = now_seconds();
      }
    } catch (const Error& e) {
      if (e.code != ErrorCode::numeric) throw;
      tr.aborted = true;
      tr.abort_reason = e.what();
      break;
    }
  }
  out.w = std::move(w);
  return out;
}

// ---------------------------------------------------------------------------
// Verification harnesses

TheoremBoundReport verify_theorem_bound(const TheoremBoundConfig& cfg) {
  if (cfg.kind == ProjectionKind::gaussian_approx)
    throw_config("verify_theorem_bound: needs an exact-isometry projection family");
  if (cfg.r == 0 || cfg.r > cfg.m || cfg.seeds < 1 || cfg.k_max < 1)
    throw_config("verify_theorem_bound: bad configuration");

  RngStream root(cfg.seed);
  RngStream tgt_rng = root.derive(0x746172676574);
  RngStream w0_rng = root.derive(0x7730);
  ParamSet target;
  target.layers.push_back(gauss(tgt_rng, cfg.m, cfg.n, 1.0));
  QuadraticObjective f(std::move(target));
  ParamSet w0;
  w0.layers.push_back(gauss(w0_rng, cfg.m, cfg.n, 1.0));

  const double L_hat = static_cast<double>(cfg.m) / static_cast<double>(cfg.r);  // L = 1
  const double eta = 1.0 / (2.0 * L_hat);
  const double inv_eta = 2.0 * L_hat;
  const double mu = 1.0 / eta - L_hat;  // = L_hat
  const double delta0 = f.eval(w0);     // f* = 0

  const auto info = f.layers();
  const std::vector<std::size_t> ranks = resolve_ranks(info, cfg.r);

  TheoremBoundReport rep;
  rep.L_hat = L_hat;
  rep.delta0 = delta0;
  rep.eps = cfg.eps;

  std::vector<double> grad_sq_sum(cfg.k_max, 0.0);
  for (int s = 0; s < cfg.seeds; ++s) {
    RngStream seed_stream = root.derive(0x73656564, static_cast<std::uint64_t>(s));
    ParamSet w = w0;
    std::vector<double> gsq(cfg.k_max);
    bool excluded = false;
    for (int k = 0; k < cfg.k_max; ++k) {
      gsq[k] = (w.layers[0] - f.target().layers[0]).frob_norm_sq();
      ProjectionSet p = sample_projection_set(info, ranks, cfg.kind, seed_stream,
                                              static_cast<std::uint64_t>(k));
      SubspaceParams b;
      if (cfg.eps == 0.0) {
        b = *f.solve_prox_exact(w, p, inv_eta);
      } else {
        SubproblemObjective g(f, w, p, inv_eta);
        SolverSpec gd;
        gd.kind = SolverKind::gd;
        gd.lr = 1.0 / (inv_eta + L_hat);  // 1 / (smoothness of g)
        RngStream solve_rng = seed_stream.derive(kTagSolve, static_cast<std::uint64_t>(k));
        SolveResult res = solve_subproblem(g, gd, InexactnessTarget::certified(cfg.eps, 100000),
                                           mu, solve_rng);
        if (!res.certified) {
          excluded = true;
          break;
        }
        b = std::move(res.b);
      }
      w = add_projected(w, p, b);
    }
    if (excluded) {
      ++rep.seeds_excluded;
      continue;
    }
    ++rep.seeds_used;
    for (int k = 0; k < cfg.k_max; ++k) grad_sq_sum[k] += gsq[k];
  }

  if (rep.seeds_used == 0) {
    rep.pass = false;
    return rep;
  }
  const double inv_seeds = 1.0 / static_cast<double>(rep.seeds_used);
  rep.pass = true;
  double running = 0.0;
  int next_pow = 1;
  for (int K = 1; K <= cfg.k_max; ++K) {
    running += grad_sq_sum[K - 1] * inv_seeds;
    const bool record = (K == next_pow) || (K == cfg.k_max);
    if (K == next_pow) next_pow *= 2;
    if (!record) continue;
    const double lhs = running / static_cast<double>(K);
    const double rhs = 18.0 * L_hat * delta0 / static_cast<double>(K) + 18.0 * L_hat * cfg.eps;
    const bool ok = lhs <= rhs;
    rep.points.push_back({K, lhs, rhs, ok});
    rep.pass = rep.pass && ok;
  }
  return rep;
}

SandwichReport verify_gk_sandwich(Objective& f, const ParamSet& w, const ProjectionSet& p,
                                  double eta, double l_hat, int pairs, RngStream& rng,
                                  double b_scale) {
  if (!(eta > 0.0)) throw_config("verify_gk_sandwich: eta must be positive");
  SubproblemObjective g(f, w, p, 1.0 / eta);
  SandwichReport rep;
  rep.mu = 1.0 / eta - l_hat;
  rep.l_g = 1.0 / eta + l_hat;
  rep.pairs = pairs;

  SubspaceParams b1 = g.zero_b(), b2 = g.zero_b(), g1, g2;
  for (int t = 0; t < pairs; ++t) {
    RngStream pair_rng = rng.derive(0x70616972, static_cast<std::uint64_t>(t));
    for (SubspaceParams* b : {&b1, &b2})
      for (Mat& m : b->layers)
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = b_scale * pair_rng.gaussian();

    g.value_grad(b1, nullptr, g1, nullptr);
    g.value_grad(b2, nullptr, g2, nullptr);

    double inner = 0.0, nsq = 0.0;
    for (std::size_t l = 0; l < b1.layers.size(); ++l) {
      if (b1.layers[l].empty()) continue;
      const Mat db = b1.layers[l] - b2.layers[l];
      inner += dot(g1.layers[l] - g2.layers[l], db);
      nsq += db.frob_norm_sq();
    }
    const double slack = 1e-9 * std::max(1.0, rep.l_g * nsq);
    const double left_dev = rep.mu * nsq - inner;    // > 0 would violate strong convexity
    const double right_dev = inner - rep.l_g * nsq;  // > 0 would violate smoothness
    if (left_dev > slack) {
      ++rep.left_violations;
      rep.max_left_dev = std::max(rep.max_left_dev, left_dev);
    }
    if (right_dev > slack) {
      ++rep.right_violations;
      rep.max_right_dev = std::max(rep.max_right_dev, right_dev);
    }
  }
  rep.pass = rep.left_violations == 0 && rep.right_violations == 0;
  return rep;
}

}  // namespace rso
