#include <doctest.h>

#include <cmath>

#include "rso/cost_model.hpp"
#include "rso/engine.hpp"
#include "rso/transformer.hpp"

using namespace rso;

namespace {

QuadraticObjective make_quadratic(std::uint64_t seed, std::size_t m, std::size_t n) {
  RngStream rng(seed, 0x74);
  ParamSet target;
  target.layers.push_back(gauss(rng, m, n, 1.0));
  return QuadraticObjective(std::move(target));
}

}  // namespace

TEST_CASE("rso_train with K = 0 returns the initial point") {
  QuadraticObjective f = make_quadratic(1, 8, 4);
  RngStream rng(2);
  ParamSet w0 = f.init_params(rng);
  RsoConfig cfg;
  cfg.rank = 2;
  cfg.outer_iters = 0;
  cfg.inner.kind = SolverKind::exact;
  cfg.eta_auto = true;
  RngStream run_rng(3);
  TrainResult res = rso_train(f, cfg, run_rng, &w0);
  CHECK(res.w.layers[0] == w0.layers[0]);
  CHECK(res.trace.f.size() == 1);
}

TEST_CASE("rso_train with exact solves descends monotonically on a quadratic") {
  QuadraticObjective f = make_quadratic(4, 32, 8);
  RsoConfig cfg;
  cfg.rank = 8;
  cfg.outer_iters = 40;
  cfg.inner.kind = SolverKind::exact;
  cfg.eta_auto = true;
  RngStream rng(5);
  TrainResult res = rso_train(f, cfg, rng);
  REQUIRE_FALSE(res.trace.aborted);
  for (std::size_t k = 1; k < res.trace.f.size(); ++k)
    CHECK(res.trace.f[k] <= res.trace.f[k - 1]);
  CHECK(res.trace.f.back() < res.trace.f.front());
}

TEST_CASE("full-rank coordinate projections reduce to full-space proximal iterations") {
  const std::size_t m = 12, n = 5;
  QuadraticObjective f = make_quadratic(6, m, n);
  RngStream rng(7);
  ParamSet w0 = f.init_params(rng);

  RsoConfig cfg;
  cfg.rank = m;  // r = m
  cfg.projection = ProjectionKind::coordinate;
  cfg.outer_iters = 5;
  cfg.inner.kind = SolverKind::exact;
  cfg.eta = 0.5;
  RngStream run_rng(8);
  TrainResult res = rso_train(f, cfg, run_rng, &w0);

  // full-space proximal map on the quadratic: W <- W + eta/(1+eta) (W* - W)
  Mat w = w0.layers[0];
  const double step = 0.5 / 1.5;
  for (int k = 0; k < 5; ++k) w += (f.target().layers[0] - w) * step;
  CHECK((res.w.layers[0] - w).frob_norm() < 1e-8 * std::max(1.0, w.frob_norm()));
}

TEST_CASE("identical seeds give byte-identical serialized traces") {
  QuadraticObjective f = make_quadratic(9, 16, 4);
  RsoConfig cfg;
  cfg.rank = 4;
  cfg.outer_iters = 10;
  cfg.inner.kind = SolverKind::sgd;
  cfg.inner.lr = 0.05;
  cfg.inner_steps = 5;
  cfg.eta_auto = true;
  RngStream r1(42), r2(42);
  TrainResult a = rso_train(f, cfg, r1);
  TrainResult b = rso_train(f, cfg, r2);
  CHECK(a.trace.to_csv() == b.trace.to_csv());
  RngStream r3(43);
  TrainResult c = rso_train(f, cfg, r3);
  CHECK(a.trace.to_csv() != c.trace.to_csv());
}

TEST_CASE("measured per-outer comm bytes equal the analytic per-sync prediction") {
  const std::size_t m = 24, n = 6, r = 4;
  QuadraticObjective f = make_quadratic(10, m, n);
  RsoConfig cfg;
  cfg.rank = r;
  cfg.outer_iters = 3;
  cfg.inner.kind = SolverKind::sgd;
  cfg.inner.lr = 0.05;
  cfg.inner_steps = 7;
  cfg.eta_auto = true;
  cfg.element_bytes = 4;
  RngStream rng(11);
  TrainResult res = rso_train(f, cfg, rng);
  const std::size_t per_sync = comm_bytes_per_sync(Alg::rso, {{m, n, r}}, 4);
  CHECK(per_sync == 4 * r * n);
  for (std::uint64_t bytes : res.trace.comm_bytes)
    CHECK(bytes == static_cast<std::uint64_t>(7) * per_sync);
}

TEST_CASE("rso_train records a finite certificate in certified mode") {
  QuadraticObjective f = make_quadratic(12, 32, 8);
  RsoConfig cfg;
  cfg.rank = 8;
  cfg.outer_iters = 4;
  cfg.inner.kind = SolverKind::gd;
  cfg.inner.lr = 1.0 / 12.0;  // 1 / (inv_eta + L_hat) = 1/(8+4)
  cfg.eta_auto = true;
  cfg.certified_eps = 1e-6;
  RngStream rng(13);
  TrainResult res = rso_train(f, cfg, rng);
  CHECK(res.trace.not_certified_count == 0);
  for (double e : res.trace.eps_cert) {
    CHECK(std::isfinite(e));
    CHECK(e <= 1e-6);
  }
}

// --- Adam baseline -----------------------------------------------------------

TEST_CASE("adam_train at the optimum stays put") {
  QuadraticObjective f = make_quadratic(14, 6, 3);
  ParamSet w0 = f.target();
  AdamTrainConfig cfg;
  cfg.steps = 5;
  RngStream rng(15);
  TrainResult res = adam_train(f, cfg, rng, &w0);
  CHECK(res.w.layers[0] == f.target().layers[0]);
}

TEST_CASE("adam_train equals a manual composition of adam_step, bitwise") {
  QuadraticObjective f = make_quadratic(16, 10, 4);
  RngStream rng(17);
  ParamSet w0 = f.init_params(rng);

  AdamTrainConfig cfg;
  cfg.hyper = {0.05, 0.9, 0.999, 1e-8};
  cfg.steps = 10;
  RngStream run_rng(18);
  TrainResult res = adam_train(f, cfg, run_rng, &w0);

  ParamSet w = w0;
  AdamState st(w.layers, cfg.hyper);
  for (int t = 0; t < 10; ++t) {
    ParamSet g;
    f.grad_full(w, nullptr, g);
    adam_step(st, w.layers, g.layers);
  }
  CHECK(res.w.layers[0] == w.layers[0]);
}

TEST_CASE("adam_train descends on the quadratic") {
  QuadraticObjective f = make_quadratic(19, 16, 4);
  AdamTrainConfig cfg;
  cfg.hyper.lr = 0.05;
  cfg.steps = 200;
  cfg.trace_stride = 50;
  RngStream rng(20);
  TrainResult res = adam_train(f, cfg, rng);
  CHECK(res.trace.f.back() < 0.1 * res.trace.f.front());
  CHECK(res.trace.f.size() == 5);  // 0 plus 4 stride rows
}

// --- GaLore baseline ----------------------------------------------------------

TEST_CASE("galore with a pinned identity projection is exactly adam") {
  const std::size_t m = 8, n = 5;
  QuadraticObjective f = make_quadratic(21, m, n);
  RngStream rng(22);
  ParamSet w0 = f.init_params(rng);

  GaloreTrainConfig g;
  g.hyper = {0.05, 0.9, 0.999, 1e-8};
  g.rank = m;
  g.scale = 1.0;
  g.steps = 5;
  g.fixed_projection = {Mat::identity(m)};
  RngStream r1(23);
  TrainResult via_galore = galore_train(f, g, r1, &w0);

  AdamTrainConfig a;
  a.hyper = g.hyper;
  a.steps = 5;
  RngStream r2(24);
  TrainResult via_adam = adam_train(f, a, r2, &w0);

  CHECK(via_galore.w.layers[0] == via_adam.w.layers[0]);
}

TEST_CASE("rank-1 projection captures a rank-1 gradient exactly") {
  RngStream rng(25);
  Mat u = gauss(rng, 8, 1, 1.0);
  Mat v = gauss(rng, 6, 1, 1.0);
  Mat g = matmul_nt(u, v);  // rank-1
  Mat p = *top_left_singular_vectors(g, 1);
  Mat residual = g - matmul(p, matmul_tn(p, g));
  CHECK(residual.frob_norm() < 1e-12 * g.frob_norm());
}

TEST_CASE("galore_train descends on the quadratic with frequent refresh") {
  QuadraticObjective f = make_quadratic(26, 16, 8);
  GaloreTrainConfig g;
  g.hyper.lr = 0.1;
  g.rank = 4;
  g.update_interval = 1;
  g.steps = 600;
  g.trace_stride = 200;
  RngStream rng(27);
  TrainResult res = galore_train(f, g, rng);
  REQUIRE_FALSE(res.trace.aborted);
  CHECK(res.trace.f.back() < 0.01 * res.trace.f.front());
}

// --- harnesses ----------------------------------------------------------------

TEST_CASE("theorem bound holds with exact solves across the K sweep") {
  TheoremBoundConfig cfg;
  cfg.m = 32;
  cfg.n = 8;
  cfg.r = 8;
  cfg.k_max = 16;
  cfg.eps = 0.0;
  cfg.seeds = 8;
  TheoremBoundReport rep = verify_theorem_bound(cfg);
  CHECK(rep.seeds_used == 8);
  CHECK(rep.pass);
  for (const auto& pt : rep.points) CHECK(pt.lhs <= pt.rhs);
}

TEST_CASE("theorem bound LHS is zero when starting at the optimum") {
  QuadraticObjective f = make_quadratic(28, 16, 4);
  ParamSet w0 = f.target();
  RsoConfig cfg;
  cfg.rank = 4;
  cfg.outer_iters = 4;
  cfg.inner.kind = SolverKind::exact;
  cfg.eta_auto = true;
  RngStream rng(29);
  TrainResult res = rso_train(f, cfg, rng, &w0);
  for (double gsq : res.trace.grad_sq) CHECK(gsq == 0.0);
}

TEST_CASE("doubling eps doubles the additive bound term") {
  TheoremBoundConfig cfg;
  cfg.m = 16;
  cfg.n = 4;
  cfg.r = 4;
  cfg.k_max = 4;
  cfg.seeds = 2;
  cfg.eps = 1e-3;
  TheoremBoundReport r1 = verify_theorem_bound(cfg);
  cfg.eps = 2e-3;
  TheoremBoundReport r2 = verify_theorem_bound(cfg);
  for (std::size_t i = 0; i < r1.points.size(); ++i) {
    const double add1 = r1.points[i].rhs - 18.0 * r1.L_hat * r1.delta0 / r1.points[i].K;
    const double add2 = r2.points[i].rhs - 18.0 * r2.L_hat * r2.delta0 / r2.points[i].K;
    CHECK(add2 == doctest::Approx(2.0 * add1).epsilon(1e-12));
  }
}

TEST_CASE("gk sandwich passes on the quadratic and handles b1 = b2") {
  QuadraticObjective f = make_quadratic(30, 32, 8);
  RngStream rng(31);
  ParamSet w = f.init_params(rng);
  const auto info = f.layers();
  const auto ranks = resolve_ranks(info, 8);
  ProjectionSet p = sample_projection_set(info, ranks, ProjectionKind::haar, rng, 0);
  const SmoothnessEstimate sm = estimate_smoothness(f, info, ranks);
  const double eta = 1.0 / (2.0 * sm.L_hat);
  RngStream pair_rng(32);
  SandwichReport rep = verify_gk_sandwich(f, w, p, eta, sm.L_hat, 200, pair_rng);
  CHECK(rep.pass);
  CHECK(rep.mu == doctest::Approx(sm.L_hat));
  CHECK(rep.l_g == doctest::Approx(3.0 * sm.L_hat));

  // b1 == b2 edge: inner = 0, |dB| = 0, both inequalities hold with equality
  SubproblemObjective g(f, w, p, 1.0 / eta);
  SubspaceParams b = g.zero_b();
  SubspaceParams g1, g2;
  g.value_grad(b, nullptr, g1, nullptr);
  g.value_grad(b, nullptr, g2, nullptr);
  double inner = 0.0;
  for (std::size_t l = 0; l < b.layers.size(); ++l)
    inner += dot(g1.layers[l] - g2.layers[l], b.layers[l]);
  CHECK(inner == 0.0);
}

TEST_CASE("gk sandwich left inequality holds for nearly all pairs on the tiny LM") {
  TinyLmConfig lmcfg;
  lmcfg.vocab = 16;
  lmcfg.n_embed = 8;
  lmcfg.n_blocks = 1;
  lmcfg.seq_len = 8;
  lmcfg.batch = 2;
  lmcfg.corpus_len = 2048;
  lmcfg.eval_windows = 2;
  RngStream corpus_rng(33, 34);
  TinyLmObjective lm = TinyLmObjective::synthetic(lmcfg, corpus_rng);
  RngStream rng(35);
  ParamSet w = lm.init_params(rng);
  const auto info = lm.layers();
  const auto ranks = resolve_ranks(info, 2);
  ProjectionSet p = sample_projection_set(info, ranks, ProjectionKind::haar, rng, 0);

  // crude curvature estimate from sampled gradient differences
  SubproblemObjective probe(lm, w, p, 0.0);
  RngStream est_rng(36);
  double l_est = 1.0;
  for (int t = 0; t < 20; ++t) {
    SubspaceParams b1 = probe.zero_b(), b2 = probe.zero_b(), g1, g2;
    for (SubspaceParams* b : {&b1, &b2})
      for (Mat& m : b->layers)
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.1 * est_rng.gaussian();
    probe.value_grad(b1, nullptr, g1, nullptr);
    probe.value_grad(b2, nullptr, g2, nullptr);
    double dn = 0.0, gn = 0.0;
    for (std::size_t l = 0; l < b1.layers.size(); ++l) {
      if (b1.layers[l].empty()) continue;
      dn += (b1.layers[l] - b2.layers[l]).frob_norm_sq();
      gn += (g1.layers[l] - g2.layers[l]).frob_norm_sq();
    }
    l_est = std::max(l_est, std::sqrt(gn / dn));
  }
  const double eta = 1.0 / (2.0 * l_est);
  RngStream pair_rng(37);
  SandwichReport rep = verify_gk_sandwich(lm, w, p, eta, l_est, 1000, pair_rng, 0.1);
  // nonconvex objective: the monotonicity side is reported, not guaranteed
  CHECK(rep.left_violations <= 10);
  MESSAGE("lm sandwich: left violations ", rep.left_violations, "/1000, right ",
          rep.right_violations);
}

TEST_CASE("E |P^T grad|^2 over fresh projections recovers |grad|^2") {
  QuadraticObjective f = make_quadratic(38, 32, 8);
  RngStream rng(39);
  ParamSet w = f.init_params(rng);
  ParamSet g;
  f.grad_full(w, nullptr, g);
  const double truth = g.norm_sq();

  for (ProjectionKind kind : {ProjectionKind::haar, ProjectionKind::coordinate}) {
    const int trials = 20000;
    double mean = 0.0, msq = 0.0;
    RngStream sample_rng(40, static_cast<std::uint64_t>(kind));
    for (int t = 0; t < trials; ++t) {
      Mat p = sample_projection(sample_rng, 32, 8, kind);
      const double v = matmul_tn(p, g.layers[0]).frob_norm_sq();
      mean += v;
      msq += v * v;
    }
    mean /= trials;
    msq /= trials;
    const double se = std::sqrt((msq - mean * mean) / trials);
    CHECK(std::fabs(mean - truth) <= 3.0 * se);
  }
}

TEST_CASE("trace CSV schema is stable") {
  QuadraticObjective f = make_quadratic(41, 8, 2);
  RsoConfig cfg;
  cfg.rank = 2;
  cfg.outer_iters = 2;
  cfg.inner.kind = SolverKind::exact;
  cfg.eta_auto = true;
  RngStream rng(42);
  TrainResult res = rso_train(f, cfg, rng);
  const std::string csv = res.trace.to_csv();
  CHECK(csv.rfind("k,f,grad_sq_norm,eps_cert,inner_steps,comm_bytes,opt_state_entries\n", 0) ==
        0);
  // 1 header + K+1 rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
