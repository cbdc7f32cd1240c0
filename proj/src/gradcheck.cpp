#include "rso/gradcheck.hpp"

#include <cmath>

#include "rso/engine.hpp"
#include "rso/error.hpp"

namespace rso {

Mat fd_gradient(const std::function<double()>& eval, Mat& theta, double h0) {
  Mat g(theta.rows(), theta.cols());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta.data()[i];
    const double h = h0 * std::max(1.0, std::fabs(orig));
    theta.data()[i] = orig + h;
    const double fp = eval();
    theta.data()[i] = orig - h;
    const double fm = eval();
    theta.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double grad_rel_err(const Mat& analytic, const Mat& fd) {
  if (!analytic.same_shape(fd)) throw_shape("grad_rel_err: shape mismatch");
  const double denom = std::max(analytic.frob_norm(), 1e-12);
  return (analytic - fd).frob_norm() / denom;
}

namespace {

struct BlockInstance {
  Mat x;
  BlockWeights w;
  BlockLowRank lr;
  Mat readout;  // fixed C; loss = <C, Z2>
};

BlockInstance random_block_instance(std::size_t s, std::size_t n, std::size_t r,
                                    std::uint64_t seed) {
  RngStream rng(seed, 0x626c6b);
  BlockInstance inst;
  const double std_w = 1.0 / std::sqrt(static_cast<double>(n));
  inst.x = gauss(rng, s, n, 1.0);
  inst.w = {gauss(rng, n, n, std_w),     gauss(rng, n, n, std_w), gauss(rng, n, n, std_w),
            gauss(rng, n, n, std_w),     gauss(rng, n, 4 * n, std_w),
            gauss(rng, 4 * n, n, std_w)};
  inst.lr.p_qkv = sample_projection(rng, n, r, ProjectionKind::haar);
  inst.lr.p_o = sample_projection(rng, n, r, ProjectionKind::haar);
  inst.lr.p_1 = sample_projection(rng, n, r, ProjectionKind::haar);
  inst.lr.p_2 = sample_projection(rng, 4 * n, r, ProjectionKind::haar);
  const double std_b = 0.1 / std::sqrt(static_cast<double>(r));
  inst.lr.bq = gauss(rng, r, n, std_b);
  inst.lr.bk = gauss(rng, r, n, std_b);
  inst.lr.bv = gauss(rng, r, n, std_b);
  inst.lr.bo = gauss(rng, r, n, std_b);
  inst.lr.b1 = gauss(rng, r, 4 * n, std_b);
  inst.lr.b2 = gauss(rng, r, n, std_b);
  inst.readout = gauss(rng, s, n, 1.0);
  return inst;
}

}  // namespace

GradCheckReport block_gradcheck_rso(std::size_t s, std::size_t n, std::size_t r,
                                    std::uint64_t seed, bool causal) {
  BlockInstance inst = random_block_instance(s, n, r, seed);

  ActivationTape tape;
  block_forward_rso(inst.x, inst.w, inst.lr, causal, tape);
  BlockGradsRso analytic = block_backward_rso(tape, inst.w, inst.lr, inst.readout);

  auto loss = [&]() {
    ActivationTape t;
    return dot(inst.readout, block_forward_rso(inst.x, inst.w, inst.lr, causal, t));
  };

  GradCheckReport rep;
  const std::vector<std::pair<std::string, std::pair<Mat*, const Mat*>>> checks = {
      {"bq", {&inst.lr.bq, &analytic.bq}}, {"bk", {&inst.lr.bk, &analytic.bk}},
      {"bv", {&inst.lr.bv, &analytic.bv}}, {"bo", {&inst.lr.bo, &analytic.bo}},
      {"b1", {&inst.lr.b1, &analytic.b1}}, {"b2", {&inst.lr.b2, &analytic.b2}},
  };
  for (const auto& [name, mats] : checks) {
    Mat fd = fd_gradient(loss, *mats.first, 1e-5);
    const double err = grad_rel_err(*mats.second, fd);
    rep.entries.push_back({name, err});
    rep.max_rel_err = std::max(rep.max_rel_err, err);
  }
  return rep;
}

double block_chain_rule_dev(std::size_t s, std::size_t n, std::size_t r, std::uint64_t seed,
                            bool causal) {
  BlockInstance inst = random_block_instance(s, n, r, seed);

  ActivationTape tape_rso;
  block_forward_rso(inst.x, inst.w, inst.lr, causal, tape_rso);
  BlockGradsRso gb = block_backward_rso(tape_rso, inst.w, inst.lr, inst.readout);

  // full-mode gradients at the effective weights W + P B
  BlockWeights eff = inst.w;
  eff.wq += matmul(inst.lr.p_qkv, inst.lr.bq);
  eff.wk += matmul(inst.lr.p_qkv, inst.lr.bk);
  eff.wv += matmul(inst.lr.p_qkv, inst.lr.bv);
  eff.wo += matmul(inst.lr.p_o, inst.lr.bo);
  eff.w1 += matmul(inst.lr.p_1, inst.lr.b1);
  eff.w2 += matmul(inst.lr.p_2, inst.lr.b2);
  ActivationTape tape_full;
  block_forward_full(inst.x, eff, causal, tape_full);
  BlockGradsFull gw = block_backward_full(tape_full, eff, inst.readout);

  double dev = 0.0;
  const std::vector<std::pair<const Mat*, std::pair<const Mat*, const Mat*>>> pairs = {
      {&gb.bq, {&inst.lr.p_qkv, &gw.wq}}, {&gb.bk, {&inst.lr.p_qkv, &gw.wk}},
      {&gb.bv, {&inst.lr.p_qkv, &gw.wv}}, {&gb.bo, {&inst.lr.p_o, &gw.wo}},
      {&gb.b1, {&inst.lr.p_1, &gw.w1}},   {&gb.b2, {&inst.lr.p_2, &gw.w2}},
  };
  for (const auto& [b_grad, pw] : pairs) {
    Mat want = matmul_tn(*pw.first, *pw.second);
    dev = std::max(dev, (*b_grad - want).frob_norm() / std::max(want.frob_norm(), 1e-12));
  }
  return dev;
}

GradCheckReport tiny_lm_gradcheck(std::size_t s, std::size_t n, std::size_t r,
                                  std::uint64_t seed) {
  TinyLmConfig cfg;
  cfg.vocab = 32;
  cfg.n_embed = n;
  cfg.n_blocks = 2;
  cfg.seq_len = s;
  cfg.batch = 2;
  cfg.corpus_len = 4096;
  // large enough weights that gradients dominate finite-difference roundoff
  cfg.init_std = 0.4;
  RngStream corpus_rng(seed, 0x636f7270);
  TinyLmObjective lm = TinyLmObjective::synthetic(cfg, corpus_rng);

  RngStream rng(seed, 0x6c6d);
  ParamSet w = lm.init_params(rng);
  const auto info = lm.layers();
  const auto ranks = resolve_ranks(info, r);
  ProjectionSet p = sample_projection_set(info, ranks, ProjectionKind::haar, rng, 0);
  SubspaceParams b = zero_subspace(p, info);
  for (Mat& m : b.layers)
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.2 * rng.gaussian();

  MinibatchSample batch = lm.sample_batch(rng);
  SubspaceParams bg;
  ParamSet wg;
  lm.loss(w, &p, &b, batch, &bg, &wg);

  auto loss = [&]() { return lm.loss(w, &p, &b, batch, nullptr, nullptr); };
  GradCheckReport rep;
  Mat fd = fd_gradient(loss, b.layers[0], 1e-5);  // block 0's query matrix
  const double err = grad_rel_err(bg.layers[0], fd);
  rep.entries.push_back({"bq0", err});
  rep.max_rel_err = err;
  return rep;
}

}  // namespace rso
