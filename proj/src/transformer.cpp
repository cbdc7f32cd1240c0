#include "rso/transformer.hpp"

#include <cmath>
#include <fstream>

#include "rso/error.hpp"

namespace rso {

namespace {

Mat eff_weight(const Mat& w, const Mat& p, const Mat& b) {
  Mat e = matmul(p, b);
  e += w;
  return e;
}

Mat tanh_of(const Mat& z) {
  Mat out = z;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
  return out;
}

/// d(tanh)/dz from the pre-activation.
Mat tanh_deriv(const Mat& z_pre) {
  Mat out = z_pre;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = std::tanh(out.data()[i]);
    out.data()[i] = 1.0 - t * t;
  }
  return out;
}

/// Exact softmax vector-Jacobian product per row: g = a .* (d - <d, a>).
Mat softmax_vjp(const Mat& att, const Mat& upstream) {
  Mat g(att.rows(), att.cols());
  for (std::size_t i = 0; i < att.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < att.cols(); ++j) s += upstream(i, j) * att(i, j);
    for (std::size_t j = 0; j < att.cols(); ++j)
      g(i, j) = att(i, j) * (upstream(i, j) - s);
  }
  return g;
}

}  // namespace

std::size_t ActivationTape::entry_count() const {
  std::size_t n = 0;
  for (const Mat* m : {&x, &a_h, &a_o, &z1, &xp, &a_h_po, &a_o_p1, &z1_p2,
                       &q, &k, &v, &att_pre, &att, &z1_pre, &z2})
    n += m->size();
  return n;
}

Mat softmax_rows(const Mat& scores, bool causal) {
  Mat out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::size_t last = causal ? std::min(i + 1, scores.cols()) : scores.cols();
    double mx = -HUGE_VAL;
    for (std::size_t j = 0; j < last; ++j) mx = std::max(mx, scores(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < last; ++j) {
      const double e = std::exp(scores(i, j) - mx);
      out(i, j) = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < last; ++j) out(i, j) *= inv;
  }
  return out;
}

Mat block_forward_full(const Mat& x, const BlockWeights& w, bool causal, ActivationTape& tape) {
  const std::size_t n = w.wq.rows();
  if (x.cols() != n) throw_shape("block_forward: input width != embedding dim");
  tape = ActivationTape{};
  tape.mode = BlockMode::full;
  tape.causal = causal;
  tape.x = x;
  tape.q = matmul(x, w.wq);
  tape.k = matmul(x, w.wk);
  tape.v = matmul(x, w.wv);
  tape.att_pre = matmul_nt(tape.q, tape.k);
  Mat scaled = tape.att_pre;
  scaled *= 1.0 / std::sqrt(static_cast<double>(n));
  tape.att = softmax_rows(scaled, causal);
  tape.a_h = matmul(tape.att, tape.v);
  tape.a_o = matmul(tape.a_h, w.wo);
  tape.z1_pre = matmul(tape.a_o, w.w1);
  tape.z1 = tanh_of(tape.z1_pre);
  tape.z2 = matmul(tape.z1, w.w2);
  if (!tape.z2.is_finite()) throw_numeric("block_forward: non-finite output");
  return tape.z2;
}

Mat block_forward_rso(const Mat& x, const BlockWeights& w, const BlockLowRank& lr, bool causal,
                      ActivationTape& tape) {
  const std::size_t n = w.wq.rows();
  if (x.cols() != n) throw_shape("block_forward: input width != embedding dim");
  const Mat weq = eff_weight(w.wq, lr.p_qkv, lr.bq);
  const Mat wek = eff_weight(w.wk, lr.p_qkv, lr.bk);
  const Mat wev = eff_weight(w.wv, lr.p_qkv, lr.bv);
  const Mat weo = eff_weight(w.wo, lr.p_o, lr.bo);
  const Mat we1 = eff_weight(w.w1, lr.p_1, lr.b1);
  const Mat we2 = eff_weight(w.w2, lr.p_2, lr.b2);

  tape = ActivationTape{};
  tape.mode = BlockMode::rso;
  tape.causal = causal;
  tape.xp = matmul(x, lr.p_qkv);
  tape.q = matmul(x, weq);
  tape.k = matmul(x, wek);
  tape.v = matmul(x, wev);
  tape.att_pre = matmul_nt(tape.q, tape.k);
  Mat scaled = tape.att_pre;
  scaled *= 1.0 / std::sqrt(static_cast<double>(n));
  tape.att = softmax_rows(scaled, causal);
  Mat a_h = matmul(tape.att, tape.v);
  tape.a_h_po = matmul(a_h, lr.p_o);
  Mat a_o = matmul(a_h, weo);
  tape.a_o_p1 = matmul(a_o, lr.p_1);
  tape.z1_pre = matmul(a_o, we1);
  Mat z1 = tanh_of(tape.z1_pre);
  tape.z1_p2 = matmul(z1, lr.p_2);
  tape.z2 = matmul(z1, we2);
  if (!tape.z2.is_finite()) throw_numeric("block_forward: non-finite output");
  return tape.z2;
}

BlockGradsFull block_backward_full(const ActivationTape& tape, const BlockWeights& w,
                                   const Mat& upstream) {
  if (tape.mode != BlockMode::full) throw_config("block_backward_full: tape is not full-mode");
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(w.wq.rows()));

  BlockGradsFull g;
  g.w2 = matmul_tn(tape.z1, upstream);
  Mat dz1_pre = hadamard(matmul_nt(upstream, w.w2), tanh_deriv(tape.z1_pre));
  g.w1 = matmul_tn(tape.a_o, dz1_pre);
  Mat da_o = matmul_nt(dz1_pre, w.w1);
  g.wo = matmul_tn(tape.a_h, da_o);
  Mat da_h = matmul_nt(da_o, w.wo);
  Mat datt = matmul_nt(da_h, tape.v);
  Mat dv = matmul_tn(tape.att, da_h);
  Mat dscores = softmax_vjp(tape.att, datt);
  dscores *= inv_sqrt_n;
  Mat dq = matmul(dscores, tape.k);
  Mat dk = matmul_tn(dscores, tape.q);
  g.wv = matmul_tn(tape.x, dv);
  g.wq = matmul_tn(tape.x, dq);
  g.wk = matmul_tn(tape.x, dk);
  g.x = matmul_nt(dq, w.wq);
  g.x += matmul_nt(dk, w.wk);
  g.x += matmul_nt(dv, w.wv);
  return g;
}

BlockGradsRso block_backward_rso(const ActivationTape& tape, const BlockWeights& w,
                                 const BlockLowRank& lr, const Mat& upstream) {
  if (tape.mode != BlockMode::rso) throw_config("block_backward_rso: tape is not rso-mode");
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(w.wq.rows()));
  const Mat weq = eff_weight(w.wq, lr.p_qkv, lr.bq);
  const Mat wek = eff_weight(w.wk, lr.p_qkv, lr.bk);
  const Mat wev = eff_weight(w.wv, lr.p_qkv, lr.bv);
  const Mat weo = eff_weight(w.wo, lr.p_o, lr.bo);
  const Mat we1 = eff_weight(w.w1, lr.p_1, lr.b1);
  const Mat we2 = eff_weight(w.w2, lr.p_2, lr.b2);

  BlockGradsRso g;
  g.b2 = matmul_tn(tape.z1_p2, upstream);
  Mat dz1_pre = hadamard(matmul_nt(upstream, we2), tanh_deriv(tape.z1_pre));
  g.b1 = matmul_tn(tape.a_o_p1, dz1_pre);
  Mat da_o = matmul_nt(dz1_pre, we1);
  g.bo = matmul_tn(tape.a_h_po, da_o);
  Mat da_h = matmul_nt(da_o, weo);
  Mat datt = matmul_nt(da_h, tape.v);
  Mat dv = matmul_tn(tape.att, da_h);
  Mat dscores = softmax_vjp(tape.att, datt);
  dscores *= inv_sqrt_n;
  Mat dq = matmul(dscores, tape.k);
  Mat dk = matmul_tn(dscores, tape.q);
  g.bv = matmul_tn(tape.xp, dv);
  g.bq = matmul_tn(tape.xp, dq);
  g.bk = matmul_tn(tape.xp, dk);
  g.x = matmul_nt(dq, weq);
  g.x += matmul_nt(dk, wek);
  g.x += matmul_nt(dv, wev);
  return g;
}

// ---------------------------------------------------------------------------
// Tiny LM

std::vector<int> make_corpus(RngStream& rng, std::size_t length, std::size_t vocab) {
  if (vocab < 4) throw_config("make_corpus: vocab too small");
  // dictionary of short words over symbols 1..vocab-1; 0 is the separator
  const std::size_t n_words = 24;
  std::vector<std::vector<int>> words(n_words);
  for (auto& word : words) {
    const std::size_t len = 3 + rng.uniform_index(5);
    word.resize(len);
    for (auto& c : word) c = 1 + static_cast<int>(rng.uniform_index(vocab - 1));
  }
  // heavier weight on early words
  std::vector<double> cum(n_words);
  double total = 0.0;
  for (std::size_t i = 0; i < n_words; ++i) {
    total += 1.0 / static_cast<double>(i + 3);
    cum[i] = total;
  }
  std::vector<int> out;
  out.reserve(length);
  while (out.size() < length) {
    const double u = rng.uniform() * total;
    std::size_t pick = 0;
    while (pick + 1 < n_words && cum[pick] < u) ++pick;
    for (int c : words[pick]) {
      out.push_back(c);
      if (out.size() == length) return out;
    }
    out.push_back(0);
  }
  return out;
}

std::vector<int> corpus_from_file(const std::string& path, std::size_t vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open corpus file '" + path + "'");
  std::vector<int> out;
  char c;
  while (in.get(c)) out.push_back(static_cast<int>(static_cast<unsigned char>(c)) %
                                  static_cast<int>(vocab));
  if (out.empty()) throw_io("corpus file '" + path + "' is empty");
  return out;
}

TinyLmObjective::TinyLmObjective(TinyLmConfig cfg, std::vector<int> corpus)
    : cfg_(cfg), corpus_(std::move(corpus)) {
  if (corpus_.size() < cfg_.seq_len + 2) throw_config("tiny_lm: corpus shorter than one window");
  for (int t : corpus_)
    if (t < 0 || t >= static_cast<int>(cfg_.vocab)) throw_config("tiny_lm: token id out of range");
  // fixed evaluation windows, evenly spaced
  const std::size_t span = corpus_.size() - cfg_.seq_len - 1;
  const std::size_t stride = std::max<std::size_t>(1, span / cfg_.eval_windows);
  for (std::size_t i = 0; i < cfg_.eval_windows; ++i) {
    const std::size_t start = (i * stride) % span;
    std::vector<int> in(corpus_.begin() + start, corpus_.begin() + start + cfg_.seq_len);
    std::vector<int> tgt(corpus_.begin() + start + 1, corpus_.begin() + start + cfg_.seq_len + 1);
    eval_batch_.inputs.push_back(std::move(in));
    eval_batch_.targets.push_back(std::move(tgt));
  }
}

TinyLmObjective TinyLmObjective::synthetic(TinyLmConfig cfg, RngStream& corpus_rng) {
  return TinyLmObjective(cfg, make_corpus(corpus_rng, cfg.corpus_len, cfg.vocab));
}

std::vector<LayerInfo> TinyLmObjective::layers() const {
  std::vector<LayerInfo> out;
  const std::size_t n = cfg_.n_embed;
  for (std::size_t blk = 0; blk < cfg_.n_blocks; ++blk) {
    const int gid = static_cast<int>(4 * blk);
    out.push_back({n, n, true, gid});          // wq (projection shared with k, v)
    out.push_back({n, n, true, gid});          // wk
    out.push_back({n, n, true, gid});          // wv
    out.push_back({n, n, true, gid + 1});      // wo
    out.push_back({n, 4 * n, true, gid + 2});  // w1
    out.push_back({4 * n, n, true, gid + 3});  // w2
  }
  out.push_back({cfg_.vocab, n, false, -1});    // embedding
  out.push_back({cfg_.seq_len, n, false, -1});  // positional table
  out.push_back({n, cfg_.vocab, false, -1});    // head
  return out;
}

ParamSet TinyLmObjective::init_params(RngStream& rng) const {
  ParamSet w;
  for (const LayerInfo& li : layers())
    w.layers.push_back(gauss(rng, li.rows, li.cols, cfg_.init_std));
  return w;
}

MinibatchSample TinyLmObjective::sample_batch(RngStream& rng) const {
  MinibatchSample batch;
  const std::size_t span = corpus_.size() - cfg_.seq_len - 1;
  for (std::size_t i = 0; i < cfg_.batch; ++i) {
    const std::size_t start = rng.uniform_index(span);
    std::vector<int> in(corpus_.begin() + start, corpus_.begin() + start + cfg_.seq_len);
    std::vector<int> tgt(corpus_.begin() + start + 1, corpus_.begin() + start + cfg_.seq_len + 1);
    batch.inputs.push_back(std::move(in));
    batch.targets.push_back(std::move(tgt));
  }
  return batch;
}

double TinyLmObjective::loss(const ParamSet& w, const ProjectionSet* p, const SubspaceParams* b,
                             const MinibatchSample& batch, SubspaceParams* b_grad,
                             ParamSet* w_grad) const {
  if (batch.inputs.empty()) throw_config("tiny_lm: empty batch");
  const std::size_t n = cfg_.n_embed;
  const std::size_t nb = cfg_.n_blocks;
  const bool rso_mode = (p != nullptr);
  const Mat& embed = w.layers[6 * nb];
  const Mat& pos = w.layers[6 * nb + 1];
  const Mat& head = w.layers[6 * nb + 2];

  std::vector<BlockWeights> blocks(nb);
  std::vector<BlockLowRank> lowrank(nb);
  for (std::size_t blk = 0; blk < nb; ++blk) {
    const std::size_t base = 6 * blk;
    blocks[blk] = {w.layers[base], w.layers[base + 1], w.layers[base + 2],
                   w.layers[base + 3], w.layers[base + 4], w.layers[base + 5]};
    if (rso_mode)
      lowrank[blk] = {p->layers[base],     p->layers[base + 3], p->layers[base + 4],
                      p->layers[base + 5], b->layers[base],     b->layers[base + 1],
                      b->layers[base + 2], b->layers[base + 3], b->layers[base + 4],
                      b->layers[base + 5]};
  }

  const bool want_grads = (b_grad != nullptr) || (w_grad != nullptr);
  if (want_grads) {
    if (w_grad == nullptr || (rso_mode && b_grad == nullptr))
      throw_config("tiny_lm: gradient sinks incomplete for the requested mode");
    if (rso_mode) {
      b_grad->layers.assign(w.layers.size(), Mat());
      for (std::size_t blk = 0; blk < nb; ++blk)
        for (std::size_t j = 0; j < 6; ++j) {
          const Mat& bm = b->layers[6 * blk + j];
          b_grad->layers[6 * blk + j] = Mat(bm.rows(), bm.cols());
        }
    }
    w_grad->layers.assign(w.layers.size(), Mat());
    if (!rso_mode)
      for (std::size_t blk = 0; blk < 6 * nb; ++blk)
        w_grad->layers[blk] = Mat(w.layers[blk].rows(), w.layers[blk].cols());
    w_grad->layers[6 * nb] = Mat(embed.rows(), embed.cols());
    w_grad->layers[6 * nb + 1] = Mat(pos.rows(), pos.cols());
    w_grad->layers[6 * nb + 2] = Mat(head.rows(), head.cols());
  }

  double total_loss = 0.0;
  std::size_t total_tokens = 0;

  std::vector<ActivationTape> tapes(nb);
  for (std::size_t seq = 0; seq < batch.inputs.size(); ++seq) {
    const std::vector<int>& in = batch.inputs[seq];
    const std::vector<int>& tgt = batch.targets[seq];
    const std::size_t s = in.size();
    if (s == 0 || tgt.size() != s) throw_config("tiny_lm: bad window");
    if (s > cfg_.seq_len) throw_config("tiny_lm: window longer than positional table");

    Mat xcur(s, n);
    for (std::size_t t = 0; t < s; ++t) {
      const int tok = in[t];
      if (tok < 0 || tok >= static_cast<int>(cfg_.vocab)) throw_config("tiny_lm: bad token id");
      for (std::size_t j = 0; j < n; ++j) xcur(t, j) = embed(tok, j) + pos(t, j);
    }

    for (std::size_t blk = 0; blk < nb; ++blk) {
      try {
        xcur = rso_mode ? block_forward_rso(xcur, blocks[blk], lowrank[blk], true, tapes[blk])
                        : block_forward_full(xcur, blocks[blk], true, tapes[blk]);
      } catch (const Error& e) {
        if (e.code == ErrorCode::numeric)
          throw_numeric("tiny_lm: block " + std::to_string(blk) + ": " + e.what());
        throw;
      }
    }

    Mat logits = matmul(xcur, head);
    Mat dlogits(s, cfg_.vocab);
    for (std::size_t t = 0; t < s; ++t) {
      double mx = logits(t, 0);
      for (std::size_t j = 1; j < cfg_.vocab; ++j) mx = std::max(mx, logits(t, j));
      double e_sum = 0.0;
      for (std::size_t j = 0; j < cfg_.vocab; ++j) e_sum += std::exp(logits(t, j) - mx);
      const double lse = mx + std::log(e_sum);
      total_loss += lse - logits(t, tgt[t]);
      ++total_tokens;
      if (want_grads) {
        const double inv = 1.0 / e_sum;
        for (std::size_t j = 0; j < cfg_.vocab; ++j)
          dlogits(t, j) = std::exp(logits(t, j) - mx) * inv;
        dlogits(t, tgt[t]) -= 1.0;
      }
    }
    if (!std::isfinite(total_loss)) throw_numeric("tiny_lm: non-finite loss");
    if (!want_grads) continue;

    w_grad->layers[6 * nb + 2] += matmul_tn(xcur, dlogits);
    Mat dx = matmul_nt(dlogits, head);
    for (std::size_t blk_ = nb; blk_-- > 0;) {
      if (rso_mode) {
        BlockGradsRso g = block_backward_rso(tapes[blk_], blocks[blk_], lowrank[blk_], dx);
        const std::size_t base = 6 * blk_;
        b_grad->layers[base] += g.bq;
        b_grad->layers[base + 1] += g.bk;
        b_grad->layers[base + 2] += g.bv;
        b_grad->layers[base + 3] += g.bo;
        b_grad->layers[base + 4] += g.b1;
        b_grad->layers[base + 5] += g.b2;
        dx = std::move(g.x);
      } else {
        BlockGradsFull g = block_backward_full(tapes[blk_], blocks[blk_], dx);
        const std::size_t base = 6 * blk_;
        w_grad->layers[base] += g.wq;
        w_grad->layers[base + 1] += g.wk;
        w_grad->layers[base + 2] += g.wv;
        w_grad->layers[base + 3] += g.wo;
        w_grad->layers[base + 4] += g.w1;
        w_grad->layers[base + 5] += g.w2;
        dx = std::move(g.x);
      }
    }
    Mat& dembed = w_grad->layers[6 * nb];
    Mat& dpos = w_grad->layers[6 * nb + 1];
    for (std::size_t t = 0; t < s; ++t)
      for (std::size_t j = 0; j < n; ++j) {
        dembed(in[t], j) += dx(t, j);
        dpos(t, j) += dx(t, j);
      }
  }

  const double inv = 1.0 / static_cast<double>(total_tokens);
  if (want_grads) {
    for (Mat& m : w_grad->layers)
      if (!m.empty()) m *= inv;
    if (rso_mode)
      for (Mat& m : b_grad->layers)
        if (!m.empty()) m *= inv;
  }
  return total_loss * inv;
}

double TinyLmObjective::eval(const ParamSet& w) const {
  return loss(w, nullptr, nullptr, eval_batch_, nullptr, nullptr);
}

double TinyLmObjective::grad_full(const ParamSet& w, RngStream* rng, ParamSet& grad) const {
  const MinibatchSample batch = rng ? sample_batch(*rng) : eval_batch_;
  return loss(w, nullptr, nullptr, batch, nullptr, &grad);
}

double TinyLmObjective::grad_subspace(const ParamSet& w, const ProjectionSet& p,
                                      const SubspaceParams& b, RngStream* rng,
                                      SubspaceParams& b_grad, ParamSet& unmanaged_grad) const {
  const MinibatchSample batch = rng ? sample_batch(*rng) : eval_batch_;
  return loss(w, &p, &b, batch, &b_grad, &unmanaged_grad);
}

double TinyLmObjective::eval_subspace(const ParamSet& w, const ProjectionSet& p,
                                      const SubspaceParams& b, RngStream* rng) const {
  const MinibatchSample batch = rng ? sample_batch(*rng) : eval_batch_;
  return loss(w, &p, &b, batch, nullptr, nullptr);
}

}  // namespace rso
