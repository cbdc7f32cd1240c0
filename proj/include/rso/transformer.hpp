#pragma once

#include <cstdint>
#include <vector>

#include "rso/objectives.hpp"

namespace rso {

/// Single-head attention + two-layer feed-forward block. Weight shapes:
/// wq, wk, wv, wo are n x n; w1 is n x 4n; w2 is 4n x n. The feed-forward
/// nonlinearity is tanh. No residual connections or layer norm.
struct BlockWeights {
  Mat wq, wk, wv, wo, w1, w2;
};

/// Low-rank reparameterization of a block: effective weights are W + P B.
/// One projection is shared across q/k/v.
struct BlockLowRank {
  Mat p_qkv, p_o, p_1, p_2;  // n x r, n x r, n x r, 4n x r
  Mat bq, bk, bv, bo, b1, b2;
};

enum class BlockMode { full, rso };

/// Tensors retained by the forward pass for backpropagation, matching the
/// block's activation accounting: per block the full mode holds
/// 15 s n + 2 s^2 entries and the rso mode 8 s n + 2 s^2 + 4 s r.
/// att_pre and z2 are retained as part of that accounting even though the
/// backward pass reads neither (att recovers the scores' derivative, z2 is
/// the block output).
struct ActivationTape {
  BlockMode mode = BlockMode::full;
  bool causal = false;

  // full mode only
  Mat x, a_h, a_o, z1;
  // rso mode only: projected stand-ins for x, a_h, a_o, z1
  Mat xp, a_h_po, a_o_p1, z1_p2;
  // both modes
  Mat q, k, v, att_pre, att, z1_pre, z2;

  std::size_t entry_count() const;
};

struct BlockGradsFull {
  Mat wq, wk, wv, wo, w1, w2;
  Mat x;
};

struct BlockGradsRso {
  Mat bq, bk, bv, bo, b1, b2;
  Mat x;
};

/// Row-wise softmax with optional causal mask (entries above the diagonal
/// excluded). Rows sum to one over the unmasked entries.
Mat softmax_rows(const Mat& scores, bool causal);

Mat block_forward_full(const Mat& x, const BlockWeights& w, bool causal, ActivationTape& tape);
Mat block_forward_rso(const Mat& x, const BlockWeights& w, const BlockLowRank& lr, bool causal,
                      ActivationTape& tape);

BlockGradsFull block_backward_full(const ActivationTape& tape, const BlockWeights& w,
                                   const Mat& upstream);
BlockGradsRso block_backward_rso(const ActivationTape& tape, const BlockWeights& w,
                                 const BlockLowRank& lr, const Mat& upstream);

// ---------------------------------------------------------------------------
// Tiny byte-level language model: token embedding + learned positional table
// + a stack of blocks + linear head, next-token cross-entropy.

/// One stochastic draw: `batch` windows of `seq_len` inputs with the
/// corresponding next tokens as targets.
struct MinibatchSample {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> targets;
};

struct TinyLmConfig {
  std::size_t vocab = 64;
  std::size_t n_embed = 64;
  std::size_t n_blocks = 2;
  std::size_t seq_len = 64;
  std::size_t batch = 8;
  std::size_t corpus_len = 1 << 16;
  std::size_t eval_windows = 8;
  double init_std = 0.02;
};

/// Deterministic synthetic text: words from a small random dictionary over
/// symbols 1..vocab-1, separated by token 0. Structured enough to learn.
std::vector<int> make_corpus(RngStream& rng, std::size_t length, std::size_t vocab);

/// Byte-level ingestion of a plain-text file; bytes are folded into
/// [0, vocab) when vocab < 256.
std::vector<int> corpus_from_file(const std::string& path, std::size_t vocab);

class TinyLmObjective : public Objective {
 public:
  TinyLmObjective(TinyLmConfig cfg, std::vector<int> corpus);

  static TinyLmObjective synthetic(TinyLmConfig cfg, RngStream& corpus_rng);

  std::vector<LayerInfo> layers() const override;
  ParamSet init_params(RngStream& rng) const override;
  double eval(const ParamSet& w) const override;
  double grad_full(const ParamSet& w, RngStream* rng, ParamSet& grad) const override;
  double grad_subspace(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b,
                       RngStream* rng, SubspaceParams& b_grad,
                       ParamSet& unmanaged_grad) const override;
  double eval_subspace(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b,
                       RngStream* rng) const override;

  const TinyLmConfig& config() const { return cfg_; }
  MinibatchSample sample_batch(RngStream& rng) const;
  const MinibatchSample& eval_batch() const { return eval_batch_; }

  /// Loss (and optionally gradients) on an explicit batch. Pass p/b for the
  /// low-rank parameterization, nullptr for the full one.
  double loss(const ParamSet& w, const ProjectionSet* p, const SubspaceParams* b,
              const MinibatchSample& batch, SubspaceParams* b_grad, ParamSet* w_grad) const;

 private:
  TinyLmConfig cfg_;
  std::vector<int> corpus_;
  MinibatchSample eval_batch_;
};

}  // namespace rso
