#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rso {

enum class Alg { rso, galore, lora, adam };

Alg alg_from_string(const std::string& s);
std::string to_string(Alg a);

/// Transformer block dimensions for the idealized accounting (feed-forward
/// intermediate fixed at 4n).
struct BlockShape {
  std::size_t s = 0;  // sequence length
  std::size_t b = 1;  // batch size
  std::size_t n = 0;  // embedding dim
  std::size_t r = 0;  // subspace rank
};

/// Adam-style optimizer-state entries per transformer block:
/// rso/galore 24nr, lora 48nr, adam 24n^2.
std::size_t optimizer_state_entries(Alg alg, const BlockShape& shape);

/// Per-block activation entries. Components are per batch element
/// (m1 + m2 + m3 = per-element total); `total` folds the batch in.
struct ActivationBreakdown {
  std::size_t m1 = 0;  // input/projection stage
  std::size_t m2 = 0;  // attention stage
  std::size_t m3 = 0;  // feed-forward stage
  std::size_t total = 0;
};

ActivationBreakdown activation_entries(Alg alg, const BlockShape& shape);

/// One trainable matrix: full size m x n, subspace rank r.
struct LayerDim {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t r = 0;
};

/// Bytes moved per data-parallel gradient synchronization.
/// rso syncs the subspace gradients (r_l x n_l), adam/galore the full
/// gradients (m_l x n_l), lora its two factor gradients (r_l (m_l + n_l)).
std::size_t comm_bytes_per_sync(Alg alg, const std::vector<LayerDim>& layers, int element_bytes);

/// Named model configurations (hidden / ffn-intermediate / heads / layers).
struct ArchSpec {
  std::string name;
  std::size_t hidden = 0;
  std::size_t intermediate = 0;
  std::size_t heads = 0;
  std::size_t layers = 0;
};

const ArchSpec& arch_by_name(const std::string& name);
std::vector<std::string> arch_names();

/// Whole-model accounting at the architecture's actual matrix shapes
/// (q/k/v/o are n x n, the feed-forward pair n x I and I x n), embedding and
/// head included as plain full-state Adam parameters at vocab 32000.
struct CostReport {
  std::string arch;
  std::string alg;
  std::size_t rank = 0;
  int element_bytes = 2;
  std::size_t seq = 0;
  std::size_t batch = 0;

  std::size_t optimizer_state_entries = 0;
  std::size_t activation_entries = 0;
  std::size_t gradient_entries = 0;  // one sync's worth
  std::size_t optimizer_state_bytes = 0;
  std::size_t activation_bytes = 0;
  std::size_t comm_bytes = 0;

  std::size_t block_state_entries = 0;   // per block
  std::size_t embed_state_entries = 0;   // embedding + head, whole model
  double optimizer_state_gb = 0.0;       // decimal gigabytes

  std::string to_json() const;
};

CostReport model_memory_report(const std::string& arch, Alg alg, std::size_t rank,
                               int element_bytes = 2, std::size_t seq = 256,
                               std::size_t batch = 16);

}  // namespace rso
