#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rso/objectives.hpp"
#include "rso/solvers.hpp"

namespace rso {

/// Objective smoothness L and its subspace-inflated counterpart
/// L_hat = max_l (m_l / r_l) * L.
struct SmoothnessEstimate {
  double L = 0.0;
  double L_hat = 0.0;
};

struct RsoConfig {
  std::size_t rank = 8;
  std::vector<std::size_t> ranks;  // optional per-layer override (managed layers)
  ProjectionKind projection = ProjectionKind::haar;
  /// Proximal coefficient eta. eta_auto selects 1/(2 L_hat) from the
  /// objective's smoothness; nullopt with eta_auto=false drops the term.
  std::optional<double> eta;
  bool eta_auto = false;
  SolverSpec inner;                     // inner.lr is the base learning rate
  double scale = 1.0;                   // multiplies inner.lr for the subspace weights
  int inner_steps = 20;                 // T, fixed-steps mode
  std::optional<double> certified_eps;  // switches the solve to certified mode
  int outer_iters = 100;                // K
  int element_bytes = 4;                // gradient sync width for comm accounting
};

struct AdamTrainConfig {
  AdamHyper hyper;
  int steps = 100;
  int trace_stride = 1;
  int element_bytes = 4;
};

struct GaloreTrainConfig {
  AdamHyper hyper;
  double scale = 1.0;
  std::size_t rank = 8;
  int update_interval = 200;
  int steps = 100;
  int trace_stride = 1;
  int element_bytes = 4;
  /// When non-empty, pins the per-layer projections (aligned with the layer
  /// family) and disables the SVD refresh. Mostly for controlled experiments.
  std::vector<Mat> fixed_projection;
};

/// Per-iteration record of a training run. `f` and `grad_sq` have one more
/// entry than the step-indexed vectors. Wall times are kept for diagnostics
/// but never serialized, so outputs stay byte-reproducible.
struct RunTrace {
  std::vector<std::int64_t> k;
  std::vector<double> f;
  std::vector<double> grad_sq;
  std::vector<double> eps_cert;               // NaN when not available
  std::vector<int> inner_steps;
  std::vector<std::uint64_t> comm_bytes;
  std::vector<std::size_t> opt_state_entries;
  std::vector<double> wall_time;
  int not_certified_count = 0;
  bool aborted = false;
  std::string abort_reason;

  /// Header: k,f,grad_sq_norm,eps_cert,inner_steps,comm_bytes,opt_state_entries
  std::string to_csv() const;

  double final_f() const { return f.back(); }
  double mean_grad_sq() const;
  std::uint64_t total_comm_bytes() const;
};

struct TrainResult {
  ParamSet w;
  RunTrace trace;
};

/// The subproblem g(B) = f(W + P B) + inv_eta/2 |B|^2 at a fixed (W, P).
/// Holds references; W may be mutated externally on its unmanaged layers
/// (persistent optimizer updates) while the managed layers stay fixed.
class SubproblemObjective : public Subproblem {
 public:
  SubproblemObjective(Objective& f, const ParamSet& w, const ProjectionSet& p,
                      double inv_eta);

  SubspaceParams zero_b() const override;
  double value(const SubspaceParams& b, RngStream* rng) override;
  double value_grad(const SubspaceParams& b, RngStream* rng, SubspaceParams& b_grad,
                    ParamSet* aux_grad) override;
  bool has_aux() const override { return has_aux_; }

  double reg(const SubspaceParams& b) const { return 0.5 * inv_eta_ * b.norm_sq(); }
  double inv_eta() const { return inv_eta_; }

 private:
  Objective& f_;
  const ParamSet& w_;
  const ProjectionSet& p_;
  double inv_eta_;
  std::vector<LayerInfo> info_;
  bool has_aux_ = false;
};

std::vector<std::size_t> resolve_ranks(const std::vector<LayerInfo>& info, std::size_t uniform,
                                       const std::vector<std::size_t>& override_ranks = {});

/// One projection per distinct projection group, streams keyed by
/// (seed, group, outer iteration) so resampling is order-independent.
ProjectionSet sample_projection_set(const std::vector<LayerInfo>& info,
                                    const std::vector<std::size_t>& ranks, ProjectionKind kind,
                                    const RngStream& base, std::uint64_t outer_k);

SmoothnessEstimate estimate_smoothness(const Objective& f, const std::vector<LayerInfo>& info,
                                       const std::vector<std::size_t>& ranks);

/// Packs the non-empty gradient matrices into a flat byte buffer (4-byte
/// float or 2-byte bfloat16 payloads) and reports its size: the measured
/// per-sync communication volume.
std::size_t serialized_gradient_bytes(const std::vector<Mat>& grads, int element_bytes);

TrainResult rso_train(Objective& f, const RsoConfig& cfg, RngStream& rng,
                      const ParamSet* w0 = nullptr);
TrainResult adam_train(Objective& f, const AdamTrainConfig& cfg, RngStream& rng,
                       const ParamSet* w0 = nullptr);
TrainResult galore_train(Objective& f, const GaloreTrainConfig& cfg, RngStream& rng,
                         const ParamSet* w0 = nullptr);

/// GaLore per-layer projection state; refreshed from the gradient's top
/// left singular vectors, moments carried across refreshes.
struct GaloreState {
  std::vector<Mat> p;  // aligned with layers; empty for unmanaged
  AdamState moments;
  long t = 0;
  int svd_warnings = 0;
};

/// Top-r left singular vectors via Jacobi eigendecomposition of the Gram
/// matrix. nullopt if the sweep cap is hit or the spectrum is too degenerate
/// to resolve r directions.
std::optional<Mat> top_left_singular_vectors(const Mat& g, std::size_t r);

// ---------------------------------------------------------------------------
// Verification harnesses

struct TheoremBoundConfig {
  std::size_t m = 32;
  std::size_t n = 8;
  std::size_t r = 8;
  ProjectionKind kind = ProjectionKind::haar;
  int k_max = 64;
  double eps = 0.0;  // 0 => exact closed-form inner solves
  int seeds = 32;
  std::uint64_t seed = 1;
};

struct TheoremBoundPoint {
  int K;
  double lhs;
  double rhs;
  bool pass;
};

struct TheoremBoundReport {
  std::vector<TheoremBoundPoint> points;
  double L_hat = 0.0;
  double delta0 = 0.0;
  double eps = 0.0;
  int seeds_used = 0;
  int seeds_excluded = 0;
  bool pass = false;
};

/// Checks (1/K) sum_k E|grad f(W^k)|^2 <= 18 L_hat Delta0 / K + 18 L_hat eps
/// on the quadratic family with eta = 1/(2 L_hat), averaging over seeds, for
/// every K in {1, 2, 4, ..., k_max}.
TheoremBoundReport verify_theorem_bound(const TheoremBoundConfig& cfg);

struct SandwichReport {
  int pairs = 0;
  int left_violations = 0;
  int right_violations = 0;
  double mu = 0.0;
  double l_g = 0.0;
  double max_left_dev = 0.0;   // violation magnitude beyond slack, 0 if none
  double max_right_dev = 0.0;
  bool pass = false;
};

/// Checks mu |dB|^2 <= <grad g(B1) - grad g(B2), B1 - B2> <= L_g |dB|^2 with
/// mu = 1/eta - L_hat and L_g = 1/eta + L_hat over random pairs, slack 1e-9.
SandwichReport verify_gk_sandwich(Objective& f, const ParamSet& w, const ProjectionSet& p,
                                  double eta, double l_hat, int pairs, RngStream& rng,
                                  double b_scale = 1.0);

}  // namespace rso
