#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rso/mat.hpp"
#include "rso/projection.hpp"
#include "rso/rng.hpp"

namespace rso {

/// Full weight family W = {W_l}. Layer order is fixed per objective.
struct ParamSet {
  std::vector<Mat> layers;

  double norm_sq() const;
  double norm() const;
  bool is_finite() const;
  void add_scaled(const ParamSet& o, double s);
  void set_zero();
};

/// Subspace weight family B = {B_l}, shaped r_l x n_l for managed layers;
/// unmanaged slots are empty.
struct SubspaceParams {
  std::vector<Mat> layers;

  double norm_sq() const;
  bool is_finite() const;
  void add_scaled(const SubspaceParams& o, double s);
  std::size_t flat_dim() const;
};

struct LayerInfo {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool subspace_managed = true;
  /// Layers with the same non-negative group id share one projection matrix.
  int projection_group = -1;
};

/// W + P B on managed layers (unmanaged layers copied through). The engine
/// and all objectives go through this one routine so that iterates and
/// objective evaluations agree bit for bit.
ParamSet add_projected(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b);

SubspaceParams zero_subspace(const ProjectionSet& p, const std::vector<LayerInfo>& info);

/// Training problem with exact gradients w.r.t. either the full weights W or
/// the subspace weights B given (W, P). Stochastic objectives draw a
/// minibatch from `rng`; passing nullptr selects the deterministic
/// evaluation set so that traces and certificates are reproducible.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::vector<LayerInfo> layers() const = 0;
  virtual ParamSet init_params(RngStream& rng) const = 0;

  /// Deterministic objective value (full data / fixed eval batch).
  virtual double eval(const ParamSet& w) const = 0;

  /// Value and full gradient for every layer.
  virtual double grad_full(const ParamSet& w, RngStream* rng, ParamSet& grad) const = 0;

  /// Value at W + P B, gradient w.r.t. B for managed layers and full
  /// gradient for unmanaged layers in the same pass. The proximal term is
  /// not included here; the subproblem wrapper adds it.
  virtual double grad_subspace(const ParamSet& w, const ProjectionSet& p,
                               const SubspaceParams& b, RngStream* rng,
                               SubspaceParams& b_grad, ParamSet& unmanaged_grad) const = 0;

  /// Value only at W + P B (zeroth-order solvers).
  virtual double eval_subspace(const ParamSet& w, const ProjectionSet& p,
                               const SubspaceParams& b, RngStream* rng) const = 0;

  /// Smoothness constant L when known analytically.
  virtual std::optional<double> smoothness() const { return std::nullopt; }
  /// Minimum value f* when known (or computable to high precision).
  virtual std::optional<double> optimal_value() const { return std::nullopt; }

  /// Closed-form proximal subproblem solution argmin_B f(W+PB) + inv_eta/2 |B|^2
  /// where available. inv_eta = 0 means no proximal term.
  virtual std::optional<SubspaceParams> solve_prox_exact(const ParamSet& /*w*/,
                                                         const ProjectionSet& /*p*/,
                                                         double /*inv_eta*/) const {
    return std::nullopt;
  }
};

/// f(W) = 1/2 |W - W*|^2, the L = 1 smooth oracle problem. Deterministic.
class QuadraticObjective : public Objective {
 public:
  explicit QuadraticObjective(ParamSet target);

  std::vector<LayerInfo> layers() const override;
  ParamSet init_params(RngStream& rng) const override;
  double eval(const ParamSet& w) const override;
  double grad_full(const ParamSet& w, RngStream* rng, ParamSet& grad) const override;
  double grad_subspace(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b,
                       RngStream* rng, SubspaceParams& b_grad,
                       ParamSet& unmanaged_grad) const override;
  double eval_subspace(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b,
                       RngStream* rng) const override;
  std::optional<double> smoothness() const override { return 1.0; }
  std::optional<double> optimal_value() const override { return 0.0; }
  std::optional<SubspaceParams> solve_prox_exact(const ParamSet& w, const ProjectionSet& p,
                                                 double inv_eta) const override;

  const ParamSet& target() const { return target_; }

 private:
  ParamSet target_;
};

/// Mean binary cross-entropy over a fixed dataset, weights m x 1.
/// Minibatches are drawn uniformly without replacement.
class LogisticObjective : public Objective {
 public:
  LogisticObjective(Mat features, std::vector<int> labels, std::size_t batch = 0);

  static LogisticObjective synthetic(RngStream& rng, std::size_t samples, std::size_t dim,
                                     std::size_t batch = 0);

  std::vector<LayerInfo> layers() const override;
  ParamSet init_params(RngStream& rng) const override;
  double eval(const ParamSet& w) const override;
  double grad_full(const ParamSet& w, RngStream* rng, ParamSet& grad) const override;
  double grad_subspace(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b,
                       RngStream* rng, SubspaceParams& b_grad,
                       ParamSet& unmanaged_grad) const override;
  double eval_subspace(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b,
                       RngStream* rng) const override;
  std::optional<double> smoothness() const override;
  std::optional<double> optimal_value() const override;

 private:
  std::vector<std::size_t> pick_batch(RngStream* rng) const;
  double loss_grad_at(const Mat& w_eff, const std::vector<std::size_t>& idx, Mat* grad_w) const;

  Mat x_;                   // samples x dim
  std::vector<int> y_;      // 0/1 labels
  std::size_t batch_;       // 0 => full batch
  mutable std::optional<double> smoothness_;
  mutable std::optional<double> fstar_;
};

}  // namespace rso
