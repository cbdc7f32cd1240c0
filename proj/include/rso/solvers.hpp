#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "rso/objectives.hpp"

namespace rso {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for one matrix.
struct AdamMoments {
  Mat m, v;
};

/// One Adam moment update for step counter t (1-based). Updates the moments
/// in place and returns the bias-corrected direction Mhat / (sqrt(Vhat) + eps);
/// the caller applies params -= lr * direction.
Mat adam_direction(AdamMoments& mom, const Mat& grad, const AdamHyper& h, long t);

/// Adam state over a family of matrices; slots with empty gradients are skipped.
struct AdamState {
  AdamHyper hyper;
  std::vector<AdamMoments> mom;
  long t = 0;

  AdamState() = default;
  AdamState(const std::vector<Mat>& like, AdamHyper h);

  std::size_t state_entries() const;
};

/// params <- params - lr * Mhat/(sqrt(Vhat)+eps), moments updated in place.
void adam_step(AdamState& st, std::vector<Mat>& params, const std::vector<Mat>& grads);

/// params <- params - lr * grads (plain (stochastic) gradient descent)
void gd_step(std::vector<Mat>& params, const std::vector<Mat>& grads, double lr);

/// Heavy-ball momentum: v <- coef * v + g; params <- params - lr * v.
struct MomentumState {
  double coef = 0.9;
  std::vector<Mat> velocity;

  MomentumState() = default;
  MomentumState(const std::vector<Mat>& like, double coef);

  std::size_t state_entries() const;
};

void momentum_step(MomentumState& st, std::vector<Mat>& params, const std::vector<Mat>& grads,
                   double lr);

/// Two-point gradient estimate d * (f(x + mu u) - f(x - mu u)) / (2 mu) * u
/// with u uniform on the unit sphere of the flattened parameter space.
/// Unbiased for the mu-smoothed objective; exact in expectation for
/// quadratics. f must return a finite value.
SubspaceParams zo_two_point_grad(const std::function<double(const SubspaceParams&)>& f,
                                 const SubspaceParams& at, double mu, RngStream& rng);

/// Upper bound on g(B) - g(B*) from mu-strong convexity: |grad|^2 / (2 mu).
double inexactness_certificate(double grad_norm_sq, double mu_strong);

/// Stopping rule for the subproblem solve: either exactly `steps` solver
/// iterations, or iterate until the certificate drops below eps (deterministic
/// objectives only), with a step cap as a safety net.
struct InexactnessTarget {
  enum class Mode { fixed_steps, certified };
  Mode mode = Mode::fixed_steps;
  int steps = 20;
  double eps = 0.0;
  int step_cap = 200;

  static InexactnessTarget fixed(int steps);
  static InexactnessTarget certified(double eps, int step_cap);
};

enum class SolverKind { gd, sgd, momentum, adam, zo, exact };

SolverKind solver_kind_from_string(const std::string& s);
std::string to_string(SolverKind k);

struct SolverSpec {
  SolverKind kind = SolverKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_num = 1e-8;
  double momentum = 0.9;
  double zo_mu = 1e-4;
};

/// What the inner solvers need from a subproblem g(B). Implementations add
/// the proximal term to both values and gradients. rng == nullptr selects
/// the deterministic evaluation.
class Subproblem {
 public:
  virtual ~Subproblem() = default;
  virtual SubspaceParams zero_b() const = 0;
  virtual double value(const SubspaceParams& b, RngStream* rng) = 0;
  virtual double value_grad(const SubspaceParams& b, RngStream* rng, SubspaceParams& b_grad,
                            ParamSet* aux_grad) = 0;
  virtual bool has_aux() const { return false; }
};

struct SolveResult {
  SubspaceParams b;
  int steps = 0;
  double eps_cert = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
  std::size_t solver_state_entries = 0;
};

/// Drives g(B) toward an inexact solution starting from B = 0 (always; the
/// outer-loop bookkeeping relies on g(0) = f(W)). In certified mode the
/// gradient is deterministic and mu_strong must be positive. The observer,
/// when given, sees every computed subspace gradient plus the matching
/// unmanaged-layer gradients (for persistent optimizer state outside the
/// subproblem).
SolveResult solve_subproblem(Subproblem& g, const SolverSpec& spec, const InexactnessTarget& target,
                             double mu_strong, RngStream& rng,
                             const std::function<void(const SubspaceParams&, const ParamSet*)>&
                                 observer = nullptr);

}  // namespace rso
