#include "rso/solvers.hpp"

#include <cmath>

#include "rso/error.hpp"

namespace rso {

Mat adam_direction(AdamMoments& mom, const Mat& grad, const AdamHyper& h, long t) {
  if (!grad.is_finite()) throw_numeric("adam: non-finite gradient");
  if (mom.m.empty()) {
    mom.m = Mat(grad.rows(), grad.cols());
    mom.v = Mat(grad.rows(), grad.cols());
  }
  if (!mom.m.same_shape(grad)) throw_shape("adam: gradient/moment shape mismatch");
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  Mat dir(grad.rows(), grad.cols());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad.data()[i];
    const double m = h.beta1 * mom.m.data()[i] + (1.0 - h.beta1) * g;
    const double v = h.beta2 * mom.v.data()[i] + (1.0 - h.beta2) * g * g;
    mom.m.data()[i] = m;
    mom.v.data()[i] = v;
    dir.data()[i] = (m / bc1) / (std::sqrt(v / bc2) + h.eps);
  }
  return dir;
}

AdamState::AdamState(const std::vector<Mat>& like, AdamHyper h) : hyper(h) {
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0 && h.beta2 >= 0.0 && h.beta2 < 1.0))
    throw_config("adam: betas must lie in [0, 1)");
  mom.resize(like.size());
  for (std::size_t l = 0; l < like.size(); ++l) {
    if (like[l].empty()) continue;
    mom[l].m = Mat(like[l].rows(), like[l].cols());
    mom[l].v = Mat(like[l].rows(), like[l].cols());
  }
}

std::size_t AdamState::state_entries() const {
  std::size_t n = 0;
  for (const AdamMoments& mm : mom) n += mm.m.size() + mm.v.size();
  return n;
}

void adam_step(AdamState& st, std::vector<Mat>& params, const std::vector<Mat>& grads) {
  if (params.size() != grads.size() || params.size() != st.mom.size())
    throw_shape("adam_step: family size mismatch");
  ++st.t;
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (grads[l].empty()) continue;
    Mat dir = adam_direction(st.mom[l], grads[l], st.hyper, st.t);
    params[l].add_scaled(dir, -st.hyper.lr);
  }
}

void gd_step(std::vector<Mat>& params, const std::vector<Mat>& grads, double lr) {
  if (params.size() != grads.size()) throw_shape("gd_step: family size mismatch");
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (grads[l].empty()) continue;
    if (!grads[l].is_finite()) throw_numeric("gd: non-finite gradient");
    params[l].add_scaled(grads[l], -lr);
  }
}

MomentumState::MomentumState(const std::vector<Mat>& like, double c) : coef(c) {
  if (!(c >= 0.0 && c < 1.0)) throw_config("momentum: coefficient must lie in [0, 1)");
  velocity.resize(like.size());
  for (std::size_t l = 0; l < like.size(); ++l)
    if (!like[l].empty()) velocity[l] = Mat(like[l].rows(), like[l].cols());
}

std::size_t MomentumState::state_entries() const {
  std::size_t n = 0;
  for (const Mat& v : velocity) n += v.size();
  return n;
}

void momentum_step(MomentumState& st, std::vector<Mat>& params, const std::vector<Mat>& grads,
                   double lr) {
  if (params.size() != grads.size() || params.size() != st.velocity.size())
    throw_shape("momentum_step: family size mismatch");
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (grads[l].empty()) continue;
    if (!grads[l].is_finite()) throw_numeric("momentum: non-finite gradient");
    Mat& v = st.velocity[l];
    v *= st.coef;
    v += grads[l];
    params[l].add_scaled(v, -lr);
  }
}

SubspaceParams zo_two_point_grad(const std::function<double(const SubspaceParams&)>& f,
                                 const SubspaceParams& at, double mu, RngStream& rng) {
  if (!(mu > 0.0)) throw_config("zo: smoothing radius must be positive");
  const std::size_t d = at.flat_dim();
  if (d == 0) throw_config("zo: empty parameter family");

  // direction uniform on the unit sphere of R^d
  SubspaceParams u = at;
  double norm_sq = 0.0;
  for (Mat& m : u.layers)
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = rng.gaussian();
      m.data()[i] = g;
      norm_sq += g * g;
    }
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (Mat& m : u.layers) m *= inv_norm;

  SubspaceParams plus = at;
  plus.add_scaled(u, mu);
  SubspaceParams minus = at;
  minus.add_scaled(u, -mu);
  const double f_plus = f(plus);
  const double f_minus = f(minus);
  if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
    throw_numeric("zo: non-finite function value");

  const double coef = static_cast<double>(d) * (f_plus - f_minus) / (2.0 * mu);
  for (Mat& m : u.layers) m *= coef;
  return u;
}

double inexactness_certificate(double grad_norm_sq, double mu_strong) {
  if (!(mu_strong > 0.0))
    throw_config("inexactness_certificate: requires eta < 1/L_hat (mu_strong > 0)");
  return grad_norm_sq / (2.0 * mu_strong);
}

InexactnessTarget InexactnessTarget::fixed(int steps) {
  InexactnessTarget t;
  t.mode = Mode::fixed_steps;
  t.steps = steps;
  return t;
}

InexactnessTarget InexactnessTarget::certified(double eps, int step_cap) {
  InexactnessTarget t;
  t.mode = Mode::certified;
  t.eps = eps;
  t.step_cap = step_cap;
  return t;
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "gd") return SolverKind::gd;
  if (s == "sgd") return SolverKind::sgd;
  if (s == "momentum") return SolverKind::momentum;
  if (s == "adam") return SolverKind::adam;
  if (s == "zo") return SolverKind::zo;
  if (s == "exact") return SolverKind::exact;
  throw_config("unknown inner solver '" + s + "'");
}

std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::gd: return "gd";
    case SolverKind::sgd: return "sgd";
    case SolverKind::momentum: return "momentum";
    case SolverKind::adam: return "adam";
    case SolverKind::zo: return "zo";
    case SolverKind::exact: return "exact";
  }
  return "?";
}

SolveResult solve_subproblem(Subproblem& g, const SolverSpec& spec, const InexactnessTarget& target,
                             double mu_strong, RngStream& rng,
                             const std::function<void(const SubspaceParams&, const ParamSet*)>&
                                 observer) {
  if (spec.kind == SolverKind::exact)
    throw_config("solve_subproblem: exact solves are dispatched by the caller");
  const bool certified_mode = (target.mode == InexactnessTarget::Mode::certified);
  if (certified_mode && spec.kind == SolverKind::zo)
    throw_config("solve_subproblem: certified mode needs exact gradients");
  if (certified_mode && g.has_aux())
    throw_config("solve_subproblem: certified mode is deterministic-objective only");

  SolveResult out;
  out.b = g.zero_b();

  AdamState adam;
  MomentumState mom;
  if (spec.kind == SolverKind::adam)
    adam = AdamState(out.b.layers, {spec.lr, spec.beta1, spec.beta2, spec.eps_num});
  if (spec.kind == SolverKind::momentum) mom = MomentumState(out.b.layers, spec.momentum);
  out.solver_state_entries = adam.state_entries() + mom.state_entries();

  const bool stochastic = !certified_mode && spec.kind != SolverKind::gd;
  const int max_steps = certified_mode ? target.step_cap : target.steps;

  SubspaceParams b_grad;
  ParamSet aux_grad;
  for (int step = 0; step < max_steps; ++step) {
    if (certified_mode) {
      g.value_grad(out.b, nullptr, b_grad, nullptr);
      const double eps_hat = inexactness_certificate(
          b_grad.norm_sq(), mu_strong);
      out.eps_cert = eps_hat;
      if (eps_hat <= target.eps) {
        out.certified = true;
        return out;
      }
    }

    if (spec.kind == SolverKind::zo) {
      RngStream step_rng = rng.derive(0x7a6f, static_cast<std::uint64_t>(step));
      RngStream dir_rng = rng.derive(0x7a6e, static_cast<std::uint64_t>(step));
      auto value_at = [&](const SubspaceParams& b) {
        RngStream batch_rng = step_rng;  // same draw for both sides
        return g.value(b, stochastic ? &batch_rng : nullptr);
      };
      b_grad = zo_two_point_grad(value_at, out.b, spec.zo_mu, dir_rng);
      if (observer) observer(b_grad, nullptr);
    } else if (!certified_mode) {
      RngStream batch_rng = rng.derive(0x6261, static_cast<std::uint64_t>(step));
      g.value_grad(out.b, stochastic ? &batch_rng : nullptr, b_grad,
                   g.has_aux() ? &aux_grad : nullptr);
      if (observer) observer(b_grad, g.has_aux() ? &aux_grad : nullptr);
    } else {
      if (observer) observer(b_grad, nullptr);
    }

    switch (spec.kind) {
      case SolverKind::gd:
      case SolverKind::sgd:
      case SolverKind::zo:
        gd_step(out.b.layers, b_grad.layers, spec.lr);
        break;
      case SolverKind::momentum:
        momentum_step(mom, out.b.layers, b_grad.layers, spec.lr);
        break;
      case SolverKind::adam:
        adam_step(adam, out.b.layers, b_grad.layers);
        break;
      case SolverKind::exact:
        break;
    }
    ++out.steps;
  }

  if (certified_mode) {
    // step cap reached: report the best-effort certificate, flag left false
    g.value_grad(out.b, nullptr, b_grad, nullptr);
    out.eps_cert = inexactness_certificate(b_grad.norm_sq(), mu_strong);
    out.certified = out.eps_cert <= target.eps;
  }
  return out;
}

}  // namespace rso
