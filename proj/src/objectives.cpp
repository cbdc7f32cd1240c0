#include "rso/objectives.hpp"

#include <cmath>

#include "rso/error.hpp"

namespace rso {

namespace {

double family_norm_sq(const std::vector<Mat>& layers) {
  double s = 0.0;
  for (const Mat& m : layers) s += m.frob_norm_sq();
  return s;
}

bool family_finite(const std::vector<Mat>& layers) {
  for (const Mat& m : layers)
    if (!m.is_finite()) return false;
  return true;
}

void family_add_scaled(std::vector<Mat>& dst, const std::vector<Mat>& src, double s) {
  if (dst.size() != src.size()) throw_shape("param family size mismatch");
  for (std::size_t l = 0; l < dst.size(); ++l) {
    if (dst[l].empty() && src[l].empty()) continue;
    dst[l].add_scaled(src[l], s);
  }
}

}  // namespace

double ParamSet::norm_sq() const { return family_norm_sq(layers); }
double ParamSet::norm() const { return std::sqrt(norm_sq()); }
bool ParamSet::is_finite() const { return family_finite(layers); }
void ParamSet::add_scaled(const ParamSet& o, double s) { family_add_scaled(layers, o.layers, s); }
void ParamSet::set_zero() {
  for (Mat& m : layers)
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.0;
}

double SubspaceParams::norm_sq() const { return family_norm_sq(layers); }
bool SubspaceParams::is_finite() const { return family_finite(layers); }
void SubspaceParams::add_scaled(const SubspaceParams& o, double s) {
  family_add_scaled(layers, o.layers, s);
}
std::size_t SubspaceParams::flat_dim() const {
  std::size_t d = 0;
  for (const Mat& m : layers) d += m.size();
  return d;
}

ParamSet add_projected(const ParamSet& w, const ProjectionSet& p, const SubspaceParams& b) {
  if (w.layers.size() != p.layers.size() || w.layers.size() != b.layers.size())
    throw_shape("add_projected: family size mismatch");
  ParamSet out = w;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    if (p.layers[l].empty()) continue;
    out.layers[l] += matmul(p.layers[l], b.layers[l]);
  }
  return out;
}

SubspaceParams zero_subspace(const ProjectionSet& p, const std::vector<LayerInfo>& info) {
  SubspaceParams b;
  b.layers.resize(info.size());
  for (std::size_t l = 0; l < info.size(); ++l) {
    if (!info[l].subspace_managed) continue;
    const Mat& pl = p.layers.at(l);
    if (pl.empty()) throw_shape("zero_subspace: missing projection for managed layer");
    b.layers[l] = Mat(pl.cols(), info[l].cols);
  }
  return b;
}

// ---------------------------------------------------------------------------
// QuadraticObjective

QuadraticObjective::QuadraticObjective(ParamSet target) : target_(std::move(target)) {
  if (!target_.is_finite()) throw_numeric("QuadraticObjective: non-finite target");
}

std::vector<LayerInfo> QuadraticObjective::layers() const {
  std::vector<LayerInfo> out;
  out.reserve(target_.layers.size());
  for (std::size_t l = 0; l < target_.layers.size(); ++l)
    out.push_back({target_.layers[l].rows(), target_.layers[l].cols(), true,
                   static_cast<int>(l)});
  return out;
}

ParamSet QuadraticObjective::init_params(RngStream& rng) const {
  ParamSet w;
  for (const Mat& t : target_.layers) w.layers.push_back(gauss(rng, t.rows(), t.cols(), 1.0));
  return w;
}

double QuadraticObjective::eval(const ParamSet& w) const {
  if (w.layers.size() != target_.layers.size()) throw_shape("quadratic: layer count mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < w.layers.size(); ++l)
    s += (w.layers[l] - target_.layers[l]).frob_norm_sq();
  return 0.5 * s;
}

double QuadraticObjective::grad_full(const ParamSet& w, RngStream*, ParamSet& grad) const {
  if (w.layers.size() != target_.layers.size()) throw_shape("quadratic: layer count mismatch");
  grad.layers.clear();
  double s = 0.0;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    Mat d = w.layers[l] - target_.layers[l];
    s += d.frob_norm_sq();
    grad.layers.push_back(std::move(d));
  }
  return 0.5 * s;
}

double QuadraticObjective::grad_subspace(const ParamSet& w, const ProjectionSet& p,
                                         const SubspaceParams& b, RngStream*,
                                         SubspaceParams& b_grad, ParamSet& unmanaged_grad) const {
  ParamSet eff = add_projected(w, p, b);
  b_grad.layers.assign(w.layers.size(), Mat());
  unmanaged_grad.layers.assign(w.layers.size(), Mat());
  double s = 0.0;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    Mat d = eff.layers[l] - target_.layers[l];
    s += d.frob_norm_sq();
    b_grad.layers[l] = matmul_tn(p.layers[l], d);
  }
  return 0.5 * s;
}

double QuadraticObjective::eval_subspace(const ParamSet& w, const ProjectionSet& p,
                                         const SubspaceParams& b, RngStream*) const {
  return eval(add_projected(w, p, b));
}

std::optional<SubspaceParams> QuadraticObjective::solve_prox_exact(const ParamSet& w,
                                                                   const ProjectionSet& p,
                                                                   double inv_eta) const {
  // argmin_B 1/2 |W + P B - W*|^2 + inv_eta/2 |B|^2
  //   => (P^T P + inv_eta I) B = P^T (W* - W), solved per layer.
  SubspaceParams b;
  b.layers.assign(w.layers.size(), Mat());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const Mat& pl = p.layers[l];
    if (pl.empty()) throw_shape("solve_prox_exact: missing projection");
    Mat lhs = matmul_tn(pl, pl);
    for (std::size_t i = 0; i < lhs.rows(); ++i) lhs(i, i) += inv_eta;
    Mat rhs = matmul_tn(pl, target_.layers[l] - w.layers[l]);
    b.layers[l] = cholesky_solve(std::move(lhs), rhs);
  }
  return b;
}

// ---------------------------------------------------------------------------
// LogisticObjective

LogisticObjective::LogisticObjective(Mat features, std::vector<int> labels, std::size_t batch)
    : x_(std::move(features)), y_(std::move(labels)), batch_(batch) {
  if (x_.rows() != y_.size()) throw_shape("logistic: feature/label count mismatch");
  if (x_.rows() == 0) throw_config("logistic: empty dataset");
  if (!x_.is_finite()) throw_numeric("logistic: non-finite feature");
  for (int v : y_)
    if (v != 0 && v != 1) throw_config("logistic: labels must be 0/1");
}

LogisticObjective LogisticObjective::synthetic(RngStream& rng, std::size_t samples,
                                               std::size_t dim, std::size_t batch) {
  Mat x = gauss(rng, samples, dim, 1.0);
  Mat w_true = gauss(rng, dim, 1, 1.0);
  Mat z = matmul(x, w_true);
  std::vector<int> y(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-z(i, 0)));
    y[i] = rng.uniform() < prob ? 1 : 0;
  }
  return LogisticObjective(std::move(x), std::move(y), batch);
}

std::vector<LayerInfo> LogisticObjective::layers() const {
  return {{x_.cols(), 1, true, 0}};
}

ParamSet LogisticObjective::init_params(RngStream& rng) const {
  ParamSet w;
  w.layers.push_back(gauss(rng, x_.cols(), 1, 0.1));
  return w;
}

std::vector<std::size_t> LogisticObjective::pick_batch(RngStream* rng) const {
  std::vector<std::size_t> idx;
  if (rng == nullptr || batch_ == 0 || batch_ >= x_.rows()) {
    idx.resize(x_.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  std::vector<std::size_t> pool(x_.rows());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  idx.resize(batch_);
  for (std::size_t j = 0; j < batch_; ++j) {
    const std::size_t pick = j + rng->uniform_index(pool.size() - j);
    std::swap(pool[j], pool[pick]);
    idx[j] = pool[j];
  }
  return idx;
}

double LogisticObjective::loss_grad_at(const Mat& w_eff, const std::vector<std::size_t>& idx,
                                       Mat* grad_w) const {
  if (w_eff.rows() != x_.cols() || w_eff.cols() != 1) throw_shape("logistic: weight shape");
  if (idx.empty()) throw_config("logistic: empty batch");
  if (grad_w) *grad_w = Mat(x_.cols(), 1);
  double loss = 0.0;
  for (std::size_t i : idx) {
    double z = 0.0;
    for (std::size_t j = 0; j < x_.cols(); ++j) z += x_(i, j) * w_eff(j, 0);
    // log(1 + e^z) - y z, computed stably
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - static_cast<double>(y_[i]) * z;
    if (grad_w) {
      const double sigma = 1.0 / (1.0 + std::exp(-z));
      const double coef = sigma - static_cast<double>(y_[i]);
      for (std::size_t j = 0; j < x_.cols(); ++j) (*grad_w)(j, 0) += coef * x_(i, j);
    }
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  if (grad_w) (*grad_w) *= inv;
  return loss * inv;
}

double LogisticObjective::eval(const ParamSet& w) const {
  return loss_grad_at(w.layers.at(0), pick_batch(nullptr), nullptr);
}

double LogisticObjective::grad_full(const ParamSet& w, RngStream* rng, ParamSet& grad) const {
  grad.layers.assign(1, Mat());
  return loss_grad_at(w.layers.at(0), pick_batch(rng), &grad.layers[0]);
}

double LogisticObjective::grad_subspace(const ParamSet& w, const ProjectionSet& p,
                                        const SubspaceParams& b, RngStream* rng,
                                        SubspaceParams& b_grad, ParamSet& unmanaged_grad) const {
  ParamSet eff = add_projected(w, p, b);
  Mat gw;
  const double v = loss_grad_at(eff.layers.at(0), pick_batch(rng), &gw);
  b_grad.layers.assign(1, matmul_tn(p.layers.at(0), gw));
  unmanaged_grad.layers.assign(1, Mat());
  return v;
}

double LogisticObjective::eval_subspace(const ParamSet& w, const ProjectionSet& p,
                                        const SubspaceParams& b, RngStream* rng) const {
  return loss_grad_at(add_projected(w, p, b).layers.at(0), pick_batch(rng), nullptr);
}

std::optional<double> LogisticObjective::smoothness() const {
  if (!smoothness_) {
    // L = lambda_max(X^T X) / (4 N)
    Mat gram = matmul_tn(x_, x_);
    std::vector<double> ev;
    Mat vecs;
    sym_eig_jacobi(gram, ev, vecs);
    smoothness_ = ev.front() / (4.0 * static_cast<double>(x_.rows()));
  }
  return smoothness_;
}

std::optional<double> LogisticObjective::optimal_value() const {
  if (!fstar_) {
    // long gradient-descent run at step 1/L until the gradient is negligible
    const double lr = 1.0 / smoothness().value();
    Mat w(x_.cols(), 1);
    std::vector<std::size_t> all = pick_batch(nullptr);
    Mat g;
    double v = loss_grad_at(w, all, &g);
    for (int it = 0; it < 200000 && g.frob_norm() > 1e-10; ++it) {
      w.add_scaled(g, -lr);
      v = loss_grad_at(w, all, &g);
    }
    fstar_ = v;
  }
  return fstar_;
}

}  // namespace rso
