#include <doctest.h>

#include <cmath>

#include "rso/engine.hpp"
#include "rso/gradcheck.hpp"
#include "rso/objectives.hpp"

using namespace rso;

namespace {

ParamSet random_params(RngStream& rng, std::size_t m, std::size_t n, std::size_t layers = 1) {
  ParamSet w;
  for (std::size_t l = 0; l < layers; ++l) w.layers.push_back(gauss(rng, m, n, 1.0));
  return w;
}

}  // namespace

TEST_CASE("quadratic: minimizer and hand arithmetic") {
  RngStream rng(1);
  ParamSet target = random_params(rng, 3, 2);
  QuadraticObjective f(target);

  CHECK(f.eval(target) == 0.0);
  ParamSet g;
  CHECK(f.grad_full(target, nullptr, g) == 0.0);
  CHECK(g.norm_sq() == 0.0);

  // W - W* = all-ones 2x2 -> f = 2, grad = ones
  ParamSet t2;
  t2.layers.push_back(Mat(2, 2));
  QuadraticObjective f2(t2);
  ParamSet w;
  w.layers.push_back(Mat(2, 2, {1, 1, 1, 1}));
  ParamSet g2;
  CHECK(f2.grad_full(w, nullptr, g2) == 2.0);
  CHECK(g2.layers[0] == w.layers[0]);
}

TEST_CASE("quadratic: finite differences confirm the gradient") {
  RngStream rng(2);
  ParamSet target = random_params(rng, 4, 3);
  QuadraticObjective f(target);
  ParamSet w = random_params(rng, 4, 3);
  ParamSet g;
  f.grad_full(w, nullptr, g);
  Mat fd = fd_gradient([&] { return f.eval(w); }, w.layers[0], 1e-5);
  CHECK(grad_rel_err(g.layers[0], fd) < 1e-7);
}

TEST_CASE("quadratic: closed-form prox solve is a stationary point") {
  RngStream rng(3);
  ParamSet target = random_params(rng, 16, 4);
  QuadraticObjective f(target);
  ParamSet w = random_params(rng, 16, 4);
  const auto info = f.layers();
  const auto ranks = resolve_ranks(info, 4);
  ProjectionSet p = sample_projection_set(info, ranks, ProjectionKind::haar, rng, 0);
  const double inv_eta = 8.0;
  SubspaceParams b = *f.solve_prox_exact(w, p, inv_eta);
  // gradient of g at B*: P^T (W + P B - W*) + inv_eta B = 0
  SubspaceParams bg;
  ParamSet aux;
  f.grad_subspace(w, p, b, nullptr, bg, aux);
  bg.add_scaled(b, inv_eta);
  CHECK(std::sqrt(bg.norm_sq()) < 1e-10);
}

TEST_CASE("logistic: zero weights on a balanced batch give ln 2") {
  Mat x(4, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1});
  std::vector<int> y = {0, 1, 0, 1};
  LogisticObjective f(std::move(x), std::move(y));
  ParamSet w;
  w.layers.push_back(Mat(3, 1));
  CHECK(f.eval(w) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("logistic: gradient at zero weights is mean (1/2 - y) x") {
  RngStream rng(4);
  Mat x = gauss(rng, 32, 5, 1.0);
  std::vector<int> y(32);
  for (std::size_t i = 0; i < 32; ++i) y[i] = (i % 3 == 0) ? 1 : 0;
  Mat expected(5, 1);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      expected(j, 0) += (0.5 - static_cast<double>(y[i])) * x(i, j) / 32.0;
  LogisticObjective f(std::move(x), std::move(y));
  ParamSet w;
  w.layers.push_back(Mat(5, 1));
  ParamSet g;
  f.grad_full(w, nullptr, g);
  CHECK((g.layers[0] - expected).max_abs() < 1e-14);
}

TEST_CASE("logistic: subspace gradient equals P^T (full gradient)") {
  RngStream rng(5);
  LogisticObjective f = LogisticObjective::synthetic(rng, 64, 12);
  ParamSet w = f.init_params(rng);
  const auto info = f.layers();
  const auto ranks = resolve_ranks(info, 4);
  ProjectionSet p = sample_projection_set(info, ranks, ProjectionKind::haar, rng, 0);
  SubspaceParams b = zero_subspace(p, info);
  for (std::size_t i = 0; i < b.layers[0].size(); ++i) b.layers[0].data()[i] = 0.3 * rng.gaussian();

  SubspaceParams bg;
  ParamSet aux;
  f.grad_subspace(w, p, b, nullptr, bg, aux);

  ParamSet eff = add_projected(w, p, b);
  ParamSet gw;
  f.grad_full(eff, nullptr, gw);
  Mat want = matmul_tn(p.layers[0], gw.layers[0]);
  CHECK((bg.layers[0] - want).frob_norm() < 1e-10 * std::max(1.0, want.frob_norm()));
}

TEST_CASE("logistic: empty batch and bad labels rejected") {
  CHECK_THROWS_AS(LogisticObjective(Mat(0, 3), {}), Error);
  CHECK_THROWS_AS(LogisticObjective(Mat(1, 2, {1, 2}), {2}), Error);
}

TEST_CASE("logistic: smoothness and optimal value are usable") {
  RngStream rng(6);
  LogisticObjective f = LogisticObjective::synthetic(rng, 128, 6);
  const double L = f.smoothness().value();
  CHECK(L > 0.0);
  const double fstar = f.optimal_value().value();
  ParamSet w = f.init_params(rng);
  CHECK(fstar <= f.eval(w));
}

TEST_CASE("add_projected leaves unmanaged layers untouched") {
  RngStream rng(7);
  ParamSet w = random_params(rng, 4, 4, 2);
  ProjectionSet p;
  p.layers.resize(2);
  p.layers[0] = sample_projection(rng, 4, 2, ProjectionKind::haar);
  SubspaceParams b;
  b.layers.resize(2);
  b.layers[0] = gauss(rng, 2, 4, 1.0);
  ParamSet out = add_projected(w, p, b);
  CHECK(out.layers[1] == w.layers[1]);
  CHECK(out.layers[0] == w.layers[0] + matmul(p.layers[0], b.layers[0]));
}
